/* Copyright 2026 The Semod Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "semod/datakit/manifest.hpp"

#include <set>
#include <sstream>

#include "semod/error.hpp"
#include "semod/fileio.hpp"

namespace semod::datakit {

using nlohmann::json;

namespace {

Box parse_box(const json& j) {
  Box b;
  b.x_min = j.at("x_min").get<double>();
  b.y_min = j.at("y_min").get<double>();
  b.x_max = j.at("x_max").get<double>();
  b.y_max = j.at("y_max").get<double>();
  if (!b.valid()) {
    throw InputError("invalid box (need 0 <= min < max)");
  }
  return b;
}

void put_box(json& j, const Box& b) {
  j["x_min"] = b.x_min;
  j["y_min"] = b.y_min;
  j["x_max"] = b.x_max;
  j["y_max"] = b.y_max;
}

ImageRecord parse_record(const json& j, const LabelMappingConfig& mapping) {
  if (!j.is_object()) throw InputError("line is not a JSON object");
  ImageRecord r;
  r.id = j.at("id").get<std::string>();
  r.image_path = j.at("image_path").get<std::string>();
  r.source_category = j.at("source_category").get<std::string>();
  r.fine_label = map_source_category(mapping, r.source_category);
  if (auto it = j.find("fine_label"); it != j.end() && !it->is_null()) {
    const FineLabel stated = parse_fine_label(it->get<std::string>());
    if (stated != r.fine_label) {
      throw InputError("fine_label '" + std::string(to_string(stated)) +
                       "' conflicts with mapping of '" + r.source_category + "' (" +
                       std::string(to_string(r.fine_label)) + ")");
    }
  }
  r.warning_neutral = j.value("warning_neutral", false);
  if (auto it = j.find("person_boxes"); it != j.end()) {
    for (const json& p : *it) {
      PersonBox pb;
      pb.box = parse_box(p);
      pb.age_group = parse_age_group(p.value("age_group", "unknown"));
      pb.sex = parse_sex(p.value("sex", "unknown"));
      pb.activity = p.value("activity", "");
      r.person_boxes.push_back(std::move(pb));
    }
  }
  if (auto it = j.find("part_boxes"); it != j.end()) {
    for (const json& p : *it) {
      BodyPartBox bb;
      bb.box = parse_box(p);
      bb.part = parse_body_part(p.at("part").get<std::string>());
      r.part_boxes.push_back(bb);
    }
  }
  validate_record(r);
  return r;
}

}  // namespace

json record_to_json(const ImageRecord& r) {
  json j;
  j["id"] = r.id;
  j["image_path"] = r.image_path;
  j["source_category"] = r.source_category;
  j["fine_label"] = std::string(to_string(r.fine_label));
  j["warning_neutral"] = r.warning_neutral;
  j["person_boxes"] = json::array();
  for (const PersonBox& p : r.person_boxes) {
    json pj;
    put_box(pj, p.box);
    pj["age_group"] = std::string(to_string(p.age_group));
    pj["sex"] = std::string(to_string(p.sex));
    pj["activity"] = p.activity;
    j["person_boxes"].push_back(std::move(pj));
  }
  j["part_boxes"] = json::array();
  for (const BodyPartBox& p : r.part_boxes) {
    json pj;
    put_box(pj, p.box);
    pj["part"] = std::string(to_string(p.part));
    j["part_boxes"].push_back(std::move(pj));
  }
  return j;
}

std::vector<ImageRecord> parse_manifest(const std::string& contents,
                                        const LabelMappingConfig& mapping) {
  std::vector<ImageRecord> records;
  std::set<std::string> seen;
  std::istringstream in(contents);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = "manifest line " + std::to_string(line_no) + ": ";
    try {
      ImageRecord r = parse_record(json::parse(line), mapping);
      if (!seen.insert(r.id).second) throw InputError("duplicate id '" + r.id + "'");
      records.push_back(std::move(r));
    } catch (const UnmappedCategoryError& e) {
      throw InputError(where + e.what());
    } catch (const json::exception& e) {
      throw InputError(where + e.what());
    } catch (const InputError& e) {
      throw InputError(where + e.what());
    }
  }
  return records;
}

std::vector<ImageRecord> load_manifest(const std::filesystem::path& path,
                                       const LabelMappingConfig& mapping) {
  try {
    return parse_manifest(read_file(path), mapping);
  } catch (const InputError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

std::string format_manifest(const std::vector<ImageRecord>& records) {
  std::string out;
  for (const ImageRecord& r : records) {
    out += record_to_json(r).dump();
    out += '\n';
  }
  return out;
}

void save_manifest(const std::filesystem::path& path, const std::vector<ImageRecord>& records) {
  write_file_atomic(path, format_manifest(records));
}

std::filesystem::path resolve_image_path(const std::filesystem::path& manifest_path,
                                         const ImageRecord& record) {
  std::filesystem::path p(record.image_path);
  if (p.is_absolute()) return p;
  return manifest_path.parent_path() / p;
}

std::vector<RgbImage> load_images(const std::filesystem::path& manifest_path,
                                  const std::vector<ImageRecord>& records) {
  std::vector<RgbImage> images;
  images.reserve(records.size());
  for (const ImageRecord& r : records) {
    try {
      images.push_back(read_ppm(resolve_image_path(manifest_path, r)));
    } catch (const InputError& e) {
      throw InputError("record '" + r.id + "': " + e.what());
    }
  }
  return images;
}

LabelMappingConfig parse_label_mapping(const std::string& contents) {
  LabelMappingConfig config;
  std::set<std::string> keys;
  json doc;
  try {
    doc = json::parse(contents, [&](int depth, json::parse_event_t event, json& parsed) {
      if (depth == 1 && event == json::parse_event_t::key) {
        const std::string key = parsed.get<std::string>();
        if (!keys.insert(key).second) {
          throw ParameterError("duplicate source category '" + key + "' in label mapping");
        }
      }
      return true;
    });
  } catch (const json::exception& e) {
    throw ParameterError(std::string("label mapping: ") + e.what());
  }
  if (!doc.is_object()) throw ParameterError("label mapping must be a JSON object");
  for (const auto& [tag, label] : doc.items()) {
    config.add(tag, parse_fine_label(label.get<std::string>()));
  }
  return config;
}

LabelMappingConfig load_label_mapping(const std::filesystem::path& path) {
  return parse_label_mapping(read_file(path));
}

}  // namespace semod::datakit
