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

#include "semod/datakit/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <set>

#include "semod/datakit/manifest.hpp"
#include "semod/error.hpp"
#include "semod/rng.hpp"

namespace semod::datakit {

using nlohmann::json;

namespace {

constexpr int kMinImageSide = 24;
constexpr int kMarkSize = 4;
constexpr int kPlacementAttempts = 200;

struct Color {
  int r, g, b;
};

// Actor rectangle plus its optional mark.
struct Actor {
  Box box;
  Sex sex = Sex::kFemale;
  AgeGroup age = AgeGroup::kAdult;
  Color skin{};
  std::optional<Box> mark;
  std::optional<BodyPart> part;  // empty for decoy marks
  FineLabel tag = FineLabel::kNeutral;
};

struct Group {
  std::vector<Actor> actors;
  Box bounds;
};

std::uint8_t clamp_byte(int v) { return static_cast<std::uint8_t>(std::clamp(v, 0, 255)); }

Color mark_color(std::optional<BodyPart> part, Rng& rng) {
  const int j = rng.between(-12, 12);
  if (!part) return {225 + j, 215 + j, 45};
  switch (*part) {
    case BodyPart::kFemaleGenitalia:
      return {220 + j, 30, 40};
    case BodyPart::kMaleGenitalia:
      return {185 + j, 40, 175 + j};
    case BodyPart::kAnalArea:
      return {235, 120 + j, 20};
  }
  return {220, 30, 40};
}

Actor make_actor(const GeneratorSpec& spec, Rng& rng) {
  Actor a;
  a.sex = rng.below(2) == 0 ? Sex::kFemale : Sex::kMale;
  a.age = rng.uniform() < spec.minor_fraction ? AgeGroup::kMinor : AgeGroup::kAdult;
  const int w = rng.between(8, 13);
  const int h = a.age == AgeGroup::kMinor ? rng.between(10, 14) : rng.between(14, 19);
  a.box = Box{0, 0, static_cast<double>(w), static_cast<double>(h)};
  a.skin = {rng.between(200, 235), rng.between(150, 185), rng.between(110, 145)};
  return a;
}

void add_mark(Actor& a, bool decoy, Rng& rng) {
  const int w = static_cast<int>(a.box.width());
  const int h = static_cast<int>(a.box.height());
  const int mx = rng.between(1, w - kMarkSize - 1);
  const int my = rng.between(1, h - kMarkSize - 1);
  a.mark = Box{a.box.x_min + mx, a.box.y_min + my, a.box.x_min + mx + kMarkSize,
               a.box.y_min + my + kMarkSize};
  if (decoy) return;
  if (rng.below(4) == 0) {
    a.part = BodyPart::kAnalArea;
  } else {
    a.part = a.sex == Sex::kFemale ? BodyPart::kFemaleGenitalia : BodyPart::kMaleGenitalia;
  }
}

void translate(Actor& a, double dx, double dy) {
  a.box = Box{a.box.x_min + dx, a.box.y_min + dy, a.box.x_max + dx, a.box.y_max + dy};
  if (a.mark) {
    a.mark = Box{a.mark->x_min + dx, a.mark->y_min + dy, a.mark->x_max + dx, a.mark->y_max + dy};
  }
}

Box union_box(const Box& a, const Box& b) {
  return Box{std::min(a.x_min, b.x_min), std::min(a.y_min, b.y_min), std::max(a.x_max, b.x_max),
             std::max(a.y_max, b.y_max)};
}

bool separated(const Box& a, const Box& b) {
  // At least one pixel of background between the two boxes.
  return a.x_max + 1 <= b.x_min || b.x_max + 1 <= a.x_min || a.y_max + 1 <= b.y_min ||
         b.y_max + 1 <= a.y_min;
}

// Builds a group at the origin; marks are placed in actor-local coordinates
// before the actors are moved into position.
Group make_group(const GeneratorSpec& spec, FineLabel kind, bool decoy, Rng& rng) {
  Group g;
  if (kind == FineLabel::kSexualActivity) {
    Actor a = make_actor(spec, rng);
    Actor b = make_actor(spec, rng);
    add_mark(a, false, rng);
    add_mark(b, false, rng);
    a.tag = b.tag = FineLabel::kSexualActivity;
    // b overlaps a by 3..6 px horizontally, with a vertical jitter.
    const double overlap = rng.between(3, 6);
    const double dy = rng.between(-3, 3);
    const double bx = a.box.width() - overlap;
    translate(b, bx, dy < 0 ? 0 : dy);
    if (dy < 0) translate(a, 0, -dy);
    // Keep the two marks apart so each stays a separate blob.
    for (int i = 0; i < kPlacementAttempts && !separated(*a.mark, *b.mark); ++i) {
      add_mark(b, false, rng);
    }
    g.actors = {a, b};
  } else {
    Actor a = make_actor(spec, rng);
    if (kind == FineLabel::kSexualPosing) {
      add_mark(a, false, rng);
      a.tag = FineLabel::kSexualPosing;
    } else if (decoy) {
      add_mark(a, true, rng);
    }
    g.actors = {a};
  }
  g.bounds = g.actors.front().box;
  for (const Actor& a : g.actors) g.bounds = union_box(g.bounds, a.box);
  return g;
}

bool place(Group& g, const std::vector<Group>& placed, const GeneratorSpec& spec, Rng& rng) {
  const int w = static_cast<int>(g.bounds.width());
  const int h = static_cast<int>(g.bounds.height());
  if (w > spec.image_width || h > spec.image_height) return false;
  for (int attempt = 0; attempt < kPlacementAttempts; ++attempt) {
    const int x = rng.between(0, spec.image_width - w);
    const int y = rng.between(0, spec.image_height - h);
    const Box candidate{static_cast<double>(x), static_cast<double>(y),
                        static_cast<double>(x + w), static_cast<double>(y + h)};
    const bool ok = std::all_of(placed.begin(), placed.end(),
                                [&](const Group& p) { return separated(candidate, p.bounds); });
    if (!ok) continue;
    const double dx = x - g.bounds.x_min;
    const double dy = y - g.bounds.y_min;
    for (Actor& a : g.actors) translate(a, dx, dy);
    g.bounds = candidate;
    return true;
  }
  return false;
}

void fill_rect(RgbImage& img, const Box& box, Color c, int jitter, Rng& rng) {
  for (int y = static_cast<int>(box.y_min); y < static_cast<int>(box.y_max); ++y) {
    for (int x = static_cast<int>(box.x_min); x < static_cast<int>(box.x_max); ++x) {
      const int n = jitter > 0 ? rng.between(-jitter, jitter) : 0;
      img.set(x, y, clamp_byte(c.r + n), clamp_byte(c.g + n), clamp_byte(c.b + n));
    }
  }
}

std::string source_category_for(FineLabel label, bool warning, bool any_minor, bool any_adult,
                                 Rng& rng) {
  switch (label) {
    case FineLabel::kSexualActivity:
      if (!any_minor) return "adult pornography";
      return any_adult ? "minors & adults (CSAM)" : "minors only (CSAM)";
    case FineLabel::kSexualPosing:
      return rng.below(10) < 3 ? "focus (CSAM)" : "sexual posing (CSAM)";
    case FineLabel::kNeutral:
      if (!warning) return "other neutral";
      return any_minor ? "child nudity" : "child erotism";
  }
  return "other neutral";
}

}  // namespace

void GeneratorSpec::validate() const {
  if (num_samples < 0) throw ParameterError("num_samples must be >= 0");
  double total = 0.0;
  for (const auto& [label, w] : class_mix) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw ParameterError("class_mix weights must be >= 0");
    total += w;
  }
  if (num_samples > 0 && !(total > 0.0)) throw ParameterError("class_mix weights sum to zero");
  if (image_width < kMinImageSide || image_height < kMinImageSide) {
    throw ParameterError("image_width/image_height must be >= " + std::to_string(kMinImageSide));
  }
  if (max_actors < 1) throw ParameterError("max_actors must be >= 1");
  if (!(warning_fraction >= 0.0 && warning_fraction <= 1.0)) {
    throw ParameterError("warning_fraction must lie in [0, 1]");
  }
  if (!(minor_fraction >= 0.0 && minor_fraction <= 1.0)) {
    throw ParameterError("minor_fraction must lie in [0, 1]");
  }
  if (background_min < 0 || background_max > 255 || background_min > background_max) {
    throw ParameterError("background range must satisfy 0 <= min <= max <= 255");
  }
  if (noise < 0 || noise > 64) throw ParameterError("noise must lie in [0, 64]");
  if (id_prefix.empty()) throw ParameterError("id_prefix must be non-empty");
}

GeneratorSpec GeneratorSpec::FromJson(const json& j) {
  static const std::set<std::string> kKeys = {
      "schema_version", "num_samples", "class_mix",      "image_width",    "image_height",
      "max_actors",     "warning_fraction", "minor_fraction", "background_min", "background_max",
      "noise",          "id_prefix"};
  if (!j.is_object()) throw ParameterError("generator spec must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!kKeys.contains(key)) throw ParameterError("unknown generator spec key '" + key + "'");
  }
  GeneratorSpec s;
  try {
    s.num_samples = j.value("num_samples", s.num_samples);
    if (auto it = j.find("class_mix"); it != j.end()) {
      s.class_mix.clear();
      for (const auto& [name, w] : it->items()) {
        s.class_mix[parse_fine_label(name)] = w.get<double>();
      }
    }
    s.image_width = j.value("image_width", s.image_width);
    s.image_height = j.value("image_height", s.image_height);
    s.max_actors = j.value("max_actors", s.max_actors);
    s.warning_fraction = j.value("warning_fraction", s.warning_fraction);
    s.minor_fraction = j.value("minor_fraction", s.minor_fraction);
    s.background_min = j.value("background_min", s.background_min);
    s.background_max = j.value("background_max", s.background_max);
    s.noise = j.value("noise", s.noise);
    s.id_prefix = j.value("id_prefix", s.id_prefix);
  } catch (const json::exception& e) {
    throw ParameterError(std::string("generator spec: ") + e.what());
  } catch (const InputError& e) {
    throw ParameterError(std::string("generator spec: ") + e.what());
  }
  s.validate();
  return s;
}

json GeneratorSpec::ToJson() const {
  json mix = json::object();
  for (const auto& [label, w] : class_mix) mix[std::string(to_string(label))] = w;
  return json{{"num_samples", num_samples},       {"class_mix", mix},
              {"image_width", image_width},       {"image_height", image_height},
              {"max_actors", max_actors},         {"warning_fraction", warning_fraction},
              {"minor_fraction", minor_fraction}, {"background_min", background_min},
              {"background_max", background_max}, {"noise", noise},
              {"id_prefix", id_prefix}};
}

std::map<FineLabel, int> apportion_classes(const GeneratorSpec& spec) {
  std::map<FineLabel, int> counts;
  double total = 0.0;
  for (FineLabel l : kFineLabels) {
    counts[l] = 0;
    auto it = spec.class_mix.find(l);
    if (it != spec.class_mix.end()) total += it->second;
  }
  if (spec.num_samples == 0 || total <= 0.0) return counts;
  std::vector<std::pair<double, int>> remainders;  // (fraction, label index)
  int assigned = 0;
  for (FineLabel l : kFineLabels) {
    auto it = spec.class_mix.find(l);
    const double w = it == spec.class_mix.end() ? 0.0 : it->second;
    const double exact = spec.num_samples * w / total;
    // Guard against representation error such as 200 * 0.35 = 69.99999...
    const double rounded = std::round(exact);
    const double quota = std::abs(exact - rounded) < 1e-9 ? rounded : std::floor(exact);
    counts[l] = static_cast<int>(quota);
    assigned += counts[l];
    remainders.emplace_back(exact - quota, index_of(l));
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (int i = 0; assigned < spec.num_samples; ++i, ++assigned) {
    ++counts[fine_label_at(remainders[i % remainders.size()].second)];
  }
  return counts;
}

RgbImage render_sample(const GeneratorSpec& spec, FineLabel label, bool warning,
                       std::uint64_t seed, ImageRecord& record) {
  Rng rng(seed);
  std::vector<Group> groups;

  Group primary = make_group(spec, label, warning && label == FineLabel::kNeutral, rng);
  if (!place(primary, groups, spec, rng)) {
    throw ParameterError("image too small for a primary object");
  }
  groups.push_back(std::move(primary));

  const int used = label == FineLabel::kSexualActivity ? 2 : 1;
  const int extra = rng.between(0, std::max(0, spec.max_actors - used));
  for (int i = 0; i < extra; ++i) {
    FineLabel kind = FineLabel::kNeutral;
    if (label != FineLabel::kNeutral && rng.below(2) == 0) kind = FineLabel::kSexualPosing;
    Group g = make_group(spec, kind, false, rng);
    if (place(g, groups, spec, rng)) groups.push_back(std::move(g));
  }

  const int bg = rng.between(spec.background_min, spec.background_max);
  RgbImage img(spec.image_width, spec.image_height);
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      const std::uint8_t v = clamp_byte(bg + (spec.noise ? rng.between(-spec.noise, spec.noise) : 0));
      img.set(x, y, v, v, v);
    }
  }
  // Bodies first, then marks, so overlapping actors never hide a mark.
  for (const Group& g : groups) {
    for (const Actor& a : g.actors) fill_rect(img, a.box, a.skin, 4, rng);
  }
  for (const Group& g : groups) {
    for (const Actor& a : g.actors) {
      if (a.mark) fill_rect(img, *a.mark, mark_color(a.part, rng), 6, rng);
    }
  }

  bool any_minor = false;
  bool any_adult = false;
  record.person_boxes.clear();
  record.part_boxes.clear();
  for (const Group& g : groups) {
    for (const Actor& a : g.actors) {
      record.person_boxes.push_back(
          PersonBox{a.box, a.age, a.sex, std::string(to_string(a.tag))});
      if (a.part) record.part_boxes.push_back(BodyPartBox{*a.mark, *a.part});
      any_minor |= a.age == AgeGroup::kMinor;
      any_adult |= a.age == AgeGroup::kAdult;
    }
  }
  record.fine_label = label;
  record.warning_neutral = warning && label == FineLabel::kNeutral;
  record.source_category =
      source_category_for(label, record.warning_neutral, any_minor, any_adult, rng);
  return img;
}

SyntheticDataset generate_synthetic_dataset(const GeneratorSpec& spec, std::uint64_t seed) {
  spec.validate();
  const auto counts = apportion_classes(spec);
  std::vector<FineLabel> labels;
  for (FineLabel l : kFineLabels) labels.insert(labels.end(), counts.at(l), l);

  Rng rng(seed);
  rng.shuffle(std::span<FineLabel>(labels));
  // Warning flags for an exact share of the neutral images.
  const int neutral_count = counts.at(FineLabel::kNeutral);
  const int warning_count =
      static_cast<int>(std::lround(neutral_count * spec.warning_fraction));
  std::vector<bool> warning(neutral_count, false);
  std::fill_n(warning.begin(), warning_count, true);
  {
    std::vector<char> w(warning.begin(), warning.end());
    rng.shuffle(std::span<char>(w));
    warning.assign(w.begin(), w.end());
  }

  SyntheticDataset out;
  const int digits = std::max(5, static_cast<int>(std::to_string(spec.num_samples).size()));
  int neutral_seen = 0;
  for (int i = 0; i < spec.num_samples; ++i) {
    ImageRecord r;
    std::string index = std::to_string(i);
    index.insert(0, digits - std::min<int>(digits, index.size()), '0');
    r.id = spec.id_prefix + "_" + index;
    r.image_path = "images/" + r.id + ".ppm";
    const bool warn = labels[i] == FineLabel::kNeutral && warning[neutral_seen++];
    out.images.push_back(render_sample(spec, labels[i], warn, mix_seed(seed, i + 1), r));
    out.records.push_back(std::move(r));
  }
  return out;
}

std::filesystem::path write_synthetic_dataset(const std::filesystem::path& out_dir,
                                              const SyntheticDataset& dataset) {
  for (std::size_t i = 0; i < dataset.records.size(); ++i) {
    write_ppm(out_dir / dataset.records[i].image_path, dataset.images[i]);
  }
  const auto manifest = out_dir / "manifest.jsonl";
  save_manifest(manifest, dataset.records);
  return manifest;
}

std::optional<FineLabel> label_from_person_tags(const ImageRecord& record) {
  std::optional<FineLabel> best;
  for (const PersonBox& p : record.person_boxes) {
    const FineLabel l = parse_fine_label(p.activity);
    if (!best || severity(l) > severity(*best)) best = l;
  }
  return best;
}

}  // namespace semod::datakit
