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

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "semod/datakit/records.hpp"
#include "semod/image.hpp"
#include "semod/taxonomy.hpp"

namespace semod::datakit {

// JSON-lines manifest, one ImageRecord per line:
//   {"id", "image_path", "source_category", "fine_label", "warning_neutral",
//    "person_boxes": [{x_min,y_min,x_max,y_max,age_group,sex,activity}],
//    "part_boxes": [{x_min,y_min,x_max,y_max,part}]}
// `fine_label` is derived from `source_category` through the mapping; when
// the line carries it explicitly it must agree. Errors name the 1-based line.
std::vector<ImageRecord> load_manifest(const std::filesystem::path& path,
                                       const LabelMappingConfig& mapping);
std::vector<ImageRecord> parse_manifest(const std::string& contents,
                                        const LabelMappingConfig& mapping);

void save_manifest(const std::filesystem::path& path, const std::vector<ImageRecord>& records);
std::string format_manifest(const std::vector<ImageRecord>& records);

nlohmann::json record_to_json(const ImageRecord& record);

// Relative image paths are resolved against the manifest's directory.
std::filesystem::path resolve_image_path(const std::filesystem::path& manifest_path,
                                         const ImageRecord& record);

// Decodes every record's image, in record order. Errors name the record.
std::vector<RgbImage> load_images(const std::filesystem::path& manifest_path,
                                  const std::vector<ImageRecord>& records);

// Mapping file: a JSON object {"<source category>": "<fine label>", ...}.
// Duplicate keys are rejected.
LabelMappingConfig load_label_mapping(const std::filesystem::path& path);
LabelMappingConfig parse_label_mapping(const std::string& contents);

}  // namespace semod::datakit
