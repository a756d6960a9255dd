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

// Synthetic proxy data. Images show flat-colored rectangular "actors" on a
// noisy gray background. An actor may carry one small saturated "mark" (the
// body-part proxy). Content fixes the label:
//   * two overlapping actors, both marked        -> sexual activity
//   * a marked actor that overlaps nobody         -> sexual posing
//   * no marks (a yellow decoy on warning images) -> neutral
// Marked groups never touch each other, so the image label is the
// max-severity of the per-actor tags written to the person boxes.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "semod/datakit/records.hpp"
#include "semod/image.hpp"

namespace semod::datakit {

struct GeneratorSpec {
  int num_samples = 0;
  // Relative weights, apportioned exactly by largest remainder.
  std::map<FineLabel, double> class_mix{{FineLabel::kSexualActivity, 1.0},
                                        {FineLabel::kSexualPosing, 1.0},
                                        {FineLabel::kNeutral, 1.0}};
  int image_width = 48;
  int image_height = 48;
  int max_actors = 3;
  double warning_fraction = 0.2;  // share of neutral images carrying a decoy
  double minor_fraction = 0.5;
  int background_min = 150;
  int background_max = 230;
  int noise = 10;
  std::string id_prefix = "img";

  // Throws ParameterError describing the first invalid field.
  void validate() const;
  // Unknown keys are rejected.
  static GeneratorSpec FromJson(const nlohmann::json& j);
  nlohmann::json ToJson() const;
};

struct SyntheticDataset {
  std::vector<ImageRecord> records;
  std::vector<RgbImage> images;  // parallel to records
};

// Exact per-class sample counts for `spec` (largest remainder, ties in
// canonical label order).
std::map<FineLabel, int> apportion_classes(const GeneratorSpec& spec);

SyntheticDataset generate_synthetic_dataset(const GeneratorSpec& spec, std::uint64_t seed);

// Renders one image of the requested label; `record` receives boxes and
// attributes (id and image_path are left empty).
RgbImage render_sample(const GeneratorSpec& spec, FineLabel label, bool warning,
                       std::uint64_t seed, ImageRecord& record);

// Writes images/<id>.ppm and manifest.jsonl under `out_dir`; returns the
// manifest path.
std::filesystem::path write_synthetic_dataset(const std::filesystem::path& out_dir,
                                              const SyntheticDataset& dataset);

// Max severity over the person-box activity tags; nullopt when an image has
// no person boxes.
std::optional<FineLabel> label_from_person_tags(const ImageRecord& record);

}  // namespace semod::datakit
