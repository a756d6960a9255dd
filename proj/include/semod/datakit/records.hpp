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

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "semod/geometry.hpp"
#include "semod/taxonomy.hpp"

namespace semod::datakit {

enum class AgeGroup { kMinor, kAdult, kUnknown };
enum class Sex { kFemale, kMale, kUnknown };
enum class BodyPart { kFemaleGenitalia, kMaleGenitalia, kAnalArea };

inline constexpr BodyPart kBodyParts[] = {BodyPart::kFemaleGenitalia,
                                          BodyPart::kMaleGenitalia, BodyPart::kAnalArea};

std::string_view to_string(AgeGroup v);
std::string_view to_string(Sex v);
std::string_view to_string(BodyPart v);
AgeGroup parse_age_group(std::string_view s);
Sex parse_sex(std::string_view s);
BodyPart parse_body_part(std::string_view s);

struct PersonBox {
  Box box;
  AgeGroup age_group = AgeGroup::kUnknown;
  Sex sex = Sex::kUnknown;
  // Visible-activity tag; the synthetic generator writes fine-label names.
  std::string activity;

  friend bool operator==(const PersonBox&, const PersonBox&) = default;
};

struct BodyPartBox {
  Box box;
  BodyPart part = BodyPart::kFemaleGenitalia;

  friend bool operator==(const BodyPartBox&, const BodyPartBox&) = default;
};

struct ImageRecord {
  std::string id;
  std::string image_path;
  FineLabel fine_label = FineLabel::kNeutral;
  std::string source_category;
  bool warning_neutral = false;
  std::vector<PersonBox> person_boxes;
  std::vector<BodyPartBox> part_boxes;

  friend bool operator==(const ImageRecord&, const ImageRecord&) = default;
};

// Per-image attributes used for fold stratification. Sex and age group come
// from a strict majority over person boxes; ties and box-less images give
// kUnknown.
struct StratumKey {
  std::string source_category;
  Sex sex = Sex::kUnknown;
  AgeGroup age_group = AgeGroup::kUnknown;

  friend auto operator<=>(const StratumKey&, const StratumKey&) = default;
};

StratumKey stratum_key(const ImageRecord& record);

// Checks record-level invariants; throws InputError naming the violation.
void validate_record(const ImageRecord& record);

struct ClassCounts {
  std::map<FineLabel, std::size_t> per_label{{FineLabel::kSexualActivity, 0},
                                             {FineLabel::kSexualPosing, 0},
                                             {FineLabel::kNeutral, 0}};
  std::size_t warning_neutral = 0;
};

ClassCounts class_counts(const std::vector<ImageRecord>& records);

}  // namespace semod::datakit
