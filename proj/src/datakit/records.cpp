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

#include "semod/datakit/records.hpp"

#include <array>
#include <string>

#include "semod/error.hpp"

namespace semod::datakit {

std::string_view to_string(AgeGroup v) {
  switch (v) {
    case AgeGroup::kMinor:
      return "minor";
    case AgeGroup::kAdult:
      return "adult";
    case AgeGroup::kUnknown:
      return "unknown";
  }
  return "unknown";
}

std::string_view to_string(Sex v) {
  switch (v) {
    case Sex::kFemale:
      return "female";
    case Sex::kMale:
      return "male";
    case Sex::kUnknown:
      return "unknown";
  }
  return "unknown";
}

std::string_view to_string(BodyPart v) {
  switch (v) {
    case BodyPart::kFemaleGenitalia:
      return "female_genitalia";
    case BodyPart::kMaleGenitalia:
      return "male_genitalia";
    case BodyPart::kAnalArea:
      return "anal_area";
  }
  return "anal_area";
}

AgeGroup parse_age_group(std::string_view s) {
  for (AgeGroup v : {AgeGroup::kMinor, AgeGroup::kAdult, AgeGroup::kUnknown}) {
    if (to_string(v) == s) return v;
  }
  throw InputError("unknown age_group '" + std::string(s) + "'");
}

Sex parse_sex(std::string_view s) {
  for (Sex v : {Sex::kFemale, Sex::kMale, Sex::kUnknown}) {
    if (to_string(v) == s) return v;
  }
  throw InputError("unknown sex '" + std::string(s) + "'");
}

BodyPart parse_body_part(std::string_view s) {
  for (BodyPart v : kBodyParts) {
    if (to_string(v) == s) return v;
  }
  // Breast annotations are deliberately not part of the SE-relevant set.
  throw InputError("unknown or non-SE body part '" + std::string(s) + "'");
}

namespace {

template <typename Enum>
Enum majority(const std::array<int, 3>& votes, Enum a, Enum b, Enum unknown) {
  // votes: [a, b, unknown]
  const int best = std::max({votes[0], votes[1], votes[2]});
  int winners = 0;
  for (int v : votes) winners += (v == best);
  if (best == 0 || winners > 1) return unknown;
  if (votes[0] == best) return a;
  if (votes[1] == best) return b;
  return unknown;
}

}  // namespace

StratumKey stratum_key(const ImageRecord& record) {
  std::array<int, 3> sex_votes{};
  std::array<int, 3> age_votes{};
  for (const PersonBox& p : record.person_boxes) {
    ++sex_votes[p.sex == Sex::kFemale ? 0 : p.sex == Sex::kMale ? 1 : 2];
    ++age_votes[p.age_group == AgeGroup::kMinor ? 0 : p.age_group == AgeGroup::kAdult ? 1 : 2];
  }
  StratumKey key;
  key.source_category = record.source_category;
  key.sex = majority(sex_votes, Sex::kFemale, Sex::kMale, Sex::kUnknown);
  key.age_group = majority(age_votes, AgeGroup::kMinor, AgeGroup::kAdult, AgeGroup::kUnknown);
  return key;
}

void validate_record(const ImageRecord& record) {
  if (record.id.empty()) throw InputError("record id is empty");
  if (record.image_path.empty()) throw InputError("image_path is empty for '" + record.id + "'");
  if (record.warning_neutral && record.fine_label != FineLabel::kNeutral) {
    throw InputError("warning_neutral set on non-neutral record '" + record.id + "'");
  }
  for (const PersonBox& p : record.person_boxes) {
    if (!p.box.valid()) throw InputError("invalid person box in '" + record.id + "'");
  }
  for (const BodyPartBox& p : record.part_boxes) {
    if (!p.box.valid()) throw InputError("invalid part box in '" + record.id + "'");
  }
}

ClassCounts class_counts(const std::vector<ImageRecord>& records) {
  ClassCounts counts;
  for (const ImageRecord& r : records) {
    ++counts.per_label[r.fine_label];
    if (r.warning_neutral) ++counts.warning_neutral;
  }
  return counts;
}

}  // namespace semod::datakit
