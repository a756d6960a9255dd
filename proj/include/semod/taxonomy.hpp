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

// Label system: the fine three-class taxonomy, its SE/NS coarsening, the
// severity order used for patch aggregation, the two-model CSAM decision and
// the COPINE correspondence.

#include <array>
#include <map>
#include <string>
#include <string_view>

namespace semod {

enum class FineLabel { kSexualActivity, kSexualPosing, kNeutral };
enum class BinaryLabel { kSE, kNS };
enum class AgePresence { kMinorPresent, kAdultsOnly };
enum class FinalClass { kCSAM, kAdultPornography, kNeutral };

// Canonical index order used by Prob3/Logits3 and confusion matrices.
inline constexpr std::array<FineLabel, 3> kFineLabels = {
    FineLabel::kSexualActivity, FineLabel::kSexualPosing, FineLabel::kNeutral};
inline constexpr std::array<BinaryLabel, 2> kBinaryLabels = {BinaryLabel::kSE,
                                                             BinaryLabel::kNS};
inline constexpr std::array<AgePresence, 2> kAgePresences = {
    AgePresence::kMinorPresent, AgePresence::kAdultsOnly};

constexpr int index_of(FineLabel label) { return static_cast<int>(label); }
constexpr FineLabel fine_label_at(int index) { return kFineLabels.at(index); }

// Severity rank in {1, 2, 3}; larger is graver.
class SeverityRank {
 public:
  explicit constexpr SeverityRank(int value) : value_(value) {}
  constexpr int value() const { return value_; }
  friend constexpr auto operator<=>(SeverityRank, SeverityRank) = default;

 private:
  int value_;
};

constexpr BinaryLabel to_binary(FineLabel label) {
  return label == FineLabel::kNeutral ? BinaryLabel::kNS : BinaryLabel::kSE;
}

constexpr SeverityRank severity(FineLabel label) {
  switch (label) {
    case FineLabel::kNeutral:
      return SeverityRank(1);
    case FineLabel::kSexualPosing:
      return SeverityRank(2);
    case FineLabel::kSexualActivity:
      return SeverityRank(3);
  }
  return SeverityRank(1);
}

constexpr FinalClass csam_decision(AgePresence age, BinaryLabel se) {
  if (se == BinaryLabel::kNS) return FinalClass::kNeutral;
  return age == AgePresence::kMinorPresent ? FinalClass::kCSAM
                                           : FinalClass::kAdultPornography;
}

// "L6", "L7" or "below-L6".
std::string_view copine_map(FineLabel label);

// Lowercase snake_case wire names.
std::string_view to_string(FineLabel label);
std::string_view to_string(BinaryLabel label);
std::string_view to_string(AgePresence age);
std::string_view to_string(FinalClass label);

// Parsers throw InputError on unknown names.
FineLabel parse_fine_label(std::string_view name);
BinaryLabel parse_binary_label(std::string_view name);
AgePresence parse_age_presence(std::string_view name);
FinalClass parse_final_class(std::string_view name);

// Source-category tag -> fine label. Lookups of unknown tags throw
// UnmappedCategoryError; there is no fallback label.
class LabelMappingConfig {
 public:
  LabelMappingConfig() = default;
  explicit LabelMappingConfig(std::map<std::string, FineLabel> entries);

  // Throws ParameterError on a duplicate key.
  void add(const std::string& tag, FineLabel label);
  bool contains(std::string_view tag) const;
  const std::map<std::string, FineLabel, std::less<>>& entries() const { return entries_; }

  // Mapping for the ten global categories of the hotline annotation scheme.
  // The authoritative assignment is unpublished; override it per deployment.
  static LabelMappingConfig Default();

 private:
  std::map<std::string, FineLabel, std::less<>> entries_;
};

FineLabel map_source_category(const LabelMappingConfig& config, std::string_view tag);

}  // namespace semod
