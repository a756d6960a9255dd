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

#include "semod/taxonomy.hpp"

#include <string>

#include "semod/error.hpp"

namespace semod {

std::string_view copine_map(FineLabel label) {
  switch (label) {
    case FineLabel::kSexualPosing:
      return "L6";
    case FineLabel::kSexualActivity:
      return "L7";
    case FineLabel::kNeutral:
      return "below-L6";
  }
  return "below-L6";
}

std::string_view to_string(FineLabel label) {
  switch (label) {
    case FineLabel::kSexualActivity:
      return "sexual_activity";
    case FineLabel::kSexualPosing:
      return "sexual_posing";
    case FineLabel::kNeutral:
      return "neutral";
  }
  return "neutral";
}

std::string_view to_string(BinaryLabel label) {
  return label == BinaryLabel::kSE ? "se" : "ns";
}

std::string_view to_string(AgePresence age) {
  return age == AgePresence::kMinorPresent ? "minor_present" : "adults_only";
}

std::string_view to_string(FinalClass label) {
  switch (label) {
    case FinalClass::kCSAM:
      return "csam";
    case FinalClass::kAdultPornography:
      return "adult_pornography";
    case FinalClass::kNeutral:
      return "neutral";
  }
  return "neutral";
}

FineLabel parse_fine_label(std::string_view name) {
  for (FineLabel l : kFineLabels) {
    if (to_string(l) == name) return l;
  }
  throw InputError("unknown fine label '" + std::string(name) + "'");
}

BinaryLabel parse_binary_label(std::string_view name) {
  for (BinaryLabel l : kBinaryLabels) {
    if (to_string(l) == name) return l;
  }
  throw InputError("unknown binary label '" + std::string(name) + "'");
}

AgePresence parse_age_presence(std::string_view name) {
  for (AgePresence a : kAgePresences) {
    if (to_string(a) == name) return a;
  }
  throw InputError("unknown age presence '" + std::string(name) + "'");
}

FinalClass parse_final_class(std::string_view name) {
  for (FinalClass c : {FinalClass::kCSAM, FinalClass::kAdultPornography,
                       FinalClass::kNeutral}) {
    if (to_string(c) == name) return c;
  }
  throw InputError("unknown final class '" + std::string(name) + "'");
}

LabelMappingConfig::LabelMappingConfig(std::map<std::string, FineLabel> entries)
    : entries_(entries.begin(), entries.end()) {}

void LabelMappingConfig::add(const std::string& tag, FineLabel label) {
  if (!entries_.emplace(tag, label).second) {
    throw ParameterError("duplicate source category '" + tag + "' in label mapping");
  }
}

bool LabelMappingConfig::contains(std::string_view tag) const {
  return entries_.find(tag) != entries_.end();
}

LabelMappingConfig LabelMappingConfig::Default() {
  return LabelMappingConfig({
      {"adult pornography", FineLabel::kSexualActivity},
      {"minors only (CSAM)", FineLabel::kSexualActivity},
      {"minors & adults (CSAM)", FineLabel::kSexualActivity},
      {"in the presence of a minor (CSAM)", FineLabel::kSexualActivity},
      {"other (CSAM)", FineLabel::kSexualActivity},
      {"sexual posing (CSAM)", FineLabel::kSexualPosing},
      {"focus (CSAM)", FineLabel::kSexualPosing},
      {"child erotism", FineLabel::kNeutral},
      {"child nudity", FineLabel::kNeutral},
      {"other neutral", FineLabel::kNeutral},
  });
}

FineLabel map_source_category(const LabelMappingConfig& config, std::string_view tag) {
  auto it = config.entries().find(tag);
  if (it == config.entries().end()) throw UnmappedCategoryError(std::string(tag));
  return it->second;
}

}  // namespace semod
