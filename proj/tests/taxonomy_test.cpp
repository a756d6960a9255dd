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

#include <set>

#include <gtest/gtest.h>

#include "semod/error.hpp"

namespace semod {
namespace {

TEST(TaxonomyTest, ToBinary) {
  EXPECT_EQ(to_binary(FineLabel::kSexualActivity), BinaryLabel::kSE);
  EXPECT_EQ(to_binary(FineLabel::kSexualPosing), BinaryLabel::kSE);
  EXPECT_EQ(to_binary(FineLabel::kNeutral), BinaryLabel::kNS);
}

TEST(TaxonomyTest, SeverityRanks) {
  EXPECT_EQ(severity(FineLabel::kNeutral).value(), 1);
  EXPECT_EQ(severity(FineLabel::kSexualPosing).value(), 2);
  EXPECT_EQ(severity(FineLabel::kSexualActivity).value(), 3);
  EXPECT_LT(severity(FineLabel::kNeutral), severity(FineLabel::kSexualPosing));
  EXPECT_LT(severity(FineLabel::kSexualPosing), severity(FineLabel::kSexualActivity));
}

TEST(TaxonomyTest, SeverityAtLeastTwoIffSE) {
  for (FineLabel l : kFineLabels) {
    EXPECT_EQ(severity(l).value() >= 2, to_binary(l) == BinaryLabel::kSE) << to_string(l);
  }
}

TEST(TaxonomyTest, CsamDecisionIsTotalAndMatchesSchema) {
  EXPECT_EQ(csam_decision(AgePresence::kMinorPresent, BinaryLabel::kSE), FinalClass::kCSAM);
  EXPECT_EQ(csam_decision(AgePresence::kAdultsOnly, BinaryLabel::kSE),
            FinalClass::kAdultPornography);
  EXPECT_EQ(csam_decision(AgePresence::kMinorPresent, BinaryLabel::kNS), FinalClass::kNeutral);
  EXPECT_EQ(csam_decision(AgePresence::kAdultsOnly, BinaryLabel::kNS), FinalClass::kNeutral);
  for (AgePresence a : kAgePresences) {
    for (BinaryLabel b : kBinaryLabels) {
      EXPECT_EQ(csam_decision(a, b) == FinalClass::kCSAM,
                a == AgePresence::kMinorPresent && b == BinaryLabel::kSE);
    }
    EXPECT_EQ(csam_decision(a, to_binary(FineLabel::kNeutral)), FinalClass::kNeutral);
  }
}

TEST(TaxonomyTest, CopineMapping) {
  EXPECT_EQ(copine_map(FineLabel::kSexualPosing), "L6");
  EXPECT_EQ(copine_map(FineLabel::kSexualActivity), "L7");
  EXPECT_EQ(copine_map(FineLabel::kNeutral), "below-L6");
  EXPECT_NE(copine_map(FineLabel::kSexualPosing), copine_map(FineLabel::kSexualActivity));
}

TEST(TaxonomyTest, WireNamesRoundTrip) {
  std::set<std::string_view> names;
  for (FineLabel l : kFineLabels) {
    EXPECT_EQ(parse_fine_label(to_string(l)), l);
    names.insert(to_string(l));
  }
  EXPECT_EQ(names.size(), 3u);
  EXPECT_EQ(to_string(FineLabel::kSexualActivity), "sexual_activity");
  EXPECT_EQ(to_string(BinaryLabel::kSE), "se");
  EXPECT_EQ(to_string(BinaryLabel::kNS), "ns");
  EXPECT_EQ(to_string(FinalClass::kCSAM), "csam");
  EXPECT_EQ(to_string(FinalClass::kAdultPornography), "adult_pornography");
  for (BinaryLabel b : kBinaryLabels) EXPECT_EQ(parse_binary_label(to_string(b)), b);
  for (AgePresence a : kAgePresences) EXPECT_EQ(parse_age_presence(to_string(a)), a);
  EXPECT_THROW(parse_fine_label("explicit"), InputError);
}

TEST(TaxonomyTest, MapSourceCategory) {
  const auto config = LabelMappingConfig::Default();
  EXPECT_EQ(map_source_category(config, "adult pornography"), FineLabel::kSexualActivity);
  EXPECT_EQ(map_source_category(config, "other neutral"), FineLabel::kNeutral);
  EXPECT_EQ(map_source_category(config, "sexual posing (CSAM)"), FineLabel::kSexualPosing);
  EXPECT_THROW(map_source_category(config, "unknown-tag"), UnmappedCategoryError);
  EXPECT_EQ(config.entries().size(), 10u);
}

TEST(TaxonomyTest, MappingRejectsDuplicateKeys) {
  LabelMappingConfig config;
  config.add("a", FineLabel::kNeutral);
  EXPECT_THROW(config.add("a", FineLabel::kSexualPosing), ParameterError);
}

}  // namespace
}  // namespace semod
