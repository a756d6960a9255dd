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

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "semod/datakit/dedup.hpp"
#include "semod/datakit/folds.hpp"
#include "semod/datakit/manifest.hpp"
#include "semod/datakit/records.hpp"
#include "semod/datakit/synthetic.hpp"
#include "semod/error.hpp"
#include "semod/rng.hpp"
#include "test_util.hpp"

namespace semod::datakit {
namespace {

using semod::testing::TempDir;
using semod::testing::write_text;

ImageRecord make_record(const std::string& id, const std::string& category,
                        std::vector<PersonBox> persons = {}) {
  ImageRecord r;
  r.id = id;
  r.image_path = "images/" + id + ".ppm";
  r.source_category = category;
  r.fine_label = map_source_category(LabelMappingConfig::Default(), category);
  r.person_boxes = std::move(persons);
  return r;
}

PersonBox person(AgeGroup age, Sex sex) { return PersonBox{Box{0, 0, 5, 5}, age, sex, ""}; }

// ---------------------------------------------------------------- manifest

TEST(ManifestTest, EmptyFileGivesEmptyList) {
  TempDir dir;
  write_text(dir / "m.jsonl", "");
  EXPECT_TRUE(load_manifest(dir / "m.jsonl", LabelMappingConfig::Default()).empty());
}

TEST(ManifestTest, OneNeutralLine) {
  const auto records = parse_manifest(
      R"({"id":"a","image_path":"a.ppm","source_category":"other neutral"})" "\n",
      LabelMappingConfig::Default());
  ASSERT_EQ(records.size(), 1u);
  EXPECT_EQ(records[0].fine_label, FineLabel::kNeutral);
}

TEST(ManifestTest, InvertedBoxNamesLine) {
  const std::string text =
      R"({"id":"a","image_path":"a.ppm","source_category":"other neutral"})" "\n"
      R"({"id":"b","image_path":"b.ppm","source_category":"other neutral",)"
      R"("person_boxes":[{"x_min":9,"y_min":0,"x_max":3,"y_max":4}]})" "\n";
  try {
    parse_manifest(text, LabelMappingConfig::Default());
    FAIL() << "expected InputError";
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }
}

TEST(ManifestTest, UnmappedCategoryNamesTag) {
  try {
    parse_manifest(R"({"id":"a","image_path":"a.ppm","source_category":"mystery"})",
                   LabelMappingConfig::Default());
    FAIL() << "expected InputError";
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("mystery"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("line 1"), std::string::npos) << e.what();
  }
}

TEST(ManifestTest, RejectsDuplicateIdsAndBadRecords) {
  const std::string line = R"({"id":"a","image_path":"a.ppm","source_category":"other neutral"})";
  EXPECT_THROW(parse_manifest(line + "\n" + line + "\n", LabelMappingConfig::Default()),
               InputError);
  EXPECT_THROW(parse_manifest(R"({"id":"a","image_path":"","source_category":"other neutral"})",
                              LabelMappingConfig::Default()),
               InputError);
  EXPECT_THROW(parse_manifest(R"({"id":"a","image_path":"a.ppm",)"
                              R"("source_category":"adult pornography","warning_neutral":true})",
                              LabelMappingConfig::Default()),
               InputError);
  EXPECT_THROW(parse_manifest(R"({"id":"a","image_path":"a.ppm",)"
                              R"("source_category":"other neutral","fine_label":"sexual_posing"})",
                              LabelMappingConfig::Default()),
               InputError);
  EXPECT_THROW(parse_manifest("{not json", LabelMappingConfig::Default()), InputError);
}

TEST(ManifestTest, SaveLoadIdentity) {
  GeneratorSpec spec;
  spec.num_samples = 40;
  const auto data = generate_synthetic_dataset(spec, 17);
  TempDir dir;
  save_manifest(dir / "m.jsonl", data.records);
  EXPECT_EQ(load_manifest(dir / "m.jsonl", LabelMappingConfig::Default()), data.records);
}

TEST(ManifestTest, LabelMappingFile) {
  const auto m = parse_label_mapping(R"({"x": "neutral", "y": "sexual_activity"})");
  EXPECT_EQ(map_source_category(m, "y"), FineLabel::kSexualActivity);
  EXPECT_THROW(parse_label_mapping(R"({"x": "neutral", "x": "neutral"})"), ParameterError);
  EXPECT_THROW(parse_label_mapping(R"(["x"])"), ParameterError);
}

// ------------------------------------------------------------------ strata

TEST(StratumTest, MajorityAndTies) {
  auto r = make_record("a", "other neutral",
                       {person(AgeGroup::kMinor, Sex::kMale), person(AgeGroup::kMinor, Sex::kFemale),
                        person(AgeGroup::kAdult, Sex::kMale)});
  StratumKey k = stratum_key(r);
  EXPECT_EQ(k.age_group, AgeGroup::kMinor);
  EXPECT_EQ(k.sex, Sex::kMale);
  r.person_boxes.pop_back();
  k = stratum_key(r);
  EXPECT_EQ(k.sex, Sex::kUnknown);
  EXPECT_EQ(k.age_group, AgeGroup::kMinor);
  r.person_boxes.clear();
  k = stratum_key(r);
  EXPECT_EQ(k.sex, Sex::kUnknown);
  EXPECT_EQ(k.age_group, AgeGroup::kUnknown);
}

// ------------------------------------------------------------------- folds

std::vector<ImageRecord> one_stratum(int n, const std::string& prefix = "r") {
  std::vector<ImageRecord> out;
  for (int i = 0; i < n; ++i) out.push_back(make_record(prefix + std::to_string(i), "other neutral"));
  return out;
}

TEST(FoldsTest, TwoStrataTwoFolds) {
  std::vector<ImageRecord> records = one_stratum(2, "n");
  records.push_back(make_record("p0", "adult pornography"));
  records.push_back(make_record("p1", "adult pornography"));
  const auto folds = stratified_folds(records, 2, 5);
  for (int f = 0; f < 2; ++f) {
    const auto ids = folds.ids_in_fold(f);
    ASSERT_EQ(ids.size(), 2u);
    EXPECT_EQ(std::count_if(ids.begin(), ids.end(), [](auto& s) { return s[0] == 'n'; }), 1);
  }
}

TEST(FoldsTest, TenRecordsTenFolds) {
  const auto folds = stratified_folds(one_stratum(10), 10, 1);
  for (std::size_t s : folds.fold_sizes()) EXPECT_EQ(s, 1u);
}

TEST(FoldsTest, TwentyThreeRecordsTenFolds) {
  // Counting oracle: 23 = 10 * 2 + 3, so three folds of 3 and seven of 2.
  const auto sizes = stratified_folds(one_stratum(23), 10, 9).fold_sizes();
  EXPECT_EQ(std::count(sizes.begin(), sizes.end(), 3u), 3);
  EXPECT_EQ(std::count(sizes.begin(), sizes.end(), 2u), 7);
}

TEST(FoldsTest, Errors) {
  EXPECT_THROW(stratified_folds(one_stratum(3), 4, 0), ParameterError);
  EXPECT_THROW(stratified_folds(one_stratum(3), 1, 0), ParameterError);
  EXPECT_THROW(stratified_folds({}, 2, 0), ParameterError);
}

TEST(FoldsTest, DeterministicAndSeedSensitive) {
  const auto records = one_stratum(50);
  EXPECT_EQ(stratified_folds(records, 5, 3).assignment, stratified_folds(records, 5, 3).assignment);
  EXPECT_NE(stratified_folds(records, 5, 3).assignment, stratified_folds(records, 5, 4).assignment);
}

TEST(FoldsTest, PartitionProperty) {
  const std::vector<std::string> cats = {"other neutral", "adult pornography", "child nudity"};
  Rng rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<ImageRecord> records;
    const int n = rng.between(10, 300);
    for (int i = 0; i < n; ++i) {
      std::vector<PersonBox> persons;
      for (int p = rng.between(0, 2); p > 0; --p) {
        persons.push_back(person(rng.below(2) ? AgeGroup::kMinor : AgeGroup::kAdult,
                                 rng.below(2) ? Sex::kMale : Sex::kFemale));
      }
      records.push_back(make_record("id" + std::to_string(i), cats[rng.below(3)], persons));
    }
    const int k = rng.between(2, 10);
    const auto folds = stratified_folds(records, k, trial);
    ASSERT_EQ(folds.assignment.size(), records.size());
    std::map<StratumKey, std::vector<int>> per_stratum;
    for (const auto& r : records) {
      const int f = folds.assignment.at(r.id);
      ASSERT_GE(f, 0);
      ASSERT_LT(f, k);
      auto& counts = per_stratum[stratum_key(r)];
      counts.resize(k, 0);
      ++counts[f];
    }
    for (const auto& [key, counts] : per_stratum) {
      const auto [lo, hi] = std::minmax_element(counts.begin(), counts.end());
      EXPECT_LE(*hi - *lo, 1);
    }
    const auto sizes = folds.fold_sizes();
    const auto [lo, hi] = std::minmax_element(sizes.begin(), sizes.end());
    EXPECT_LE(*hi - *lo, 1u);
    EXPECT_GT(*lo, 0u);
  }
}

TEST(FoldsTest, CsvRoundTripAndHoldout) {
  const auto folds = stratified_folds(one_stratum(12), 4, 2);
  const std::string csv = format_folds_csv(folds);
  EXPECT_EQ(csv.rfind("id,fold\n", 0), 0u);
  const auto back = parse_folds_csv(csv);
  EXPECT_EQ(back.assignment, folds.assignment);
  EXPECT_EQ(back.k, 4);
  EXPECT_EQ(holdout_set(folds, 3, 1), (std::set<int>{3}));
  EXPECT_EQ(holdout_set(folds, 3, 2), (std::set<int>{3, 0}));
  EXPECT_THROW(holdout_set(folds, 4, 1), ParameterError);
  EXPECT_THROW(parse_folds_csv("id,fold\na,x\n"), InputError);
  EXPECT_THROW(parse_folds_csv("bogus\n"), InputError);
}

// ------------------------------------------------------------------- dedup

TEST(DedupTest, IdenticalPair) {
  const auto r = near_duplicate_filter({{"b", {1, 2}}, {"a", {1, 2}}}, 0.1);
  EXPECT_EQ(r.kept, (std::vector<std::string>{"a"}));
  EXPECT_EQ(r.clusters.at("a"), (std::vector<std::string>{"b"}));
}

TEST(DedupTest, FarApartAllKept) {
  const auto r = near_duplicate_filter({{"a", {0, 0}}, {"b", {5, 0}}, {"c", {0, 5}}}, 1.0);
  EXPECT_EQ(r.kept.size(), 3u);
  EXPECT_TRUE(r.clusters.empty());
}

TEST(DedupTest, ThresholdZeroKeepsDistinctAndDropsExact) {
  const auto r = near_duplicate_filter({{"a", {0}}, {"b", {1e-9}}, {"c", {0}}}, 0.0);
  EXPECT_EQ(r.kept, (std::vector<std::string>{"a", "b"}));
}

TEST(DedupTest, Chain) {
  // a-b 0.5, b-c 0.5, a-c 1.0 on a line.
  const auto r = near_duplicate_filter({{"c", {1.0}}, {"b", {0.5}}, {"a", {0.0}}}, 0.6);
  EXPECT_EQ(r.kept, (std::vector<std::string>{"a", "c"}));
  EXPECT_EQ(r.clusters.at("a"), (std::vector<std::string>{"b"}));
}

TEST(DedupTest, Errors) {
  EXPECT_THROW(near_duplicate_filter({{"a", {0, 1}}, {"b", {0}}}, 1.0), InputError);
  EXPECT_THROW(near_duplicate_filter({{"a", {NAN}}}, 1.0), InputError);
  EXPECT_THROW(near_duplicate_filter({{"a", {0}}, {"a", {1}}}, 1.0), InputError);
  EXPECT_THROW(near_duplicate_filter({{"a", {0}}}, -1.0), ParameterError);
}

TEST(DedupTest, MatchesBruteForceOracle) {
  Rng rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<EmbeddingVector> vs;
    std::vector<oracle::NamedVector> ns;
    for (int i = 0; i < 120; ++i) {
      std::vector<double> v(4);
      for (double& x : v) x = rng.normal();
      const std::string id = "v" + std::to_string(rng.below(1000000)) + "_" + std::to_string(i);
      vs.push_back({id, v});
      ns.push_back({id, v});
    }
    const double thr = 0.5 + trial * 0.15;
    const auto got = near_duplicate_filter(vs, thr);
    const auto [kept, clusters] = oracle::brute_force_dedup(ns, thr);
    EXPECT_EQ(got.kept, kept);
    EXPECT_EQ(got.clusters, clusters);
  }
}

TEST(EmbeddingFileTest, BinaryAndCsvRoundTrip) {
  const std::vector<EmbeddingVector> vs = {{"a", {0.1, -2.5e-7, 3.0}}, {"b,x", {1, 2, 3}}};
  const auto bin = decode_embeddings_binary(encode_embeddings_binary(vs));
  ASSERT_EQ(bin.size(), 2u);
  EXPECT_EQ(bin[1].id, "b,x");
  EXPECT_EQ(bin[0].values, vs[0].values);

  TempDir dir;
  save_embeddings_binary(dir / "e.bin", vs);
  EXPECT_EQ(load_embeddings(dir / "e.bin")[0].values, vs[0].values);
  const std::vector<EmbeddingVector> plain = {{"a", {0.1, -2.5e-7, 3.0}}, {"b", {1, 2, 3}}};
  save_embeddings_csv(dir / "e.csv", plain);
  const auto csv = load_embeddings(dir / "e.csv");
  ASSERT_EQ(csv.size(), 2u);
  EXPECT_EQ(csv[0].values, plain[0].values);  // shortest round-trip formatting
  EXPECT_THROW(decode_embeddings_binary("SEMBxx"), InputError);
}

TEST(EmbeddingFileTest, BinaryLayoutIsLittleEndian) {
  const std::string bytes = encode_embeddings_binary({{"z", {1.0}}});
  ASSERT_EQ(bytes.size(), 4u + 4 + 8 + 4 + 4 + 1 + 8);
  EXPECT_EQ(bytes.substr(0, 4), "SEMB");
  EXPECT_EQ(static_cast<unsigned char>(bytes[4]), 1);  // version
  EXPECT_EQ(static_cast<unsigned char>(bytes[8]), 1);  // count
  EXPECT_EQ(static_cast<unsigned char>(bytes[16]), 1);  // dim
  EXPECT_EQ(static_cast<unsigned char>(bytes[20]), 1);  // id length
  EXPECT_EQ(bytes[24], 'z');
  EXPECT_EQ(static_cast<unsigned char>(bytes[32]), 0x3f);  // 1.0 high byte
}

// ------------------------------------------------------------ class counts

TEST(ClassCountsTest, Examples) {
  auto empty = class_counts({});
  for (FineLabel l : kFineLabels) EXPECT_EQ(empty.per_label.at(l), 0u);
  EXPECT_EQ(empty.warning_neutral, 0u);

  auto warn = make_record("c", "child nudity");
  warn.warning_neutral = true;
  const auto c = class_counts({make_record("a", "adult pornography"),
                               make_record("b", "adult pornography"), warn});
  EXPECT_EQ(c.per_label.at(FineLabel::kSexualActivity), 2u);
  EXPECT_EQ(c.per_label.at(FineLabel::kSexualPosing), 0u);
  EXPECT_EQ(c.per_label.at(FineLabel::kNeutral), 1u);
  EXPECT_EQ(c.warning_neutral, 1u);
}

// --------------------------------------------------------------- generator

GeneratorSpec mix_spec(int n, double a, double p, double ne) {
  GeneratorSpec spec;
  spec.num_samples = n;
  spec.class_mix = {{FineLabel::kSexualActivity, a},
                    {FineLabel::kSexualPosing, p},
                    {FineLabel::kNeutral, ne}};
  return spec;
}

TEST(GeneratorTest, ZeroSamples) {
  EXPECT_TRUE(generate_synthetic_dataset(mix_spec(0, 1, 1, 1), 1).records.empty());
}

TEST(GeneratorTest, MixThirtyThirtyFiveThirtyFive) {
  const auto data = generate_synthetic_dataset(mix_spec(200, 0.30, 0.35, 0.35), 4);
  const auto c = class_counts(data.records);
  EXPECT_EQ(c.per_label.at(FineLabel::kSexualActivity), 60u);
  EXPECT_EQ(c.per_label.at(FineLabel::kSexualPosing), 70u);
  EXPECT_EQ(c.per_label.at(FineLabel::kNeutral), 70u);
  EXPECT_EQ(c.warning_neutral, 14u);
}

TEST(GeneratorTest, AllNeutralHasNoParts) {
  const auto data = generate_synthetic_dataset(mix_spec(60, 0, 0, 1), 2);
  for (const auto& r : data.records) {
    EXPECT_EQ(r.fine_label, FineLabel::kNeutral);
    EXPECT_TRUE(r.part_boxes.empty()) << r.id;
  }
}

bool contains(const Box& outer, const Box& inner) {
  return inner.x_min >= outer.x_min && inner.y_min >= outer.y_min && inner.x_max <= outer.x_max &&
         inner.y_max <= outer.y_max;
}

// Recomputes the label from the emitted geometry alone: overlapping marked
// persons mean activity, a lone marked person means posing.
FineLabel label_from_geometry(const ImageRecord& r) {
  std::vector<const PersonBox*> marked;
  for (const auto& p : r.person_boxes) {
    for (const auto& part : r.part_boxes) {
      if (contains(p.box, part.box)) {
        marked.push_back(&p);
        break;
      }
    }
  }
  for (std::size_t i = 0; i < marked.size(); ++i) {
    for (std::size_t j = i + 1; j < marked.size(); ++j) {
      if (intersection_area(marked[i]->box, marked[j]->box) > 0) return FineLabel::kSexualActivity;
    }
  }
  return marked.empty() ? FineLabel::kNeutral : FineLabel::kSexualPosing;
}

TEST(GeneratorTest, LabelIsMaxSeverityOfObjects) {
  const auto data = generate_synthetic_dataset(mix_spec(300, 1, 1, 1), 12);
  int multi = 0;
  for (const auto& r : data.records) {
    EXPECT_EQ(label_from_person_tags(r), r.fine_label) << r.id;
    EXPECT_EQ(label_from_geometry(r), r.fine_label) << r.id;
    multi += r.person_boxes.size() > 1;
  }
  EXPECT_GT(multi, 100);
}

TEST(GeneratorTest, CategoriesMapToLabelsAndIdsArePadded) {
  const auto data = generate_synthetic_dataset(mix_spec(120, 1, 1, 1), 3);
  const auto mapping = LabelMappingConfig::Default();
  for (const auto& r : data.records) {
    EXPECT_EQ(map_source_category(mapping, r.source_category), r.fine_label) << r.id;
    EXPECT_NO_THROW(validate_record(r));
  }
  EXPECT_EQ(data.records[42].id, "img_00042");
}

TEST(GeneratorTest, Deterministic) {
  const auto a = generate_synthetic_dataset(mix_spec(30, 1, 1, 1), 77);
  const auto b = generate_synthetic_dataset(mix_spec(30, 1, 1, 1), 77);
  EXPECT_EQ(a.records, b.records);
  EXPECT_EQ(a.images, b.images);
}

TEST(GeneratorTest, SpecValidationAndJson) {
  EXPECT_THROW(mix_spec(-1, 1, 1, 1).validate(), ParameterError);
  EXPECT_THROW(GeneratorSpec::FromJson({{"num_samples", 3}, {"colour", 1}}), ParameterError);
  const GeneratorSpec spec = mix_spec(9, 0.3, 0.3, 0.4);
  EXPECT_EQ(GeneratorSpec::FromJson(spec.ToJson()).ToJson(), spec.ToJson());
}

TEST(GeneratorTest, WritesImagesAndManifest) {
  const auto data = generate_synthetic_dataset(mix_spec(5, 1, 1, 1), 1);
  TempDir dir;
  const auto manifest = write_synthetic_dataset(dir.path(), data);
  const auto records = load_manifest(manifest, LabelMappingConfig::Default());
  ASSERT_EQ(records.size(), 5u);
  EXPECT_EQ(read_ppm(resolve_image_path(manifest, records[3])), data.images[3]);
}

}  // namespace
}  // namespace semod::datakit
