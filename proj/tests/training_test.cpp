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

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "semod/datakit/synthetic.hpp"
#include "semod/error.hpp"
#include "semod/rng.hpp"
#include "semod/training/checkpoint.hpp"
#include "semod/training/optimizer.hpp"
#include "semod/training/reference_cnn.hpp"
#include "semod/training/trainer.hpp"
#include "test_util.hpp"

namespace semod::training {
namespace {

using semod::testing::TempDir;

ReferenceCnn::Config small_config() { return {16, 4, 6}; }

// Toy set the network separates easily: the label is carried by the mean
// intensity of the whole image.
std::vector<LabeledSample> toy_samples(int n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<LabeledSample> out;
  for (int i = 0; i < n; ++i) {
    const FineLabel label = fine_label_at(i % 3);
    RgbImage img(16, 16);
    const int base = label == FineLabel::kSexualActivity ? 220
                     : label == FineLabel::kSexualPosing ? 130
                                                         : 40;
    for (int y = 0; y < 16; ++y) {
      for (int x = 0; x < 16; ++x) {
        const int v = std::clamp(base + rng.between(-20, 20), 0, 255);
        img.set(x, y, v, label == FineLabel::kSexualPosing ? 20 : v, v);
      }
    }
    out.push_back({"t" + std::to_string(i), to_input(img, 16, 16), label});
  }
  return out;
}

StageSpec toy_stage(int epochs, double lr) {
  StageSpec s;
  s.name = "toy";
  s.epochs = epochs;
  s.batch_size = 8;
  s.optimizer.learning_rate = lr;
  return s;
}

InputTensor random_input(int side, Rng& rng) {
  InputTensor x;
  x.height = x.width = side;
  x.values.resize(3 * side * side);
  for (double& v : x.values) v = rng.uniform(-0.5, 0.5);
  return x;
}

TEST(ReferenceCnnTest, GradientMatchesFiniteDifferences) {
  ReferenceCnn net(small_config(), 3);
  Rng rng(4);
  int checked = 0, bad = 0;
  for (int trial = 0; trial < 4; ++trial) {
    const InputTensor x = random_input(16, rng);
    const FineLabel target = fine_label_at(trial % 3);
    const double alpha = rng.uniform();
    std::vector<double> grad(net.parameters().size(), 0.0);
    net.accumulate_gradient(x, target, alpha, grad);
    for (int k = 0; k < 60; ++k) {
      const std::size_t p = rng.below(grad.size());
      const double fd = oracle::central_difference(
          [&](const std::vector<double>& w) {
            ReferenceCnn probe = net;
            std::copy(w.begin(), w.end(), probe.parameters().begin());
            const Logits3 z = probe.forward(x);
            return oracle::direct_hce({z[0], z[1], z[2]}, index_of(target), alpha);
          },
          std::vector<double>(net.parameters().begin(), net.parameters().end()), p, 1e-6);
      ++checked;
      // Kinks of ReLU/max can sit inside the difference interval.
      if (std::abs(fd - grad[p]) > 1e-5 * std::max(1.0, std::abs(fd))) ++bad;
    }
  }
  EXPECT_LE(bad, checked / 50) << bad << " of " << checked;
}

TEST(ReferenceCnnTest, ForwardIsDeterministicAndEmbedSized) {
  ReferenceCnn net(small_config(), 9);
  Rng rng(1);
  const InputTensor x = random_input(16, rng);
  const Logits3 a = net.forward(x), b = net.forward(x);
  for (int i = 0; i < 3; ++i) EXPECT_EQ(a[i], b[i]);
  EXPECT_EQ(net.embed(x).size(), 12u);
  const auto [hb, he] = net.head_range();
  EXPECT_EQ(he - hb, 12u * 3 + 3);
  EXPECT_EQ(he, net.parameters().size());
  InputTensor wrong = random_input(8, rng);
  EXPECT_THROW(net.forward(wrong), InputError);
}

TEST(ReferenceCnnTest, FactoryRejectsUnknownFields) {
  EXPECT_THROW(make_backbone({{"kind", "resnet50"}}, 1), ParameterError);
  EXPECT_THROW(make_backbone({{"kind", "reference_cnn"}, {"depth", 3}}, 1), ParameterError);
  const auto net = make_backbone({{"kind", "reference_cnn"}, {"input_size", 16}}, 1);
  EXPECT_EQ(net->input_width(), 16);
  EXPECT_EQ(make_backbone(net->architecture(), 1)->parameters().size(), net->parameters().size());
}

TEST(TrainStageTest, ToyLossDecreases) {
  ReferenceCnn net(small_config(), 1);
  const std::vector<TrainSource> train = {{toy_samples(48, 2), 1.0}};
  const auto h = train_stage(net, toy_stage(5, 0.05), train, {}, 7);
  ASSERT_EQ(h.epochs.size(), 5u);
  EXPECT_LT(h.epochs.back().mean_loss, h.epochs.front().mean_loss);
  for (const auto& e : h.epochs) EXPECT_TRUE(std::isfinite(e.mean_loss));
}

TEST(TrainStageTest, ZeroLearningRateLeavesParametersAndLossConstant) {
  ReferenceCnn net(small_config(), 1);
  const std::vector<double> before(net.parameters().begin(), net.parameters().end());
  const std::vector<TrainSource> train = {{toy_samples(20, 2), 1.0}};
  const auto h = train_stage(net, toy_stage(3, 0.0), train, {}, 7);
  EXPECT_TRUE(std::equal(before.begin(), before.end(), net.parameters().begin()));
  for (const auto& e : h.epochs) EXPECT_EQ(e.mean_loss, h.epochs.front().mean_loss);
}

TEST(TrainStageTest, SameSeedSameHistoryAnyThreadCount) {
  const std::vector<TrainSource> train = {{toy_samples(30, 2), 1.0}, {toy_samples(9, 5), 0.5}};
  const auto val = toy_samples(12, 3);
  ReferenceCnn a(small_config(), 1), b(small_config(), 1), c(small_config(), 1);
  const auto ha = train_stage(a, toy_stage(2, 0.05), train, val, 7);
  const auto hb = train_stage(b, toy_stage(2, 0.05), train, val, 7);
  TrainOptions threaded;
  threaded.threads = 3;
  const auto hc = train_stage(c, toy_stage(2, 0.05), train, val, 7, threaded);
  EXPECT_EQ(ha, hb);
  EXPECT_EQ(ha, hc);
  EXPECT_TRUE(std::equal(a.parameters().begin(), a.parameters().end(), c.parameters().begin()));
  ASSERT_TRUE(ha.epochs[0].val_binary_accuracy.has_value());
}

TEST(TrainStageTest, ResumeReplaysRemainingEpochs) {
  const std::vector<TrainSource> train = {{toy_samples(24, 2), 1.0}};
  ReferenceCnn full(small_config(), 1);
  const auto h_full = train_stage(full, toy_stage(3, 0.05), train, {}, 7);

  ReferenceCnn part(small_config(), 1);
  std::vector<double> saved_state;
  TrainOptions first;
  first.on_epoch_end = [&](const EpochRecord& r, const Backbone&, const Optimizer& opt) {
    if (r.epoch == 1) saved_state = opt.state();
  };
  auto one = toy_stage(1, 0.05);
  train_stage(part, one, train, {}, 7, first);
  TrainOptions resume;
  resume.start_epoch = 2;
  resume.optimizer_state = saved_state;
  const auto h_rest = train_stage(part, toy_stage(3, 0.05), train, {}, 7, resume);
  ASSERT_EQ(h_rest.epochs.size(), 2u);
  EXPECT_EQ(h_rest.epochs[0].epoch, 2);
  EXPECT_EQ(h_rest.epochs[1], h_full.epochs[2]);
  EXPECT_TRUE(std::equal(full.parameters().begin(), full.parameters().end(),
                         part.parameters().begin()));
}

TEST(TrainStageTest, DivergenceIsReported) {
  ReferenceCnn net(small_config(), 1);
  auto samples = toy_samples(6, 2);
  samples[3].input.values[5] = std::nan("");
  const std::vector<TrainSource> train = {{samples, 1.0}};
  EXPECT_THROW(train_stage(net, toy_stage(1, 0.05), train, {}, 7), DivergenceError);

  ReferenceCnn net2(small_config(), 1);
  const std::vector<TrainSource> clean = {{toy_samples(6, 2), 1.0}};
  EXPECT_THROW(train_stage(net2, toy_stage(3, 1e300), clean, {}, 7), DivergenceError);
}

TEST(TrainStageTest, RejectsBadSpecs) {
  ReferenceCnn net(small_config(), 1);
  const std::vector<TrainSource> train = {{toy_samples(6, 2), 1.0}};
  auto s = toy_stage(0, 0.05);
  EXPECT_THROW(train_stage(net, s, train, {}, 1), ParameterError);
  s = toy_stage(1, 0.05);
  s.alpha = 1.5;
  EXPECT_THROW(train_stage(net, s, train, {}, 1), ParameterError);
  EXPECT_THROW(train_stage(net, toy_stage(1, 0.05), {}, {}, 1), ParameterError);
  EXPECT_THROW(StageSpec::FromJson({{"name", "x"}, {"epoch", 2}}), ParameterError);
}

TEST(StageSpecTest, JsonRoundTripAndWeights) {
  StageSpec s = StageSpec::FromJson({{"name", "pre"},
                                     {"datasets", {{{"manifest", "a.jsonl"}, {"weight", 3}},
                                                   {{"manifest", "b.jsonl"}}}},
                                     {"epochs", 4},
                                     {"learning_rate", 0.01},
                                     {"freeze_policy", "backbone_frozen"},
                                     {"optimizer", "adam"}});
  EXPECT_EQ(s.freeze_policy, FreezePolicy::kBackboneFrozen);
  EXPECT_EQ(s.optimizer.kind, OptimizerConfig::Kind::kAdam);
  EXPECT_EQ(s.normalized_weights(), (std::vector<double>{0.75, 0.25}));
  EXPECT_EQ(StageSpec::FromJson(s.ToJson()).ToJson(), s.ToJson());
}

TEST(StagedTest, SingleStageEqualsTrainStage) {
  const std::vector<TrainSource> train = {{toy_samples(18, 2), 1.0}};
  ReferenceCnn a(small_config(), 1), b(small_config(), 1);
  const auto h = train_stage(a, toy_stage(2, 0.05), train, {}, 11);
  const std::vector<StageRun> runs = {{toy_stage(2, 0.05), train, {}}};
  const auto hs = pretrain_then_finetune(b, runs, 11);
  ASSERT_EQ(hs.size(), 1u);
  EXPECT_EQ(hs[0], h);
  EXPECT_TRUE(std::equal(a.parameters().begin(), a.parameters().end(), b.parameters().begin()));
}

TEST(StagedTest, FrozenSecondStageTouchesOnlyHead) {
  ReferenceCnn net(small_config(), 1);
  auto frozen = toy_stage(2, 0.05);
  frozen.freeze_policy = FreezePolicy::kBackboneFrozen;
  const std::vector<StageRun> runs = {{toy_stage(1, 0.05), {{toy_samples(12, 2), 1.0}}, {}},
                                      {frozen, {{toy_samples(12, 4), 1.0}}, {}}};
  std::vector<double> after_first;
  StagedOptions opts;
  opts.on_stage_end = [&](const TrainHistory& h, const Backbone& b) {
    if (h.stage == "toy" && after_first.empty()) {
      after_first.assign(b.parameters().begin(), b.parameters().end());
    }
  };
  pretrain_then_finetune(net, runs, 3, opts);
  const auto [hb, he] = net.head_range();
  ASSERT_EQ(after_first.size(), net.parameters().size());
  bool head_changed = false;
  for (std::size_t i = 0; i < after_first.size(); ++i) {
    if (i >= hb && i < he) {
      head_changed |= after_first[i] != net.parameters()[i];
    } else {
      EXPECT_EQ(after_first[i], net.parameters()[i]) << "parameter " << i;
    }
  }
  EXPECT_TRUE(head_changed);
}

TEST(SmokeTest, OneSmallStepDecreasesSampleLoss) {
  Rng rng(77);
  int failures = 0;
  for (int trial = 0; trial < 100; ++trial) {
    ReferenceCnn net(small_config(), 1000 + trial);
    const InputTensor x = random_input(16, rng);
    const FineLabel target = fine_label_at(static_cast<int>(rng.below(3)));
    const double alpha = rng.uniform();
    std::vector<double> grad(net.parameters().size(), 0.0);
    const double before = net.accumulate_gradient(x, target, alpha, grad).total;
    OptimizerConfig cfg;
    cfg.learning_rate = 1e-3;
    cfg.momentum = 0.0;
    Optimizer opt(cfg, grad.size());
    opt.step(net.parameters(), grad, 0, grad.size());
    const Logits3 z = net.forward(x);
    if (!(hierarchical_ce_from_logits(z, target, alpha).total < before)) ++failures;
  }
  EXPECT_LE(failures, 5);
}

TEST(OptimizerTest, SgdMomentumAndAdamState) {
  OptimizerConfig cfg;
  cfg.learning_rate = 0.1;
  cfg.momentum = 0.5;
  Optimizer sgd(cfg, 2);
  std::vector<double> p = {1.0, 1.0};
  const std::vector<double> g = {1.0, 2.0};
  sgd.step(p, g, 0, 1);  // only index 0
  EXPECT_DOUBLE_EQ(p[0], 0.9);
  EXPECT_EQ(p[1], 1.0);
  sgd.step(p, g, 0, 1);  // v = 0.5 * 1 + 1 = 1.5
  EXPECT_DOUBLE_EQ(p[0], 0.75);

  cfg.kind = OptimizerConfig::Kind::kAdam;
  Optimizer adam(cfg, 2);
  adam.step(p, g, 0, 2);
  Optimizer restored(cfg, 2);
  restored.restore(adam.state());
  std::vector<double> p1 = p, p2 = p;
  adam.step(p1, g, 0, 2);
  restored.step(p2, g, 0, 2);
  EXPECT_EQ(p1, p2);
  cfg.learning_rate = -1;
  EXPECT_THROW(cfg.validate(), ParameterError);
}

TEST(CheckpointTest, ReloadIsBitIdentical) {
  ReferenceCnn net(small_config(), 5);
  const std::vector<TrainSource> train = {{toy_samples(12, 2), 1.0}};
  train_stage(net, toy_stage(1, 0.05), train, {}, 1);
  const nlohmann::json config = {{"seed", 1}, {"b", {1, 2}}};
  const Checkpoint c = make_checkpoint(net, "toy", 0, 1, config, {0.5, 0.25});
  TempDir dir;
  save_checkpoint(dir / "m.ckpt", c);
  const Checkpoint back = load_checkpoint(dir / "m.ckpt");
  EXPECT_EQ(back.stage, "toy");
  EXPECT_EQ(back.epoch, 1);
  EXPECT_EQ(back.fingerprint, config_fingerprint(config));
  EXPECT_EQ(back.optimizer_state, (std::vector<double>{0.5, 0.25}));
  const auto restored = restore_backbone(back);
  for (const auto& s : toy_samples(9, 6)) {
    const Logits3 a = net.forward(s.input), b = restored->forward(s.input);
    for (int i = 0; i < 3; ++i) EXPECT_EQ(a[i], b[i]);
  }
  std::string bytes = encode_checkpoint(c);
  EXPECT_EQ(bytes.substr(0, 8), "SEMODCK1");
  EXPECT_THROW(decode_checkpoint(bytes.substr(0, bytes.size() - 3)), InputError);
  bytes[0] = 'X';
  EXPECT_THROW(decode_checkpoint(bytes), InputError);
}

TEST(CheckpointTest, FingerprintIgnoresKeyOrder) {
  const auto a = nlohmann::json::parse(R"({"x":1,"y":[1,2]})");
  const auto b = nlohmann::json::parse(R"({"y":[1,2],"x":1})");
  EXPECT_EQ(config_fingerprint(a), config_fingerprint(b));
  EXPECT_NE(config_fingerprint(a), config_fingerprint({{"x", 2}}));
  EXPECT_EQ(config_fingerprint(a).size(), 16u);
}

TEST(TrainingConfigTest, ParseAndReject) {
  const nlohmann::json j = {
      {"schema_version", 1},
      {"seed", 9},
      {"model", {{"kind", "reference_cnn"}, {"input_size", 16}}},
      {"stages", {{{"name", "a"}, {"datasets", {{{"manifest", "m.jsonl"}}}}}}}};
  const auto c = TrainingConfig::FromJson(j);
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(c.stages.size(), 1u);
  EXPECT_EQ(TrainingConfig::FromJson(c.ToJson()).ToJson(), c.ToJson());
  auto bad = j;
  bad["sead"] = 1;
  EXPECT_THROW(TrainingConfig::FromJson(bad), ParameterError);
  bad = j;
  bad["stages"].push_back(bad["stages"][0]);
  EXPECT_THROW(TrainingConfig::FromJson(bad), ParameterError);
}

TEST(SelectExplicitFramesTest, Rule) {
  datakit::ImageRecord with_part;
  with_part.id = "a";
  with_part.part_boxes.push_back({Box{0, 0, 1, 1}, datakit::BodyPart::kMaleGenitalia});
  datakit::ImageRecord without;
  without.id = "b";
  const std::vector<datakit::ImageRecord> in = {with_part, without};
  const auto out = select_explicit_frames(in);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].id, "a");
  EXPECT_EQ(select_explicit_frames(out), out);
  EXPECT_TRUE(select_explicit_frames({}).empty());
}

TEST(SelectExplicitFramesTest, SubsetAndIdempotentOnGenerated) {
  datakit::GeneratorSpec spec;
  spec.num_samples = 50;
  const auto data = datakit::generate_synthetic_dataset(spec, 2);
  const auto once = select_explicit_frames(data.records);
  EXPECT_EQ(select_explicit_frames(once), once);
  for (const auto& r : once) {
    EXPECT_TRUE(std::find(data.records.begin(), data.records.end(), r) != data.records.end());
    EXPECT_NE(r.fine_label, FineLabel::kNeutral);
  }
}

TEST(EpochRecordTest, JsonRoundTrip) {
  EpochRecord r{"s", 1, 3, 0.25, 0.5, std::nullopt, 0.125};
  EXPECT_EQ(EpochRecord::FromJson(r.ToJson()), r);
}

}  // namespace
}  // namespace semod::training
