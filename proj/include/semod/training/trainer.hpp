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

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "semod/datakit/records.hpp"
#include "semod/training/backbone.hpp"
#include "semod/training/optimizer.hpp"

namespace semod::training {

enum class FreezePolicy { kNone, kBackboneFrozen };

struct DatasetRef {
  std::string manifest;
  double weight = 1.0;
};

struct StageSpec {
  std::string name = "stage";
  std::vector<DatasetRef> datasets;
  int epochs = 1;
  double alpha = kDefaultAlpha;
  FreezePolicy freeze_policy = FreezePolicy::kNone;
  int batch_size = 32;
  OptimizerConfig optimizer;  // carries learning_rate

  void validate() const;
  // Dataset weights scaled to sum to one.
  std::vector<double> normalized_weights() const;

  // Keys: name, datasets[{manifest, weight}], epochs, learning_rate, alpha,
  // freeze_policy ("none" | "backbone_frozen"), batch_size, optimizer
  // ("sgd" | "adam"), momentum, weight_decay. Unknown keys are rejected.
  static StageSpec FromJson(const nlohmann::json& j);
  nlohmann::json ToJson() const;
};

struct LabeledSample {
  std::string id;
  InputTensor input;
  FineLabel label = FineLabel::kNeutral;
};

// One training data source and its mixing weight within a stage.
struct TrainSource {
  std::vector<LabeledSample> samples;
  double weight = 1.0;
};

struct EpochRecord {
  std::string stage;
  int stage_index = 0;
  int epoch = 0;
  double mean_loss = 0.0;
  std::optional<double> val_binary_accuracy;
  std::optional<double> val_fine_accuracy;
  std::optional<double> val_loss;

  nlohmann::json ToJson() const;
  static EpochRecord FromJson(const nlohmann::json& j);
  friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

struct TrainHistory {
  std::string stage;
  std::vector<EpochRecord> epochs;
  std::vector<std::string> checkpoints;

  friend bool operator==(const TrainHistory&, const TrainHistory&) = default;
};

struct TrainOptions {
  // Worker threads for per-sample gradients; 0 picks the hardware count.
  // Results are identical for every thread count.
  int threads = 1;
  int stage_index = 0;
  // First epoch to run (1-based); earlier epochs are skipped, for resuming.
  int start_epoch = 1;
  // Restored into the optimizer when non-empty.
  std::vector<double> optimizer_state;
  std::function<void(const EpochRecord&, const Backbone&, const Optimizer&)> on_epoch_end;
};

// Keeps records annotated with at least one SE body-part box.
std::vector<datakit::ImageRecord> select_explicit_frames(
    const std::vector<datakit::ImageRecord>& records);

// Mini-batch training on mean hierarchical cross-entropy. Every epoch draws
// sum(|source|) samples: a source is picked by weight, then the next item of
// that source's seeded shuffle. Epoch order derives from (seed, stage_index,
// epoch) only, so a resumed run replays the same batches.
// Throws DivergenceError on a non-finite loss, logit or gradient.
TrainHistory train_stage(Backbone& backbone, const StageSpec& spec,
                         std::span<const TrainSource> train,
                         std::span<const LabeledSample> validation, std::uint64_t seed,
                         const TrainOptions& options = {});

struct StageRun {
  StageSpec spec;
  std::vector<TrainSource> train;
  std::vector<LabeledSample> validation;
};

struct StagedOptions {
  int threads = 1;
  // Resume point: stages before start_stage are skipped, and start_stage
  // begins at start_epoch with the given optimizer state.
  int start_stage = 0;
  int start_epoch = 1;
  std::vector<double> optimizer_state;
  std::function<void(const EpochRecord&, const Backbone&, const Optimizer&)> on_epoch_end;
  std::function<void(const TrainHistory&, const Backbone&)> on_stage_end;
};

// Runs the stages in order on one backbone, carrying parameters forward.
std::vector<TrainHistory> pretrain_then_finetune(Backbone& backbone,
                                                 std::span<const StageRun> stages,
                                                 std::uint64_t seed,
                                                 const StagedOptions& options = {});

std::uint64_t stage_seed(std::uint64_t seed, int stage_index);

// Converts records with decoded images into samples at the backbone's input size.
std::vector<LabeledSample> make_samples(const std::vector<datakit::ImageRecord>& records,
                                        const std::vector<RgbImage>& images, int width,
                                        int height);

}  // namespace semod::training
