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
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "semod/training/backbone.hpp"
#include "semod/training/trainer.hpp"

namespace semod::training {

// Checkpoint file layout (little-endian):
//   8 bytes  magic "SEMODCK1"
//   u64      header length, then UTF-8 JSON header
//            {schema_version, architecture, stage, stage_index, epoch,
//             fingerprint, config}
//   u64      parameter count, then float64 parameters
//   u64      optimizer state length, then float64 state
struct Checkpoint {
  nlohmann::json architecture;
  std::string stage;
  int stage_index = 0;
  int epoch = 0;
  std::string fingerprint;
  nlohmann::json config;
  std::vector<double> parameters;
  std::vector<double> optimizer_state;
};

Checkpoint make_checkpoint(const Backbone& backbone, const std::string& stage, int stage_index,
                           int epoch, const nlohmann::json& config,
                           std::vector<double> optimizer_state = {});

std::string encode_checkpoint(const Checkpoint& checkpoint);
Checkpoint decode_checkpoint(const std::string& bytes);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Rebuilds the backbone described by the checkpoint with its parameters.
std::unique_ptr<Backbone> restore_backbone(const Checkpoint& checkpoint);

// 16 hex digits of FNV-1a over the compact JSON dump (keys are sorted).
std::string config_fingerprint(const nlohmann::json& config);

// Training configuration file (JSON):
//   {"schema_version": 1, "seed": 7, "threads": 0, "holdout_folds": 1,
//    "label_mapping": "<path>", "model": {...}, "stages": [ StageSpec, ... ]}
// Unknown keys are rejected; relative manifest/mapping paths resolve against
// the config file's directory.
struct TrainingConfig {
  std::uint64_t seed = 0;
  int threads = 0;
  int holdout_folds = 1;
  std::string label_mapping;
  nlohmann::json model = nlohmann::json{{"kind", "reference_cnn"}};
  std::vector<StageSpec> stages;

  static TrainingConfig FromJson(const nlohmann::json& j);
  nlohmann::json ToJson() const;
};

TrainingConfig load_training_config(const std::filesystem::path& path);

}  // namespace semod::training
