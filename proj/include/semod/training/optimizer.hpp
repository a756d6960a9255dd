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

#include <span>
#include <string>
#include <vector>

namespace semod::training {

struct OptimizerConfig {
  enum class Kind { kSgd, kAdam };
  Kind kind = Kind::kSgd;
  double learning_rate = 0.05;
  double momentum = 0.9;       // SGD only
  double weight_decay = 0.0;   // L2, added to the gradient
  double beta1 = 0.9;          // Adam only
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void validate() const;
};

std::string to_string(OptimizerConfig::Kind kind);
OptimizerConfig::Kind parse_optimizer_kind(const std::string& name);

// First-order optimizer updating only parameters in [begin, end).
class Optimizer {
 public:
  Optimizer(const OptimizerConfig& config, std::size_t parameter_count);

  void step(std::span<double> params, std::span<const double> grad, std::size_t begin,
            std::size_t end);

  // Flat state (momentum / moments / step count) for checkpointing.
  std::vector<double> state() const;
  void restore(std::span<const double> state);

 private:
  OptimizerConfig config_;
  std::vector<double> first_;
  std::vector<double> second_;
  double steps_ = 0.0;
};

}  // namespace semod::training
