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

#include "semod/training/optimizer.hpp"

#include <cmath>

#include "semod/error.hpp"

namespace semod::training {

void OptimizerConfig::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw ParameterError("learning_rate must be a finite value >= 0");
  }
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ParameterError("momentum must lie in [0, 1)");
  if (!(weight_decay >= 0.0)) throw ParameterError("weight_decay must be >= 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ParameterError("Adam betas must lie in [0, 1)");
  }
  if (!(epsilon > 0.0)) throw ParameterError("epsilon must be > 0");
}

std::string to_string(OptimizerConfig::Kind kind) {
  return kind == OptimizerConfig::Kind::kSgd ? "sgd" : "adam";
}

OptimizerConfig::Kind parse_optimizer_kind(const std::string& name) {
  if (name == "sgd") return OptimizerConfig::Kind::kSgd;
  if (name == "adam") return OptimizerConfig::Kind::kAdam;
  throw ParameterError("unknown optimizer '" + name + "'");
}

Optimizer::Optimizer(const OptimizerConfig& config, std::size_t parameter_count)
    : config_(config), first_(parameter_count, 0.0) {
  config_.validate();
  if (config_.kind == OptimizerConfig::Kind::kAdam) second_.assign(parameter_count, 0.0);
}

void Optimizer::step(std::span<double> params, std::span<const double> grad, std::size_t begin,
                     std::size_t end) {
  steps_ += 1.0;
  const double lr = config_.learning_rate;
  if (config_.kind == OptimizerConfig::Kind::kSgd) {
    for (std::size_t i = begin; i < end; ++i) {
      const double g = grad[i] + config_.weight_decay * params[i];
      first_[i] = config_.momentum * first_[i] + g;
      params[i] -= lr * first_[i];
    }
    return;
  }
  const double c1 = 1.0 - std::pow(config_.beta1, steps_);
  const double c2 = 1.0 - std::pow(config_.beta2, steps_);
  for (std::size_t i = begin; i < end; ++i) {
    const double g = grad[i] + config_.weight_decay * params[i];
    first_[i] = config_.beta1 * first_[i] + (1.0 - config_.beta1) * g;
    second_[i] = config_.beta2 * second_[i] + (1.0 - config_.beta2) * g * g;
    params[i] -= lr * (first_[i] / c1) / (std::sqrt(second_[i] / c2) + config_.epsilon);
  }
}

std::vector<double> Optimizer::state() const {
  std::vector<double> out;
  out.reserve(1 + first_.size() + second_.size());
  out.push_back(steps_);
  out.insert(out.end(), first_.begin(), first_.end());
  out.insert(out.end(), second_.begin(), second_.end());
  return out;
}

void Optimizer::restore(std::span<const double> state) {
  if (state.size() != 1 + first_.size() + second_.size()) {
    throw InputError("optimizer state size does not match the optimizer");
  }
  steps_ = state[0];
  std::copy_n(state.begin() + 1, first_.size(), first_.begin());
  std::copy(state.begin() + 1 + static_cast<std::ptrdiff_t>(first_.size()), state.end(),
            second_.begin());
}

}  // namespace semod::training
