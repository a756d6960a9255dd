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

#include "semod/training/backbone.hpp"

namespace semod::training {

// Small CPU reference network for desk-scale experiments:
//   conv3x3(3 -> c1) + ReLU, maxpool 2x2, conv3x3(c1 -> c2) + ReLU,
//   [global max pool ; global average pool] -> linear(2*c2 -> 3).
// Both convolutions are zero-padded "same". Input side must be even.
class ReferenceCnn final : public Backbone {
 public:
  struct Config {
    int input_size = 32;
    int conv1_channels = 8;
    int conv2_channels = 16;
  };

  ReferenceCnn(const Config& config, std::uint64_t seed);

  std::string kind() const override { return "reference_cnn"; }
  nlohmann::json architecture() const override;
  int input_width() const override { return config_.input_size; }
  int input_height() const override { return config_.input_size; }

  std::span<double> parameters() override { return params_; }
  std::span<const double> parameters() const override { return params_; }
  std::pair<std::size_t, std::size_t> head_range() const override;

  Logits3 forward(const InputTensor& x) const override;
  LossValue accumulate_gradient(const InputTensor& x, FineLabel target, double alpha,
                                std::span<double> grad) const override;
  std::vector<double> embed(const InputTensor& x) const override;
  std::unique_ptr<Backbone> clone() const override;

  const Config& config() const { return config_; }

 private:
  struct Activations;
  struct Layout {
    std::size_t conv1_w, conv1_b, conv2_w, conv2_b, fc_w, fc_b, total;
  };

  void run_forward(const InputTensor& x, Activations& a) const;
  void check_input(const InputTensor& x) const;

  Config config_;
  Layout layout_{};
  std::vector<double> params_;
};

}  // namespace semod::training
