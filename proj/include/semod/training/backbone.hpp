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

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "semod/hloss.hpp"
#include "semod/image.hpp"

namespace semod::training {

// Normalized CHW input, values (pixel / 255 - 0.5).
struct InputTensor {
  int channels = 3;
  int height = 0;
  int width = 0;
  std::vector<double> values;
};

// Resizes (bilinear) to width x height and normalizes.
InputTensor to_input(const RgbImage& image, int width, int height);

// Differentiable image -> Logits3 model with a flat parameter vector.
// forward/accumulate_gradient/embed are const and safe to call concurrently.
class Backbone {
 public:
  virtual ~Backbone() = default;

  virtual std::string kind() const = 0;
  virtual nlohmann::json architecture() const = 0;
  virtual int input_width() const = 0;
  virtual int input_height() const = 0;

  virtual std::span<double> parameters() = 0;
  virtual std::span<const double> parameters() const = 0;
  // [begin, end) of the classification-head parameters; everything else is
  // frozen under FreezePolicy::kBackboneFrozen.
  virtual std::pair<std::size_t, std::size_t> head_range() const = 0;

  // Throws InputError if the output is not finite.
  virtual Logits3 forward(const InputTensor& x) const = 0;
  // Adds d(loss)/d(parameters) to `grad` (size = parameters().size()) and
  // returns the loss.
  virtual LossValue accumulate_gradient(const InputTensor& x, FineLabel target, double alpha,
                                        std::span<double> grad) const = 0;
  // Penultimate feature vector, used as the near-duplicate embedding.
  virtual std::vector<double> embed(const InputTensor& x) const = 0;

  virtual std::unique_ptr<Backbone> clone() const = 0;
};

// Builds a backbone from architecture(); parameters are seeded-random.
// Throws ParameterError for an unknown kind or bad fields.
std::unique_ptr<Backbone> make_backbone(const nlohmann::json& architecture, std::uint64_t seed);

}  // namespace semod::training
