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

// Hierarchical cross-entropy: an alpha-weighted blend of the coarse SE/NS
// cross-entropy and the fine three-class cross-entropy. The coarse
// distribution is the fine softmax marginalized over the SE group, so both
// levels always come from one three-way head.

#include <array>
#include <span>

#include "semod/taxonomy.hpp"

namespace semod {

inline constexpr double kProbabilityClampEps = 1e-12;
inline constexpr double kDefaultAlpha = 0.5;

// Distribution over the fine labels, indexed in kFineLabels order.
class Prob3 {
 public:
  static constexpr double kSumTolerance = 1e-9;

  // Throws InputError unless components are finite, non-negative and sum to
  // one within kSumTolerance.
  Prob3(double activity, double posing, double neutral);
  explicit Prob3(const std::array<double, 3>& values)
      : Prob3(values[0], values[1], values[2]) {}

  double activity() const { return values_[0]; }
  double posing() const { return values_[1]; }
  double neutral() const { return values_[2]; }
  double operator[](FineLabel label) const { return values_[index_of(label)]; }
  const std::array<double, 3>& values() const { return values_; }

  friend bool operator==(const Prob3&, const Prob3&) = default;

 private:
  std::array<double, 3> values_;
};

class Prob2 {
 public:
  Prob2(double se, double ns);
  double se() const { return se_; }
  double ns() const { return ns_; }
  double operator[](BinaryLabel label) const { return label == BinaryLabel::kSE ? se_ : ns_; }

 private:
  double se_;
  double ns_;
};

// Pre-softmax scores. Throws InputError when any component is not finite.
class Logits3 {
 public:
  Logits3(double activity, double posing, double neutral);
  explicit Logits3(const std::array<double, 3>& values)
      : Logits3(values[0], values[1], values[2]) {}
  const std::array<double, 3>& values() const { return values_; }
  double operator[](int i) const { return values_[i]; }

 private:
  std::array<double, 3> values_;
};

struct LossValue {
  double total = 0.0;
  double coarse_term = 0.0;
  double fine_term = 0.0;
  double alpha = kDefaultAlpha;
};

using Gradient3 = std::array<double, 3>;

Prob2 project_fine_to_coarse(const Prob3& d);

// Argmax; ties go to the graver label.
FineLabel most_probable_label(const Prob3& d);

Prob3 softmax(const Logits3& z);

// Natural-log cross-entropies against a hard target. Probabilities are
// clamped to kProbabilityClampEps before the log. Throws ParameterError if
// alpha is outside [0, 1].
LossValue hierarchical_ce(const Prob3& d, FineLabel target, double alpha = kDefaultAlpha);

LossValue hierarchical_ce_from_logits(const Logits3& z, FineLabel target,
                                      double alpha = kDefaultAlpha);

// d total / d z. Components whose probability is clamped contribute zero.
Gradient3 hierarchical_ce_grad(const Logits3& z, FineLabel target,
                               double alpha = kDefaultAlpha);

// Per-sample loss, then unweighted mean over the batch.
double mean_hierarchical_ce(std::span<const Logits3> logits,
                            std::span<const FineLabel> targets,
                            double alpha = kDefaultAlpha);

}  // namespace semod
