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

#include "semod/hloss.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "semod/error.hpp"

namespace semod {
namespace {

void check_distribution(std::span<const double> values, const char* what) {
  double sum = 0.0;
  for (double v : values) {
    if (!std::isfinite(v) || v < 0.0) {
      throw InputError(std::string(what) + " has a negative or non-finite component");
    }
    sum += v;
  }
  if (std::abs(sum - 1.0) > Prob3::kSumTolerance) {
    throw InputError(std::string(what) + " does not sum to 1 (sum=" + std::to_string(sum) + ")");
  }
}

void check_alpha(double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw ParameterError("alpha must lie in [0, 1], got " + std::to_string(alpha));
  }
}

bool in_se_group(int i) { return to_binary(fine_label_at(i)) == BinaryLabel::kSE; }

}  // namespace

Prob3::Prob3(double activity, double posing, double neutral)
    : values_{activity, posing, neutral} {
  check_distribution(values_, "Prob3");
}

Prob2::Prob2(double se, double ns) : se_(se), ns_(ns) {
  const double v[2] = {se, ns};
  check_distribution(v, "Prob2");
}

Logits3::Logits3(double activity, double posing, double neutral)
    : values_{activity, posing, neutral} {
  for (double v : values_) {
    if (!std::isfinite(v)) throw InputError("logits must be finite");
  }
}

Prob2 project_fine_to_coarse(const Prob3& d) {
  return Prob2(d.activity() + d.posing(), d.neutral());
}

FineLabel most_probable_label(const Prob3& d) {
  FineLabel best = FineLabel::kNeutral;
  for (FineLabel l : kFineLabels) {
    if (d[l] > d[best] || (d[l] == d[best] && severity(l) > severity(best))) best = l;
  }
  return best;
}

Prob3 softmax(const Logits3& z) {
  const auto& v = z.values();
  const double m = std::max({v[0], v[1], v[2]});
  std::array<double, 3> e;
  double sum = 0.0;
  for (int i = 0; i < 3; ++i) {
    e[i] = std::exp(v[i] - m);
    sum += e[i];
  }
  for (double& x : e) x /= sum;
  return Prob3(e);
}

LossValue hierarchical_ce(const Prob3& d, FineLabel target, double alpha) {
  check_alpha(alpha);
  const Prob2 coarse = project_fine_to_coarse(d);
  LossValue loss;
  loss.alpha = alpha;
  loss.fine_term = -std::log(std::max(d[target], kProbabilityClampEps));
  loss.coarse_term = -std::log(std::max(coarse[to_binary(target)], kProbabilityClampEps));
  loss.total = alpha * loss.coarse_term + (1.0 - alpha) * loss.fine_term;
  return loss;
}

LossValue hierarchical_ce_from_logits(const Logits3& z, FineLabel target, double alpha) {
  return hierarchical_ce(softmax(z), target, alpha);
}

Gradient3 hierarchical_ce_grad(const Logits3& z, FineLabel target, double alpha) {
  check_alpha(alpha);
  const Prob3 p = softmax(z);
  const int t = index_of(target);
  const bool target_se = in_se_group(t);

  double group_mass = 0.0;
  for (int i = 0; i < 3; ++i) {
    if (in_se_group(i) == target_se) group_mass += p.values()[i];
  }
  const bool fine_live = p.values()[t] >= kProbabilityClampEps;
  const bool coarse_live = group_mass >= kProbabilityClampEps;

  Gradient3 g{};
  for (int j = 0; j < 3; ++j) {
    const double pj = p.values()[j];
    // -log p_t        ->  p_j - [j == t]
    // -log sum_G p_i  ->  p_j - [j in G] p_j / P_G
    const double fine = fine_live ? pj - (j == t ? 1.0 : 0.0) : 0.0;
    const double coarse =
        coarse_live ? pj - (in_se_group(j) == target_se ? pj / group_mass : 0.0) : 0.0;
    g[j] = alpha * coarse + (1.0 - alpha) * fine;
  }
  return g;
}

double mean_hierarchical_ce(std::span<const Logits3> logits,
                            std::span<const FineLabel> targets, double alpha) {
  if (logits.size() != targets.size()) {
    throw InputError("logits and targets differ in length");
  }
  if (logits.empty()) throw InputError("empty batch");
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    sum += hierarchical_ce_from_logits(logits[i], targets[i], alpha).total;
  }
  return sum / static_cast<double>(logits.size());
}

}  // namespace semod
