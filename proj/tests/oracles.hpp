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

// Independent reference computations used only by tests. Nothing here calls
// into the code paths it checks.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <string>
#include <vector>

namespace semod::oracle {

struct Rect {
  double x0, y0, x1, y1;
};

inline double rect_iou(const Rect& a, const Rect& b) {
  const double iw = std::max(0.0, std::min(a.x1, b.x1) - std::max(a.x0, b.x0));
  const double ih = std::max(0.0, std::min(a.y1, b.y1) - std::max(a.y0, b.y0));
  const double inter = iw * ih;
  const double uni = (a.x1 - a.x0) * (a.y1 - a.y0) + (b.x1 - b.x0) * (b.y1 - b.y0) - inter;
  return uni > 0 ? inter / uni : 0.0;
}

struct ScoredRect {
  Rect box;
  double score;
};

// Number of ground-truth boxes matched when only `preds` (already the
// chosen subset, in processing order) are considered. Each prediction takes
// the best unmatched GT at or above the threshold.
inline int matched_count(const std::vector<ScoredRect>& ordered_preds,
                         const std::vector<Rect>& gts, double thr) {
  std::vector<bool> used(gts.size(), false);
  int tp = 0;
  for (const ScoredRect& p : ordered_preds) {
    int best = -1;
    double best_iou = -1.0;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (used[g]) continue;
      const double v = rect_iou(p.box, gts[g]);
      if (v >= thr && v > best_iou) {
        best_iou = v;
        best = static_cast<int>(g);
      }
    }
    if (best >= 0) {
      used[best] = true;
      ++tp;
    }
  }
  return tp;
}

// AP by brute force: for every operating point n (top-n predictions by
// score, stable), re-run matching from scratch on the prefix to obtain
// (recall_n, precision_n); then integrate r -> max{precision_n : recall_n >= r}
// over [0, 1] piecewise on the distinct recall levels.
inline double brute_force_ap(const std::vector<ScoredRect>& preds, const std::vector<Rect>& gts,
                             double thr = 0.5) {
  if (gts.empty()) return 0.0;
  std::vector<std::size_t> idx(preds.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return preds[a].score > preds[b].score; });
  std::vector<std::pair<double, double>> points;  // (recall, precision)
  for (std::size_t n = 1; n <= preds.size(); ++n) {
    std::vector<ScoredRect> prefix;
    for (std::size_t i = 0; i < n; ++i) prefix.push_back(preds[idx[i]]);
    const int tp = matched_count(prefix, gts, thr);
    points.emplace_back(static_cast<double>(tp) / gts.size(), static_cast<double>(tp) / n);
  }
  std::vector<double> levels{0.0};
  for (const auto& [r, p] : points) levels.push_back(r);
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
  double ap = 0.0;
  for (std::size_t i = 1; i < levels.size(); ++i) {
    double best = 0.0;
    for (const auto& [r, p] : points) {
      if (r >= levels[i]) best = std::max(best, p);
    }
    ap += (levels[i] - levels[i - 1]) * best;
  }
  return ap;
}

struct NamedVector {
  std::string id;
  std::vector<double> v;
};

inline double l2(const std::vector<double>& a, const std::vector<double>& b) {
  long double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (long double)(a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(static_cast<double>(s));
}

// Greedy dedup, written as a fixed point over a sorted copy: O(n^2) with
// no shared state.
inline std::pair<std::vector<std::string>, std::map<std::string, std::vector<std::string>>>
brute_force_dedup(std::vector<NamedVector> items, double thr) {
  std::sort(items.begin(), items.end(),
            [](const NamedVector& a, const NamedVector& b) { return a.id < b.id; });
  std::vector<std::size_t> kept;
  std::map<std::string, std::vector<std::string>> clusters;
  for (std::size_t i = 0; i < items.size(); ++i) {
    bool far = true;
    for (std::size_t k : kept) far = far && l2(items[i].v, items[k].v) > thr;
    if (far) {
      kept.push_back(i);
      continue;
    }
    std::size_t best = kept.front();
    for (std::size_t k : kept) {
      if (l2(items[i].v, items[k].v) < l2(items[i].v, items[best].v)) best = k;
    }
    clusters[items[best].id].push_back(items[i].id);
  }
  std::vector<std::string> ids;
  for (std::size_t k : kept) ids.push_back(items[k].id);
  return {ids, clusters};
}

// Central finite difference of f at x along coordinate i.
template <typename F>
double central_difference(F&& f, std::vector<double> x, std::size_t i, double h) {
  const double x0 = x[i];
  x[i] = x0 + h;
  const double up = f(x);
  x[i] = x0 - h;
  const double down = f(x);
  return (up - down) / (2.0 * h);
}

// Hierarchical CE written from scratch (long double softmax, explicit sums).
// target: 0 activity, 1 posing, 2 neutral. SE group = {0, 1}.
inline double direct_hce(const std::array<double, 3>& z, int target, double alpha) {
  long double m = std::max({z[0], z[1], z[2]});
  long double e[3], s = 0;
  for (int i = 0; i < 3; ++i) {
    e[i] = std::exp((long double)z[i] - m);
    s += e[i];
  }
  long double p[3];
  for (int i = 0; i < 3; ++i) p[i] = e[i] / s;
  const long double eps = 1e-12L;
  const long double group = target == 2 ? p[2] : p[0] + p[1];
  const long double fine = -std::log(std::max(p[target], eps));
  const long double coarse = -std::log(std::max(group, eps));
  return static_cast<double>(alpha * coarse + (1 - alpha) * fine);
}

}  // namespace semod::oracle
