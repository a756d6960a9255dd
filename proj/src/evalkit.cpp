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

#include "semod/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "semod/error.hpp"

namespace semod::evalkit {

using nlohmann::json;

double iou(const Box& a, const Box& b) {
  const double inter = intersection_area(a, b);
  if (inter <= 0.0) return 0.0;
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? std::min(1.0, inter / uni) : 0.0;
}

namespace {

std::vector<std::size_t> confidence_order(std::span<const Detection> preds) {
  std::vector<std::size_t> order(preds.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return preds[a].confidence > preds[b].confidence;
  });
  return order;
}

void check_threshold(double t) {
  if (!(t > 0.0 && t <= 1.0)) throw ParameterError("iou_threshold must lie in (0, 1]");
}

}  // namespace

MatchResult match_detections(std::span<const Detection> preds, std::span<const Box> gts,
                             double iou_threshold) {
  check_threshold(iou_threshold);
  MatchResult m;
  m.is_true_positive.assign(preds.size(), false);
  m.matched_gt.assign(preds.size(), -1);
  m.order = confidence_order(preds);
  std::vector<bool> taken(gts.size(), false);
  for (std::size_t p : m.order) {
    int best = -1;
    double best_iou = iou_threshold;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (taken[g]) continue;
      const double v = iou(preds[p].box, gts[g]);
      if (v >= best_iou && (best < 0 || v > best_iou)) {
        best_iou = v;
        best = static_cast<int>(g);
      }
    }
    if (best >= 0) {
      taken[best] = true;
      m.is_true_positive[p] = true;
      m.matched_gt[p] = best;
      ++m.true_positives;
    } else {
      ++m.false_positives;
    }
  }
  m.missed = static_cast<int>(gts.size()) - m.true_positives;
  return m;
}

double average_precision(std::span<const ImageDetections> images, double iou_threshold) {
  struct Scored {
    double confidence;
    bool tp;
  };
  std::vector<Scored> pooled;
  std::size_t num_gt = 0;
  for (const ImageDetections& img : images) {
    num_gt += img.gts.size();
    const MatchResult m = match_detections(img.preds, img.gts, iou_threshold);
    for (std::size_t i = 0; i < img.preds.size(); ++i) {
      pooled.push_back({img.preds[i].confidence, m.is_true_positive[i]});
    }
  }
  if (num_gt == 0) return 0.0;
  // pooled is in (image, input) order, so a stable sort keeps that order on ties.
  std::stable_sort(pooled.begin(), pooled.end(),
                   [](const Scored& a, const Scored& b) { return a.confidence > b.confidence; });

  std::vector<double> precision(pooled.size());
  std::vector<double> recall(pooled.size());
  long tp = 0;
  long fp = 0;
  for (std::size_t i = 0; i < pooled.size(); ++i) {
    (pooled[i].tp ? tp : fp) += 1;
    precision[i] = static_cast<double>(tp) / static_cast<double>(tp + fp);
    recall[i] = static_cast<double>(tp) / static_cast<double>(num_gt);
  }
  for (std::size_t i = pooled.size(); i-- > 1;) {
    precision[i - 1] = std::max(precision[i - 1], precision[i]);
  }
  double ap = 0.0;
  double prev_recall = 0.0;
  for (std::size_t i = 0; i < pooled.size(); ++i) {
    if (recall[i] > prev_recall) {
      ap += (recall[i] - prev_recall) * precision[i];
      prev_recall = recall[i];
    }
  }
  return ap;
}

double average_precision(std::span<const Detection> preds, std::span<const Box> gts,
                         double iou_threshold) {
  const ImageDetections img{{preds.begin(), preds.end()}, {gts.begin(), gts.end()}};
  return average_precision(std::span<const ImageDetections>(&img, 1), iou_threshold);
}

double average_recall(std::span<const ImageDetections> images, double iou_threshold,
                      int max_dets) {
  if (max_dets < 1) throw ParameterError("max_dets must be >= 1");
  std::size_t num_gt = 0;
  std::size_t matched = 0;
  for (const ImageDetections& img : images) {
    num_gt += img.gts.size();
    std::vector<Detection> top;
    for (std::size_t i : confidence_order(img.preds)) {
      if (top.size() == static_cast<std::size_t>(max_dets)) break;
      top.push_back(img.preds[i]);
    }
    matched += static_cast<std::size_t>(match_detections(top, img.gts, iou_threshold).true_positives);
  }
  if (num_gt == 0) return 0.0;
  return static_cast<double>(matched) / static_cast<double>(num_gt);
}

double average_recall(std::span<const Detection> preds, std::span<const Box> gts,
                      double iou_threshold, int max_dets) {
  const ImageDetections img{{preds.begin(), preds.end()}, {gts.begin(), gts.end()}};
  return average_recall(std::span<const ImageDetections>(&img, 1), iou_threshold, max_dets);
}

double average_recall_coco(std::span<const ImageDetections> images, int max_dets) {
  double sum = 0.0;
  for (int i = 0; i < 10; ++i) sum += average_recall(images, 0.5 + 0.05 * i, max_dets);
  return sum / 10.0;
}

std::map<std::string, std::optional<double>> ClassificationReport::metrics() const {
  std::map<std::string, std::optional<double>> out;
  out["accuracy"] = accuracy_binary;
  out["accuracy_3class"] = accuracy_fine;
  out["f1_score"] = f1_binary;
  for (const auto& [label, tpr] : tpr_per_fine_class) {
    out["tpr_" + std::string(to_string(label))] = tpr;
  }
  for (const auto& [label, rate] : se_rate_per_fine_class) {
    out["se_rate_" + std::string(to_string(label))] = rate;
  }
  return out;
}

ClassificationReport classification_report(std::span<const FineLabel> pred_labels,
                                            std::span<const FineLabel> gt_labels) {
  if (pred_labels.size() != gt_labels.size()) {
    throw InputError("prediction and ground-truth lists differ in length");
  }
  if (gt_labels.empty()) throw InputError("classification report needs at least one sample");
  ClassificationReport r;
  r.samples = gt_labels.size();
  long binary_correct = 0;
  long fine_correct = 0;
  long tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < gt_labels.size(); ++i) {
    const FineLabel g = gt_labels[i];
    const FineLabel p = pred_labels[i];
    ++r.confusion[index_of(g)][index_of(p)];
    fine_correct += (g == p);
    const bool g_se = to_binary(g) == BinaryLabel::kSE;
    const bool p_se = to_binary(p) == BinaryLabel::kSE;
    binary_correct += (g_se == p_se);
    tp += (g_se && p_se);
    fp += (!g_se && p_se);
    fn += (g_se && !p_se);
  }
  const double n = static_cast<double>(r.samples);
  r.accuracy_binary = binary_correct / n;
  r.accuracy_fine = fine_correct / n;
  const long denom = 2 * tp + fp + fn;
  r.f1_binary = denom == 0 ? 1.0 : static_cast<double>(2 * tp) / static_cast<double>(denom);
  for (FineLabel l : kFineLabels) {
    const auto& row = r.confusion[index_of(l)];
    const long total = row[0] + row[1] + row[2];
    r.tpr_per_fine_class[l] =
        total == 0 ? std::nullopt
                   : std::optional<double>(static_cast<double>(row[index_of(l)]) / total);
    const long se = row[index_of(FineLabel::kSexualActivity)] +
                    row[index_of(FineLabel::kSexualPosing)];
    r.se_rate_per_fine_class[l] =
        total == 0 ? std::nullopt : std::optional<double>(static_cast<double>(se) / total);
  }
  return r;
}

std::map<std::string, std::optional<double>> DetectionReport::metrics() const {
  return {{"ap_iou_0_5", ap_at_50}, {"ar", ar}};
}

DetectionReport detection_report(std::span<const ImageEval> images,
                                 const DetectionEvalOptions& options) {
  std::set<int> classes;
  for (const ImageEval& img : images) {
    for (const Detection& d : img.gts) classes.insert(d.class_id);
    for (const Detection& d : img.preds) classes.insert(d.class_id);
  }
  DetectionReport report;
  double ap_sum = 0.0;
  double ar_sum = 0.0;
  int with_gt = 0;
  for (int cls : classes) {
    std::vector<ImageDetections> per_image;
    DetectionClassStats stats;
    for (const ImageEval& img : images) {
      ImageDetections d;
      for (const Detection& p : img.preds) {
        if (p.class_id == cls) d.preds.push_back(p);
      }
      for (const Detection& g : img.gts) {
        if (g.class_id == cls) d.gts.push_back(g.box);
      }
      stats.num_gt += d.gts.size();
      stats.num_preds += d.preds.size();
      per_image.push_back(std::move(d));
    }
    stats.ap = average_precision(per_image, options.iou_threshold);
    stats.ar = options.coco_recall
                   ? average_recall_coco(per_image, options.max_dets)
                   : average_recall(per_image, options.iou_threshold, options.max_dets);
    if (stats.num_gt > 0) {
      ap_sum += stats.ap;
      ar_sum += stats.ar;
      ++with_gt;
    }
    report.per_class[cls] = stats;
  }
  if (with_gt > 0) {
    report.ap_at_50 = ap_sum / with_gt;
    report.ar = ar_sum / with_gt;
  }
  return report;
}

namespace {

template <typename Report>
MetricSummary aggregate(std::span<const Report> reports) {
  if (reports.empty()) throw InputError("cannot aggregate an empty list of reports");
  std::map<std::string, std::vector<double>> values;
  for (const Report& r : reports) {
    for (const auto& [name, v] : r.metrics()) {
      auto& bucket = values[name];
      if (v) bucket.push_back(*v);
    }
  }
  MetricSummary summary;
  summary.reports = reports.size();
  for (const auto& [name, vs] : values) {
    MetricSummary::Stat s;
    s.n = vs.size();
    if (!vs.empty()) {
      s.mean = std::accumulate(vs.begin(), vs.end(), 0.0) / static_cast<double>(vs.size());
      if (vs.size() > 1) {
        double ss = 0.0;
        for (double v : vs) ss += (v - s.mean) * (v - s.mean);
        s.std = std::sqrt(ss / static_cast<double>(vs.size() - 1));
      }
    }
    summary.metrics[name] = s;
  }
  return summary;
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

MetricSummary aggregate_folds(std::span<const ClassificationReport> reports) {
  return aggregate(reports);
}

MetricSummary aggregate_folds(std::span<const DetectionReport> reports) {
  return aggregate(reports);
}

json to_json(const ClassificationReport& report) {
  json j;
  for (const auto& [name, v] : report.metrics()) j[name] = optional_number(v);
  j["samples"] = report.samples;
  json confusion = json::array();
  for (const auto& row : report.confusion) confusion.push_back(row);
  j["confusion"] = confusion;
  json order = json::array();
  for (FineLabel l : kFineLabels) order.push_back(std::string(to_string(l)));
  j["confusion_order"] = order;
  return j;
}

json to_json(const DetectionReport& report) {
  json j;
  j["ap_iou_0_5"] = report.ap_at_50;
  j["ar"] = report.ar;
  json per = json::object();
  for (const auto& [cls, s] : report.per_class) {
    per[std::to_string(cls)] = {{"ap_iou_0_5", s.ap},
                                {"ar", s.ar},
                                {"num_gt", s.num_gt},
                                {"num_preds", s.num_preds}};
  }
  j["per_class"] = per;
  return j;
}

json to_json(const MetricSummary& summary) {
  json j;
  j["folds"] = summary.reports;
  json m = json::object();
  for (const auto& [name, s] : summary.metrics) {
    m[name] = {{"mean", s.n ? json(s.mean) : json(nullptr)},
               {"std", s.n ? json(s.std) : json(nullptr)},
               {"n", s.n}};
  }
  j["metrics"] = m;
  return j;
}

}  // namespace semod::evalkit
