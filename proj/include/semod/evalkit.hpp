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

// Classification and detection metrics, and their cross-fold aggregation.

#include <array>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "semod/geometry.hpp"
#include "semod/taxonomy.hpp"

namespace semod::evalkit {

inline constexpr double kDefaultIouThreshold = 0.5;
inline constexpr int kDefaultMaxDetections = 100;

struct Detection {
  Box box;
  int class_id = 0;
  double confidence = 0.0;
};

double iou(const Box& a, const Box& b);

struct MatchResult {
  // Indexed like the input predictions.
  std::vector<bool> is_true_positive;
  std::vector<int> matched_gt;  // -1 when unmatched
  // Prediction indices in processing order (descending confidence, stable).
  std::vector<std::size_t> order;
  int true_positives = 0;
  int false_positives = 0;
  int missed = 0;
};

// Greedy matching of one image and one class: predictions by descending
// confidence (input order on ties) each take the highest-IoU still-unmatched
// ground truth with IoU >= threshold.
MatchResult match_detections(std::span<const Detection> preds, std::span<const Box> gts,
                             double iou_threshold = kDefaultIouThreshold);

// One image's predictions and ground truth for a single class.
struct ImageDetections {
  std::vector<Detection> preds;
  std::vector<Box> gts;
};

// Area under the precision-envelope PR curve, all recall points. Predictions
// of all images are pooled by confidence (ties: image order, then input
// order). Zero ground-truth boxes give 0.
double average_precision(std::span<const ImageDetections> images,
                         double iou_threshold = kDefaultIouThreshold);
double average_precision(std::span<const Detection> preds, std::span<const Box> gts,
                         double iou_threshold = kDefaultIouThreshold);

// Matched ground truth over total ground truth, keeping the `max_dets`
// most confident predictions per image. Zero ground truth gives 0.
double average_recall(std::span<const ImageDetections> images,
                      double iou_threshold = kDefaultIouThreshold,
                      int max_dets = kDefaultMaxDetections);
double average_recall(std::span<const Detection> preds, std::span<const Box> gts,
                      double iou_threshold = kDefaultIouThreshold,
                      int max_dets = kDefaultMaxDetections);
// Recall averaged over IoU 0.50:0.05:0.95, for comparison with COCO tables.
double average_recall_coco(std::span<const ImageDetections> images,
                           int max_dets = kDefaultMaxDetections);

struct ClassificationReport {
  double accuracy_binary = 0.0;
  double accuracy_fine = 0.0;
  double f1_binary = 0.0;  // SE is the positive class
  // Empty when the class has no ground-truth samples.
  std::map<FineLabel, std::optional<double>> tpr_per_fine_class;
  // Share of each ground-truth class predicted as SE; empty like the TPR.
  std::map<FineLabel, std::optional<double>> se_rate_per_fine_class;
  // confusion[gt][pred], kFineLabels order.
  std::array<std::array<long, 3>, 3> confusion{};
  std::size_t samples = 0;

  // Flat metric view: accuracy, accuracy_3class, f1_score, tpr_<label>,
  // se_rate_<label>.
  std::map<std::string, std::optional<double>> metrics() const;
};

// Throws InputError on empty or mismatched inputs.
ClassificationReport classification_report(std::span<const FineLabel> pred_labels,
                                           std::span<const FineLabel> gt_labels);

struct DetectionClassStats {
  double ap = 0.0;
  double ar = 0.0;
  std::size_t num_gt = 0;
  std::size_t num_preds = 0;
};

struct DetectionReport {
  double ap_at_50 = 0.0;  // mean over classes with ground truth
  double ar = 0.0;
  std::map<int, DetectionClassStats> per_class;

  std::map<std::string, std::optional<double>> metrics() const;
};

struct DetectionEvalOptions {
  double iou_threshold = kDefaultIouThreshold;
  int max_dets = kDefaultMaxDetections;
  bool coco_recall = false;  // AR over IoU 0.50:0.95 instead of the single threshold
};

// Per-image, multi-class detections and ground truth. Ground-truth
// Detection::confidence is ignored.
struct ImageEval {
  std::vector<Detection> preds;
  std::vector<Detection> gts;
};

DetectionReport detection_report(std::span<const ImageEval> images,
                                 const DetectionEvalOptions& options = {});

struct MetricSummary {
  struct Stat {
    double mean = 0.0;
    double std = 0.0;  // sample standard deviation; 0 for a single value
    std::size_t n = 0;
  };
  std::map<std::string, Stat> metrics;
  std::size_t reports = 0;
};

// Unweighted mean/std per metric over folds. Metrics missing in a fold
// (undefined TPR) are averaged over the folds that define them.
// Throws InputError on an empty list.
MetricSummary aggregate_folds(std::span<const ClassificationReport> reports);
MetricSummary aggregate_folds(std::span<const DetectionReport> reports);

nlohmann::json to_json(const ClassificationReport& report);
nlohmann::json to_json(const DetectionReport& report);
nlohmann::json to_json(const MetricSummary& summary);

}  // namespace semod::evalkit
