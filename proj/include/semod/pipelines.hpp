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

// Inference strategies: whole-image classification, person-patch
// classification with max-severity fusion, body-part nudity testing, and the
// two-model CSAM decision.

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "semod/datakit/records.hpp"
#include "semod/evalkit.hpp"
#include "semod/hloss.hpp"
#include "semod/image.hpp"
#include "semod/taxonomy.hpp"
#include "semod/training/backbone.hpp"

namespace semod::pipelines {

inline constexpr double kDefaultConfidenceThreshold = 0.5;
inline constexpr double kDefaultPaddingFraction = 0.1;

// Implementations report whether concurrent calls are allowed; the pipelines
// serialize calls to those that return false.
class Classifier {
 public:
  virtual ~Classifier() = default;
  virtual Prob3 classify(const RgbImage& image) const = 0;
  virtual bool concurrent_safe() const { return false; }
};

class PersonDetector {
 public:
  virtual ~PersonDetector() = default;
  virtual std::vector<evalkit::Detection> detect(const RgbImage& image) const = 0;
};

// Detection::class_id is the index of datakit::BodyPart.
class BodyPartDetector {
 public:
  virtual ~BodyPartDetector() = default;
  virtual std::vector<evalkit::Detection> detect(const RgbImage& image) const = 0;
};

class AgeEstimator {
 public:
  virtual ~AgeEstimator() = default;
  virtual AgePresence estimate(const RgbImage& image) const = 0;
};

struct PatchResult {
  Box box;
  FineLabel label = FineLabel::kNeutral;
  Prob3 distribution{0.0, 0.0, 1.0};
};

struct PipelineResult {
  std::string strategy;
  FineLabel fine_label = FineLabel::kNeutral;
  std::optional<Prob3> distribution;
  std::vector<PatchResult> patches;
  std::optional<bool> nudity_flag;
  bool fallback_used = false;
  std::optional<AgePresence> age;
  std::optional<FinalClass> final;
};

// Throws InputError when the list is empty.
FineLabel aggregate_severity(std::span<const FineLabel> labels);

// Throws InputError for an empty image.
PipelineResult classify_end_to_end(const Classifier& model, const RgbImage& image);

struct PatchOptions {
  double confidence_threshold = kDefaultConfidenceThreshold;
  double padding_fraction = kDefaultPaddingFraction;
  int threads = 1;
};

// Detections at or above the threshold (clamped to the image) are cropped and
// classified; the image label is the max-severity patch label and the
// reported distribution is that of the most confident patch carrying it.
// Without surviving detections the whole image is classified and
// fallback_used is set.
PipelineResult classify_by_patches(const PersonDetector& detector, const Classifier& model,
                                   const RgbImage& image, const PatchOptions& options = {});

// True iff some body-part detection has confidence >= threshold.
bool nudity_from_parts(const BodyPartDetector& detector, const RgbImage& image,
                       double confidence_threshold = kDefaultConfidenceThreshold);

// Body-part strategy as a pipeline: fine_label is kSexualPosing (the least
// severe SE label) when nudity is detected, else kNeutral.
PipelineResult classify_by_body_parts(const BodyPartDetector& detector, const RgbImage& image,
                                      double confidence_threshold = kDefaultConfidenceThreshold);

using SeStrategy = std::function<PipelineResult(const RgbImage&)>;

// Runs the SE strategy and the age estimator and fills `final`.
PipelineResult full_csam_pipeline(const AgeEstimator& age, const SeStrategy& se_strategy,
                                  const RgbImage& image);

nlohmann::json to_json(const PipelineResult& result, const std::string& id);

// ---------------------------------------------------------------------------
// Reference implementations.

class BackboneClassifier final : public Classifier {
 public:
  explicit BackboneClassifier(std::shared_ptr<const training::Backbone> backbone)
      : backbone_(std::move(backbone)) {}
  Prob3 classify(const RgbImage& image) const override;
  bool concurrent_safe() const override { return true; }

 private:
  std::shared_ptr<const training::Backbone> backbone_;
};

// Returns a fixed detection list for any image: precomputed detector output
// or ground-truth boxes.
class FixedDetections final : public PersonDetector, public BodyPartDetector {
 public:
  explicit FixedDetections(std::vector<evalkit::Detection> detections)
      : detections_(std::move(detections)) {}
  std::vector<evalkit::Detection> detect(const RgbImage&) const override { return detections_; }

 private:
  std::vector<evalkit::Detection> detections_;
};

class ConstantAgeEstimator final : public AgeEstimator {
 public:
  explicit ConstantAgeEstimator(AgePresence value) : value_(value) {}
  AgePresence estimate(const RgbImage&) const override { return value_; }

 private:
  AgePresence value_;
};

// Color-segmentation detectors for the synthetic proxy imagery: connected
// components of saturated pixels are actors; components of the three mark
// colors are body parts. Confidence is the component's fill of its box
// (persons) or its pixel count relative to a full mark (parts).
class BlobPersonDetector final : public PersonDetector {
 public:
  explicit BlobPersonDetector(int min_area = 20) : min_area_(min_area) {}
  std::vector<evalkit::Detection> detect(const RgbImage& image) const override;

 private:
  int min_area_;
};

class BlobBodyPartDetector final : public BodyPartDetector {
 public:
  explicit BlobBodyPartDetector(int min_area = 4) : min_area_(min_area) {}
  std::vector<evalkit::Detection> detect(const RgbImage& image) const override;

 private:
  int min_area_;
};

// Ground-truth helpers for evaluation and the "ground truth boxes" baseline.
std::vector<evalkit::Detection> person_ground_truth(const datakit::ImageRecord& record);
std::vector<evalkit::Detection> part_ground_truth(const datakit::ImageRecord& record);
AgePresence age_from_record(const datakit::ImageRecord& record);

}  // namespace semod::pipelines
