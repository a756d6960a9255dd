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

#include "semod/pipelines.hpp"

#include <algorithm>
#include <mutex>

#include "semod/error.hpp"
#include "semod/parallel.hpp"

namespace semod::pipelines {

using nlohmann::json;

FineLabel aggregate_severity(std::span<const FineLabel> labels) {
  if (labels.empty()) throw InputError("cannot aggregate an empty label list");
  FineLabel best = labels.front();
  for (FineLabel l : labels) {
    if (severity(l) > severity(best)) best = l;
  }
  return best;
}

PipelineResult classify_end_to_end(const Classifier& model, const RgbImage& image) {
  if (image.empty()) throw InputError("image is empty or undecodable");
  PipelineResult r;
  r.strategy = "end2end";
  const Prob3 d = model.classify(image);
  r.fine_label = most_probable_label(d);
  r.distribution = d;
  return r;
}

namespace {

std::optional<Box> clamp_to(const Box& b, const RgbImage& image) {
  Box c{std::max(0.0, b.x_min), std::max(0.0, b.y_min),
        std::min(static_cast<double>(image.width()), b.x_max),
        std::min(static_cast<double>(image.height()), b.y_max)};
  if (!c.valid()) return std::nullopt;
  return c;
}

}  // namespace

PipelineResult classify_by_patches(const PersonDetector& detector, const Classifier& model,
                                   const RgbImage& image, const PatchOptions& options) {
  if (image.empty()) throw InputError("image is empty or undecodable");
  std::vector<Box> boxes;
  for (const evalkit::Detection& d : detector.detect(image)) {
    if (d.confidence < options.confidence_threshold) continue;
    if (auto c = clamp_to(d.box, image)) boxes.push_back(*c);
  }
  if (boxes.empty()) {
    PipelineResult r = classify_end_to_end(model, image);
    r.strategy = "patch";
    r.fallback_used = true;
    return r;
  }

  std::vector<std::optional<Prob3>> dists(boxes.size());
  auto run = [&](std::size_t i) {
    dists[i] = model.classify(crop_patch(image, boxes[i], options.padding_fraction));
  };
  if (model.concurrent_safe()) {
    parallel_for(boxes.size(), options.threads, run);
  } else {
    for (std::size_t i = 0; i < boxes.size(); ++i) run(i);
  }

  PipelineResult r;
  r.strategy = "patch";
  std::vector<FineLabel> labels;
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    const FineLabel l = most_probable_label(*dists[i]);
    labels.push_back(l);
    r.patches.push_back(PatchResult{boxes[i], l, *dists[i]});
  }
  r.fine_label = aggregate_severity(labels);
  const PatchResult* carrier = nullptr;
  for (const PatchResult& p : r.patches) {
    if (p.label != r.fine_label) continue;
    if (carrier == nullptr || p.distribution[r.fine_label] > carrier->distribution[r.fine_label]) {
      carrier = &p;
    }
  }
  r.distribution = carrier->distribution;
  return r;
}

bool nudity_from_parts(const BodyPartDetector& detector, const RgbImage& image,
                       double confidence_threshold) {
  for (const evalkit::Detection& d : detector.detect(image)) {
    if (d.class_id < 0 || d.class_id > 2) continue;
    if (d.confidence >= confidence_threshold) return true;
  }
  return false;
}

PipelineResult classify_by_body_parts(const BodyPartDetector& detector, const RgbImage& image,
                                      double confidence_threshold) {
  if (image.empty()) throw InputError("image is empty or undecodable");
  PipelineResult r;
  r.strategy = "bodyparts";
  r.nudity_flag = nudity_from_parts(detector, image, confidence_threshold);
  r.fine_label = *r.nudity_flag ? FineLabel::kSexualPosing : FineLabel::kNeutral;
  return r;
}

PipelineResult full_csam_pipeline(const AgeEstimator& age, const SeStrategy& se_strategy,
                                  const RgbImage& image) {
  if (image.empty()) throw InputError("image is empty or undecodable");
  PipelineResult r = se_strategy(image);
  r.strategy = "csam";
  r.age = age.estimate(image);
  r.final = csam_decision(*r.age, to_binary(r.fine_label));
  return r;
}

json to_json(const PipelineResult& result, const std::string& id) {
  auto dist_json = [](const Prob3& d) {
    json j;
    for (FineLabel l : kFineLabels) j[std::string(to_string(l))] = d[l];
    return j;
  };
  json j;
  j["schema_version"] = 1;
  j["id"] = id;
  j["strategy"] = result.strategy;
  j["fine_label"] = std::string(to_string(result.fine_label));
  j["distribution"] = result.distribution ? dist_json(*result.distribution) : json(nullptr);
  j["patches"] = json::array();
  for (const PatchResult& p : result.patches) {
    j["patches"].push_back({{"box", {p.box.x_min, p.box.y_min, p.box.x_max, p.box.y_max}},
                            {"fine_label", std::string(to_string(p.label))},
                            {"distribution", dist_json(p.distribution)}});
  }
  j["nudity_flag"] = result.nudity_flag ? json(*result.nudity_flag) : json(nullptr);
  j["fallback_used"] = result.fallback_used;
  j["age"] = result.age ? json(std::string(to_string(*result.age))) : json(nullptr);
  j["final"] = result.final ? json(std::string(to_string(*result.final))) : json(nullptr);
  return j;
}

Prob3 BackboneClassifier::classify(const RgbImage& image) const {
  const auto input =
      training::to_input(image, backbone_->input_width(), backbone_->input_height());
  return softmax(backbone_->forward(input));
}

namespace {

struct Component {
  int x0, y0, x1, y1;  // inclusive-exclusive
  int pixels;
};

// 4-connected components of pixels whose class (from `classify`) is >= 0.
template <typename ClassifyFn>
std::vector<std::pair<int, Component>> components(const RgbImage& image, ClassifyFn classify) {
  const int w = image.width();
  const int h = image.height();
  std::vector<int> cls(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) cls[y * w + x] = classify(image.pixel(x, y));
  }
  std::vector<bool> seen(cls.size(), false);
  std::vector<std::pair<int, Component>> out;
  std::vector<int> stack;
  for (int start = 0; start < w * h; ++start) {
    if (seen[start] || cls[start] < 0) continue;
    const int c = cls[start];
    Component comp{w, h, 0, 0, 0};
    stack.push_back(start);
    seen[start] = true;
    while (!stack.empty()) {
      const int p = stack.back();
      stack.pop_back();
      const int x = p % w;
      const int y = p / w;
      comp.x0 = std::min(comp.x0, x);
      comp.y0 = std::min(comp.y0, y);
      comp.x1 = std::max(comp.x1, x + 1);
      comp.y1 = std::max(comp.y1, y + 1);
      ++comp.pixels;
      const int nbr[4][2] = {{x - 1, y}, {x + 1, y}, {x, y - 1}, {x, y + 1}};
      for (const auto& n : nbr) {
        if (n[0] < 0 || n[1] < 0 || n[0] >= w || n[1] >= h) continue;
        const int q = n[1] * w + n[0];
        if (!seen[q] && cls[q] == c) {
          seen[q] = true;
          stack.push_back(q);
        }
      }
    }
    out.emplace_back(c, comp);
  }
  return out;
}

Box to_box(const Component& c) {
  return Box{static_cast<double>(c.x0), static_cast<double>(c.y0), static_cast<double>(c.x1),
             static_cast<double>(c.y1)};
}

}  // namespace

std::vector<evalkit::Detection> BlobPersonDetector::detect(const RgbImage& image) const {
  auto saturated = [](const std::uint8_t* p) {
    const int hi = std::max({p[0], p[1], p[2]});
    const int lo = std::min({p[0], p[1], p[2]});
    return hi - lo > 35 ? 0 : -1;
  };
  std::vector<evalkit::Detection> out;
  for (const auto& [cls, comp] : components(image, saturated)) {
    if (comp.pixels < min_area_) continue;
    const Box b = to_box(comp);
    out.push_back({b, 0, std::clamp(comp.pixels / b.area(), 0.0, 1.0)});
  }
  return out;
}

std::vector<evalkit::Detection> BlobBodyPartDetector::detect(const RgbImage& image) const {
  auto mark_class = [](const std::uint8_t* p) {
    const int r = p[0], g = p[1], b = p[2];
    if (r > 170 && g < 80 && b < 90) return static_cast<int>(datakit::BodyPart::kFemaleGenitalia);
    if (r > 150 && g < 80 && b > 130) return static_cast<int>(datakit::BodyPart::kMaleGenitalia);
    if (r > 200 && g > 90 && g < 150 && b < 60) return static_cast<int>(datakit::BodyPart::kAnalArea);
    return -1;
  };
  std::vector<evalkit::Detection> out;
  for (const auto& [cls, comp] : components(image, mark_class)) {
    if (comp.pixels < min_area_) continue;
    out.push_back({to_box(comp), cls, std::clamp(comp.pixels / 16.0, 0.0, 1.0)});
  }
  return out;
}

std::vector<evalkit::Detection> person_ground_truth(const datakit::ImageRecord& record) {
  std::vector<evalkit::Detection> out;
  for (const auto& p : record.person_boxes) out.push_back({p.box, 0, 1.0});
  return out;
}

std::vector<evalkit::Detection> part_ground_truth(const datakit::ImageRecord& record) {
  std::vector<evalkit::Detection> out;
  for (const auto& p : record.part_boxes) out.push_back({p.box, static_cast<int>(p.part), 1.0});
  return out;
}

AgePresence age_from_record(const datakit::ImageRecord& record) {
  for (const auto& p : record.person_boxes) {
    if (p.age_group == datakit::AgeGroup::kMinor) return AgePresence::kMinorPresent;
  }
  return AgePresence::kAdultsOnly;
}

}  // namespace semod::pipelines
