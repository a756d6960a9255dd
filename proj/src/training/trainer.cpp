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

#include "semod/training/trainer.hpp"

#include <cmath>
#include <numeric>
#include <set>

#include "semod/error.hpp"
#include "semod/evalkit.hpp"
#include "semod/parallel.hpp"
#include "semod/rng.hpp"

namespace semod::training {

using nlohmann::json;

namespace {

std::string to_string(FreezePolicy p) {
  return p == FreezePolicy::kNone ? "none" : "backbone_frozen";
}

FreezePolicy parse_freeze_policy(const std::string& s) {
  if (s == "none") return FreezePolicy::kNone;
  if (s == "backbone_frozen") return FreezePolicy::kBackboneFrozen;
  throw ParameterError("unknown freeze_policy '" + s + "'");
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> optional_from(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return it->get<double>();
}

}  // namespace

void StageSpec::validate() const {
  if (name.empty()) throw ParameterError("stage name must be non-empty");
  if (epochs < 1) throw ParameterError("stage '" + name + "': epochs must be >= 1");
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw ParameterError("stage '" + name + "': alpha must lie in [0, 1]");
  }
  if (batch_size < 1) throw ParameterError("stage '" + name + "': batch_size must be >= 1");
  for (const DatasetRef& d : datasets) {
    if (!(d.weight > 0.0) || !std::isfinite(d.weight)) {
      throw ParameterError("stage '" + name + "': dataset weights must be positive");
    }
  }
  optimizer.validate();
}

std::vector<double> StageSpec::normalized_weights() const {
  std::vector<double> w;
  double total = 0.0;
  for (const DatasetRef& d : datasets) total += d.weight;
  for (const DatasetRef& d : datasets) w.push_back(d.weight / total);
  return w;
}

StageSpec StageSpec::FromJson(const json& j) {
  static const std::set<std::string> kKeys = {
      "name",          "datasets",   "epochs",    "learning_rate", "alpha", "freeze_policy",
      "batch_size",    "optimizer",  "momentum",  "weight_decay"};
  if (!j.is_object()) throw ParameterError("stage must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!kKeys.contains(key)) throw ParameterError("unknown stage key '" + key + "'");
  }
  StageSpec s;
  try {
    s.name = j.value("name", s.name);
    if (auto it = j.find("datasets"); it != j.end()) {
      for (const json& d : *it) {
        for (const auto& [key, value] : d.items()) {
          if (key != "manifest" && key != "weight") {
            throw ParameterError("unknown dataset key '" + key + "'");
          }
        }
        s.datasets.push_back(DatasetRef{d.at("manifest").get<std::string>(), d.value("weight", 1.0)});
      }
    }
    s.epochs = j.value("epochs", s.epochs);
    s.optimizer.learning_rate = j.value("learning_rate", s.optimizer.learning_rate);
    s.alpha = j.value("alpha", s.alpha);
    s.freeze_policy = parse_freeze_policy(j.value("freeze_policy", std::string("none")));
    s.batch_size = j.value("batch_size", s.batch_size);
    s.optimizer.kind = parse_optimizer_kind(j.value("optimizer", std::string("sgd")));
    s.optimizer.momentum = j.value("momentum", s.optimizer.momentum);
    s.optimizer.weight_decay = j.value("weight_decay", s.optimizer.weight_decay);
  } catch (const json::exception& e) {
    throw ParameterError(std::string("stage: ") + e.what());
  }
  s.validate();
  return s;
}

json StageSpec::ToJson() const {
  json ds = json::array();
  for (const DatasetRef& d : datasets) ds.push_back({{"manifest", d.manifest}, {"weight", d.weight}});
  return {{"name", name},
          {"datasets", ds},
          {"epochs", epochs},
          {"learning_rate", optimizer.learning_rate},
          {"alpha", alpha},
          {"freeze_policy", to_string(freeze_policy)},
          {"batch_size", batch_size},
          {"optimizer", to_string(optimizer.kind)},
          {"momentum", optimizer.momentum},
          {"weight_decay", optimizer.weight_decay}};
}

json EpochRecord::ToJson() const {
  return {{"stage", stage},
          {"stage_index", stage_index},
          {"epoch", epoch},
          {"loss", mean_loss},
          {"val_binary_accuracy", optional_json(val_binary_accuracy)},
          {"val_fine_accuracy", optional_json(val_fine_accuracy)},
          {"val_loss", optional_json(val_loss)}};
}

EpochRecord EpochRecord::FromJson(const json& j) {
  EpochRecord r;
  r.stage = j.at("stage").get<std::string>();
  r.stage_index = j.at("stage_index").get<int>();
  r.epoch = j.at("epoch").get<int>();
  r.mean_loss = j.at("loss").get<double>();
  r.val_binary_accuracy = optional_from(j, "val_binary_accuracy");
  r.val_fine_accuracy = optional_from(j, "val_fine_accuracy");
  r.val_loss = optional_from(j, "val_loss");
  return r;
}

std::vector<datakit::ImageRecord> select_explicit_frames(
    const std::vector<datakit::ImageRecord>& records) {
  std::vector<datakit::ImageRecord> out;
  for (const datakit::ImageRecord& r : records) {
    if (!r.part_boxes.empty()) out.push_back(r);
  }
  return out;
}

std::uint64_t stage_seed(std::uint64_t seed, int stage_index) {
  return mix_seed(seed, 0x5eed0000ULL + static_cast<std::uint64_t>(stage_index));
}

namespace {

struct Draw {
  std::size_t source;
  std::size_t index;
};

std::vector<Draw> epoch_draws(std::span<const TrainSource> train,
                              const std::vector<double>& weights, Rng& rng) {
  std::size_t total = 0;
  for (const TrainSource& s : train) total += s.samples.size();
  std::vector<std::vector<std::size_t>> queues(train.size());
  std::vector<std::size_t> cursor(train.size(), 0);
  auto refill = [&](std::size_t s) {
    auto& q = queues[s];
    q.resize(train[s].samples.size());
    std::iota(q.begin(), q.end(), 0);
    rng.shuffle(std::span<std::size_t>(q));
    cursor[s] = 0;
  };
  for (std::size_t s = 0; s < train.size(); ++s) refill(s);

  std::vector<Draw> draws;
  draws.reserve(total);
  for (std::size_t i = 0; i < total; ++i) {
    std::size_t s = 0;
    if (train.size() > 1) {
      double u = rng.uniform();
      while (s + 1 < train.size() && u >= weights[s]) {
        u -= weights[s];
        ++s;
      }
    }
    if (cursor[s] == queues[s].size()) refill(s);
    draws.push_back(Draw{s, queues[s][cursor[s]++]});
  }
  return draws;
}

}  // namespace

TrainHistory train_stage(Backbone& backbone, const StageSpec& spec,
                         std::span<const TrainSource> train,
                         std::span<const LabeledSample> validation, std::uint64_t seed,
                         const TrainOptions& options) {
  spec.validate();
  if (train.empty()) throw ParameterError("stage '" + spec.name + "' has no training data");
  for (const TrainSource& s : train) {
    if (s.samples.empty()) {
      throw ParameterError("stage '" + spec.name + "' has an empty training source");
    }
    if (!(s.weight > 0.0)) throw ParameterError("training source weights must be positive");
  }
  std::vector<double> weights;
  {
    double total = 0.0;
    for (const TrainSource& s : train) total += s.weight;
    for (const TrainSource& s : train) weights.push_back(s.weight / total);
  }

  const std::size_t n_params = backbone.parameters().size();
  const auto [head_begin, head_end] = backbone.head_range();
  const std::size_t update_begin =
      spec.freeze_policy == FreezePolicy::kBackboneFrozen ? head_begin : 0;
  const std::size_t update_end =
      spec.freeze_policy == FreezePolicy::kBackboneFrozen ? head_end : n_params;

  Optimizer optimizer(spec.optimizer, n_params);
  if (!options.optimizer_state.empty()) optimizer.restore(options.optimizer_state);

  TrainHistory history;
  history.stage = spec.name;
  const int threads = options.threads;
  std::vector<double> sample_grads;
  std::vector<double> batch_grad(n_params);

  for (int epoch = std::max(1, options.start_epoch); epoch <= spec.epochs; ++epoch) {
    Rng rng(mix_seed(stage_seed(seed, options.stage_index), static_cast<std::uint64_t>(epoch)));
    const std::vector<Draw> draws = epoch_draws(train, weights, rng);

    // Loss sums per (source, index), reduced in canonical order at epoch end
    // so the reported mean does not depend on the shuffle.
    std::vector<std::vector<double>> loss_sum(train.size());
    for (std::size_t s = 0; s < train.size(); ++s) loss_sum[s].assign(train[s].samples.size(), 0.0);

    for (std::size_t start = 0; start < draws.size(); start += spec.batch_size) {
      const std::size_t count = std::min<std::size_t>(spec.batch_size, draws.size() - start);
      sample_grads.assign(count * n_params, 0.0);
      std::vector<double> losses(count, 0.0);
      try {
        parallel_for(count, threads, [&](std::size_t i) {
          const Draw& d = draws[start + i];
          const LabeledSample& sample = train[d.source].samples[d.index];
          losses[i] = backbone
                          .accumulate_gradient(sample.input, sample.label, spec.alpha,
                                               std::span<double>(&sample_grads[i * n_params], n_params))
                          .total;
        });
      } catch (const InputError& e) {
        throw DivergenceError("diverged in stage '" + spec.name + "' epoch " +
                              std::to_string(epoch) + ": " + e.what());
      }
      std::fill(batch_grad.begin(), batch_grad.end(), 0.0);
      for (std::size_t i = 0; i < count; ++i) {
        if (!std::isfinite(losses[i])) {
          throw DivergenceError("diverged in stage '" + spec.name + "' epoch " +
                                std::to_string(epoch) + ": non-finite loss");
        }
        const Draw& d = draws[start + i];
        loss_sum[d.source][d.index] += losses[i];
        const double* g = &sample_grads[i * n_params];
        for (std::size_t p = 0; p < n_params; ++p) batch_grad[p] += g[p];
      }
      const double scale = 1.0 / static_cast<double>(count);
      for (double& g : batch_grad) {
        g *= scale;
        if (!std::isfinite(g)) {
          throw DivergenceError("diverged in stage '" + spec.name + "' epoch " +
                                std::to_string(epoch) + ": non-finite gradient");
        }
      }
      optimizer.step(backbone.parameters(), batch_grad, update_begin, update_end);
    }
    for (double p : backbone.parameters()) {
      if (!std::isfinite(p)) {
        throw DivergenceError("diverged in stage '" + spec.name + "' epoch " +
                              std::to_string(epoch) + ": non-finite parameter");
      }
    }

    EpochRecord rec;
    rec.stage = spec.name;
    rec.stage_index = options.stage_index;
    rec.epoch = epoch;
    double total_loss = 0.0;
    for (const auto& per_source : loss_sum) {
      for (double v : per_source) total_loss += v;
    }
    rec.mean_loss = total_loss / static_cast<double>(draws.size());

    if (!validation.empty()) {
      std::vector<FineLabel> preds(validation.size());
      std::vector<FineLabel> truth(validation.size());
      std::vector<double> vloss(validation.size());
      try {
        parallel_for(validation.size(), threads, [&](std::size_t i) {
          const Logits3 z = backbone.forward(validation[i].input);
          preds[i] = most_probable_label(softmax(z));
          vloss[i] = hierarchical_ce_from_logits(z, validation[i].label, spec.alpha).total;
        });
      } catch (const InputError& e) {
        throw DivergenceError("diverged in stage '" + spec.name + "' epoch " +
                              std::to_string(epoch) + " (validation): " + e.what());
      }
      for (std::size_t i = 0; i < validation.size(); ++i) truth[i] = validation[i].label;
      const auto report = evalkit::classification_report(preds, truth);
      rec.val_binary_accuracy = report.accuracy_binary;
      rec.val_fine_accuracy = report.accuracy_fine;
      rec.val_loss = std::accumulate(vloss.begin(), vloss.end(), 0.0) / vloss.size();
    }
    history.epochs.push_back(rec);
    if (options.on_epoch_end) options.on_epoch_end(rec, backbone, optimizer);
  }
  return history;
}

std::vector<TrainHistory> pretrain_then_finetune(Backbone& backbone,
                                                 std::span<const StageRun> stages,
                                                 std::uint64_t seed,
                                                 const StagedOptions& options) {
  if (stages.empty()) throw ParameterError("at least one stage is required");
  if (options.start_stage < 0 || options.start_stage >= static_cast<int>(stages.size())) {
    throw ParameterError("resume stage index out of range");
  }
  std::vector<TrainHistory> histories;
  for (int i = options.start_stage; i < static_cast<int>(stages.size()); ++i) {
    const StageRun& run = stages[i];
    TrainOptions opts;
    opts.threads = options.threads;
    opts.stage_index = i;
    opts.on_epoch_end = options.on_epoch_end;
    if (i == options.start_stage) {
      opts.start_epoch = options.start_epoch;
      opts.optimizer_state = options.optimizer_state;
    }
    histories.push_back(train_stage(backbone, run.spec, run.train, run.validation, seed, opts));
    if (options.on_stage_end) options.on_stage_end(histories.back(), backbone);
  }
  return histories;
}

std::vector<LabeledSample> make_samples(const std::vector<datakit::ImageRecord>& records,
                                        const std::vector<RgbImage>& images, int width,
                                        int height) {
  if (records.size() != images.size()) throw InputError("records and images differ in count");
  std::vector<LabeledSample> out(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    out[i].id = records[i].id;
    out[i].label = records[i].fine_label;
    out[i].input = to_input(images[i], width, height);
  }
  return out;
}

}  // namespace semod::training
