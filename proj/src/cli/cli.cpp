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

#include "semod/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "semod/datakit/dedup.hpp"
#include "semod/datakit/folds.hpp"
#include "semod/datakit/manifest.hpp"
#include "semod/datakit/synthetic.hpp"
#include "semod/error.hpp"
#include "semod/evalkit.hpp"
#include "semod/fileio.hpp"
#include "semod/parallel.hpp"
#include "semod/pipelines.hpp"
#include "semod/training/checkpoint.hpp"
#include "semod/training/trainer.hpp"

namespace semod::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kSchemaVersion = 1;

fs::path output_path(const std::string& flag, const std::string& fallback) {
  const char* env = std::getenv(kOutputRootEnv);
  const fs::path root = env != nullptr && *env != '\0' ? fs::path(env) : fs::path();
  if (flag.empty()) return (root.empty() ? fs::path("semod_out") : root) / fallback;
  const fs::path p(flag);
  return p.is_relative() && !root.empty() ? root / p : p;
}

json parse_json_file(const fs::path& path) {
  if (!fs::exists(path)) throw ParameterError("file not found: '" + path.string() + "'");
  try {
    return json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw ParameterError(path.string() + ": " + e.what());
  }
}

std::string jsonl(const std::vector<json>& rows) {
  std::string out;
  for (const json& r : rows) {
    out += r.dump();
    out += '\n';
  }
  return out;
}

std::vector<json> read_jsonl(const fs::path& path) {
  std::vector<json> rows;
  std::istringstream in(read_file(path));
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      rows.push_back(json::parse(line));
    } catch (const json::exception& e) {
      throw InputError(path.string() + " line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return rows;
}

LabelMappingConfig mapping_from(const std::string& path) {
  return path.empty() ? LabelMappingConfig::Default() : datakit::load_label_mapping(path);
}

std::string list_ids(const std::vector<std::string>& ids) {
  constexpr std::size_t kShown = 20;
  std::string s;
  for (std::size_t i = 0; i < ids.size() && i < kShown; ++i) s += (i ? ", " : "") + ids[i];
  if (ids.size() > kShown) s += ", ... (" + std::to_string(ids.size()) + " total)";
  return s;
}

// Records restricted to one fold when --folds/--fold-index are given.
std::vector<datakit::ImageRecord> select_fold(const std::vector<datakit::ImageRecord>& records,
                                              const std::string& folds_path, int fold_index) {
  if (folds_path.empty() || fold_index < 0) return records;
  const auto folds = datakit::load_folds(folds_path);
  if (fold_index >= folds.k) throw ParameterError("--fold-index outside [0, k)");
  std::vector<datakit::ImageRecord> out;
  for (const auto& r : records) {
    auto it = folds.assignment.find(r.id);
    if (it != folds.assignment.end() && it->second == fold_index) out.push_back(r);
  }
  return out;
}

// ------------------------------------------------------------------ generate

struct GenerateArgs {
  std::string config;
  std::uint64_t seed = 0;
  std::string out;
  int num_samples = -1;
};

int cmd_generate(const GenerateArgs& a, std::ostream& out) {
  datakit::GeneratorSpec spec = datakit::GeneratorSpec::FromJson(parse_json_file(a.config));
  if (a.num_samples >= 0) spec.num_samples = a.num_samples;
  spec.validate();
  const fs::path dir = output_path(a.out, "dataset");
  const auto data = datakit::generate_synthetic_dataset(spec, a.seed);
  const fs::path manifest = datakit::write_synthetic_dataset(dir, data);
  json meta = {{"schema_version", kSchemaVersion}, {"seed", a.seed}, {"spec", spec.ToJson()}};
  write_file_atomic(dir / "generator.json", meta.dump(2) + "\n");
  const auto counts = datakit::class_counts(data.records);
  out << "wrote " << data.records.size() << " records to " << manifest.string();
  for (FineLabel l : kFineLabels) out << " " << to_string(l) << "=" << counts.per_label.at(l);
  out << " warning_neutral=" << counts.warning_neutral << "\n";
  return kExitOk;
}

// --------------------------------------------------------------------- split

struct SplitArgs {
  std::string manifest;
  std::string mapping;
  int k = 10;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_split(const SplitArgs& a, std::ostream& out) {
  const auto records = datakit::load_manifest(a.manifest, mapping_from(a.mapping));
  const auto folds = datakit::stratified_folds(records, a.k, a.seed);
  const fs::path path = output_path(a.out, "folds.csv");
  datakit::save_folds(path, folds);
  out << "wrote " << folds.k << " folds over " << records.size() << " records to "
      << path.string() << "\n";
  return kExitOk;
}

// --------------------------------------------------------------------- dedup

struct DedupArgs {
  std::string embeddings;
  double threshold = 0.0;
  std::string out;
};

int cmd_dedup(const DedupArgs& a, std::ostream& out) {
  const auto result =
      datakit::near_duplicate_filter(datakit::load_embeddings(a.embeddings), a.threshold);
  const fs::path dir = output_path(a.out, "dedup");
  std::string kept;
  for (const auto& id : result.kept) kept += id + "\n";
  write_file_atomic(dir / "kept.txt", kept);
  json clusters = json::array();
  std::size_t dropped = 0;
  for (const auto& [keep, members] : result.clusters) {
    json m = json::array({keep});
    for (const auto& id : members) m.push_back(id);
    dropped += members.size();
    clusters.push_back({{"kept", keep}, {"members", m}});
  }
  const json doc = {{"schema_version", kSchemaVersion},
                    {"threshold", a.threshold},
                    {"kept_count", result.kept.size()},
                    {"dropped_count", dropped},
                    {"clusters", clusters}};
  write_file_atomic(dir / "clusters.json", doc.dump(2) + "\n");
  out << "kept " << result.kept.size() << ", dropped " << dropped << " -> " << dir.string()
      << "\n";
  return kExitOk;
}

// --------------------------------------------------------------------- embed

struct EmbedArgs {
  std::string checkpoint;
  std::string manifest;
  std::string mapping;
  std::string format;
  std::string out;
  int threads = 0;
};

int cmd_embed(const EmbedArgs& a, std::ostream& out) {
  const auto backbone = training::restore_backbone(training::load_checkpoint(a.checkpoint));
  const auto records = datakit::load_manifest(a.manifest, mapping_from(a.mapping));
  const auto images = datakit::load_images(a.manifest, records);
  std::vector<datakit::EmbeddingVector> vectors(records.size());
  parallel_for(records.size(), a.threads, [&](std::size_t i) {
    vectors[i].id = records[i].id;
    vectors[i].values = backbone->embed(
        training::to_input(images[i], backbone->input_width(), backbone->input_height()));
  });
  const fs::path path = output_path(a.out, "embeddings.bin");
  std::string format = a.format;
  if (format.empty()) format = path.extension() == ".csv" ? "csv" : "binary";
  if (format == "csv") {
    datakit::save_embeddings_csv(path, vectors);
  } else {
    datakit::save_embeddings_binary(path, vectors);
  }
  out << "wrote " << vectors.size() << " embeddings to " << path.string() << "\n";
  return kExitOk;
}

// --------------------------------------------------------------------- train

struct TrainArgs {
  std::string config;
  std::string manifest;
  std::string folds;
  int fold_index = 0;
  std::string resume;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
};

fs::path resolve_against(const fs::path& base_dir, const std::string& p) {
  const fs::path path(p);
  return path.is_relative() ? base_dir / path : path;
}

struct LoadedSet {
  std::vector<training::LabeledSample> train;
  std::vector<training::LabeledSample> validation;
};

bool precedes_or_equal(const training::EpochRecord& r, int stage_index, int epoch) {
  return r.stage_index < stage_index || (r.stage_index == stage_index && r.epoch <= epoch);
}

int cmd_train(const TrainArgs& a, std::ostream& out) {
  training::TrainingConfig cfg = training::load_training_config(a.config);
  if (a.seed) cfg.seed = *a.seed;
  if (a.threads) cfg.threads = *a.threads;
  if (!a.manifest.empty()) cfg.stages.back().datasets = {training::DatasetRef{a.manifest, 1.0}};
  for (const auto& stage : cfg.stages) {
    if (stage.datasets.empty()) {
      throw ParameterError("stage '" + stage.name + "' lists no datasets");
    }
  }
  const fs::path config_dir = fs::path(a.config).parent_path();
  // Flag-supplied paths are taken as given; file paths resolve against the config.
  auto dataset_path = [&](const std::string& p, bool from_flag) {
    return from_flag ? fs::path(p) : resolve_against(config_dir, p);
  };

  json run_config = {{"training", cfg.ToJson()},
                     {"folds", a.folds},
                     {"fold_index", a.folds.empty() ? -1 : a.fold_index}};
  const std::string fingerprint = training::config_fingerprint(run_config);

  const LabelMappingConfig mapping =
      cfg.label_mapping.empty() ? LabelMappingConfig::Default()
                                : datakit::load_label_mapping(resolve_against(config_dir, cfg.label_mapping));
  std::optional<datakit::FoldAssignment> folds;
  std::set<int> holdout;
  if (!a.folds.empty()) {
    folds = datakit::load_folds(a.folds);
    holdout = datakit::holdout_set(*folds, a.fold_index, cfg.holdout_folds);
  }

  auto backbone = training::make_backbone(cfg.model, cfg.seed);
  const int width = backbone->input_width();
  const int height = backbone->input_height();

  std::map<fs::path, LoadedSet> cache;
  auto load_set = [&](const fs::path& manifest) -> const LoadedSet& {
    auto it = cache.find(manifest);
    if (it != cache.end()) return it->second;
    const auto records = datakit::load_manifest(manifest, mapping);
    const auto images = datakit::load_images(manifest, records);
    auto samples = training::make_samples(records, images, width, height);
    LoadedSet set;
    for (auto& s : samples) {
      bool held_out = false;
      if (folds) {
        auto f = folds->assignment.find(s.id);
        held_out = f != folds->assignment.end() && holdout.contains(f->second);
      }
      (held_out ? set.validation : set.train).push_back(std::move(s));
    }
    return cache.emplace(manifest, std::move(set)).first->second;
  };

  std::vector<training::StageRun> runs;
  for (std::size_t si = 0; si < cfg.stages.size(); ++si) {
    const auto& stage = cfg.stages[si];
    training::StageRun run;
    run.spec = stage;
    const bool from_flag = !a.manifest.empty() && si + 1 == cfg.stages.size();
    for (const auto& ref : stage.datasets) {
      const LoadedSet& set = load_set(dataset_path(ref.manifest, from_flag));
      if (set.train.empty()) {
        throw ParameterError("dataset '" + ref.manifest + "' has no training records");
      }
      run.train.push_back({set.train, ref.weight});
      run.validation.insert(run.validation.end(), set.validation.begin(), set.validation.end());
    }
    runs.push_back(std::move(run));
  }

  const fs::path dir = output_path(a.out, "train");
  const fs::path log_path = dir / "train_log.jsonl";
  std::vector<training::EpochRecord> log;
  std::vector<std::string> checkpoints;

  training::StagedOptions opts;
  opts.threads = cfg.threads;
  if (!a.resume.empty()) {
    const training::Checkpoint ck = training::load_checkpoint(a.resume);
    if (ck.fingerprint != fingerprint) {
      throw ParameterError("checkpoint '" + a.resume +
                           "' was produced by a different configuration");
    }
    auto restored = training::restore_backbone(ck);
    backbone = std::move(restored);
    if (fs::exists(log_path)) {
      for (const json& row : read_jsonl(log_path)) {
        auto rec = training::EpochRecord::FromJson(row);
        if (precedes_or_equal(rec, ck.stage_index, ck.epoch)) log.push_back(rec);
      }
    }
    opts.start_stage = ck.stage_index;
    opts.start_epoch = ck.epoch + 1;
    opts.optimizer_state = ck.optimizer_state;
    if (opts.start_epoch > cfg.stages[ck.stage_index].epochs) {
      ++opts.start_stage;
      opts.start_epoch = 1;
      opts.optimizer_state.clear();
    }
    out << "resuming at stage " << opts.start_stage << " epoch " << opts.start_epoch << "\n";
  }

  auto write_log = [&] {
    std::vector<json> rows;
    for (const auto& r : log) rows.push_back(r.ToJson());
    write_file_atomic(log_path, jsonl(rows));
  };
  opts.on_epoch_end = [&](const training::EpochRecord& rec, const training::Backbone& b,
                          const training::Optimizer& opt) {
    std::string name = rec.stage + "_epoch" + std::to_string(rec.epoch) + ".ckpt";
    const fs::path path = dir / "checkpoints" / name;
    training::save_checkpoint(path, training::make_checkpoint(b, rec.stage, rec.stage_index,
                                                              rec.epoch, run_config, opt.state()));
    checkpoints.push_back(path.string());
    log.push_back(rec);
    write_log();
    out << rec.stage << " epoch " << rec.epoch << " loss " << rec.mean_loss;
    if (rec.val_binary_accuracy) out << " val_accuracy " << *rec.val_binary_accuracy;
    out << "\n";
  };

  if (opts.start_stage < static_cast<int>(runs.size())) {
    training::pretrain_then_finetune(*backbone, runs, cfg.seed, opts);
  }
  const auto& last = cfg.stages.back();
  training::save_checkpoint(dir / "model.ckpt",
                            training::make_checkpoint(*backbone, last.name,
                                                      static_cast<int>(cfg.stages.size()) - 1,
                                                      last.epochs, run_config));
  json history = json::array();
  for (std::size_t si = 0; si < cfg.stages.size(); ++si) {
    json epochs = json::array();
    for (const auto& r : log) {
      if (r.stage_index == static_cast<int>(si)) epochs.push_back(r.ToJson());
    }
    history.push_back({{"stage", cfg.stages[si].name}, {"epochs", epochs}});
  }
  write_file_atomic(dir / "history.json",
                    json{{"schema_version", kSchemaVersion},
                         {"fingerprint", fingerprint},
                         {"config", run_config},
                         {"stages", history},
                         {"checkpoints", checkpoints}}
                            .dump(2) +
                        "\n");
  out << "wrote " << (dir / "model.ckpt").string() << "\n";
  return kExitOk;
}

// ------------------------------------------------------------- detections IO

json detections_to_json(const std::vector<evalkit::Detection>& dets) {
  json arr = json::array();
  for (const auto& d : dets) {
    arr.push_back({{"box", {d.box.x_min, d.box.y_min, d.box.x_max, d.box.y_max}},
                   {"class_id", d.class_id},
                   {"confidence", d.confidence}});
  }
  return arr;
}

std::map<std::string, std::vector<evalkit::Detection>> load_detection_file(const fs::path& path) {
  std::map<std::string, std::vector<evalkit::Detection>> out;
  for (const json& row : read_jsonl(path)) {
    try {
      auto& list = out[row.at("id").get<std::string>()];
      for (const json& d : row.at("detections")) {
        const auto b = d.at("box");
        evalkit::Detection det{Box{b.at(0).get<double>(), b.at(1).get<double>(),
                                   b.at(2).get<double>(), b.at(3).get<double>()},
                               d.value("class_id", 0), d.at("confidence").get<double>()};
        if (!det.box.valid()) throw InputError("invalid detection box");
        list.push_back(det);
      }
    } catch (const json::exception& e) {
      throw InputError(path.string() + ": " + e.what());
    }
  }
  return out;
}

enum class DetectorKind { kNone, kBlob, kGroundTruth, kFile };

struct DetectorChoice {
  DetectorKind kind = DetectorKind::kNone;
  std::map<std::string, std::vector<evalkit::Detection>> file;
};

DetectorChoice parse_detector(const std::string& flag) {
  DetectorChoice c;
  if (flag.empty()) return c;
  if (flag == "blob") {
    c.kind = DetectorKind::kBlob;
  } else if (flag == "ground-truth") {
    c.kind = DetectorKind::kGroundTruth;
  } else {
    c.kind = DetectorKind::kFile;
    if (!fs::exists(flag)) throw ParameterError("detector file not found: '" + flag + "'");
    c.file = load_detection_file(flag);
  }
  return c;
}

std::vector<evalkit::Detection> run_detector(const DetectorChoice& c, bool parts,
                                             const datakit::ImageRecord& record,
                                             const RgbImage& image) {
  switch (c.kind) {
    case DetectorKind::kBlob:
      return parts ? pipelines::BlobBodyPartDetector().detect(image)
                   : pipelines::BlobPersonDetector().detect(image);
    case DetectorKind::kGroundTruth:
      return parts ? pipelines::part_ground_truth(record) : pipelines::person_ground_truth(record);
    case DetectorKind::kFile: {
      auto it = c.file.find(record.id);
      return it == c.file.end() ? std::vector<evalkit::Detection>{} : it->second;
    }
    case DetectorKind::kNone:
      break;
  }
  throw ParameterError("no detector configured");
}

// --------------------------------------------------------------------- infer

struct InferArgs {
  std::string checkpoint;
  std::string manifest;
  std::string mapping;
  std::string strategy = "end2end";
  std::string se_strategy = "end2end";
  std::string detector;
  std::string age_stub;
  double threshold = pipelines::kDefaultConfidenceThreshold;
  double padding = pipelines::kDefaultPaddingFraction;
  std::string folds;
  int fold_index = -1;
  std::string out;
  int threads = 0;
};

int cmd_infer(const InferArgs& a, std::ostream& out) {
  static const std::set<std::string> kStrategies = {"end2end", "patch", "bodyparts", "csam"};
  if (!kStrategies.contains(a.strategy)) {
    throw ParameterError("unknown strategy '" + a.strategy + "'");
  }
  const bool csam = a.strategy == "csam";
  const std::string se = csam ? a.se_strategy : a.strategy;
  if (se != "end2end" && se != "patch" && se != "bodyparts") {
    throw ParameterError("unknown SE strategy '" + se + "'");
  }
  if (csam && a.age_stub.empty()) {
    throw ParameterError("strategy csam requires --age-stub (minor_present|adults_only|ground-truth)");
  }
  std::optional<AgePresence> constant_age;
  if (csam && a.age_stub != "ground-truth") constant_age = parse_age_presence(a.age_stub);
  const DetectorChoice detector = parse_detector(a.detector);
  if ((se == "patch" || se == "bodyparts") && detector.kind == DetectorKind::kNone) {
    throw ParameterError("strategy " + se + " requires --detector (blob|ground-truth|<file>)");
  }
  std::shared_ptr<const training::Backbone> backbone;
  if (se != "bodyparts") {
    if (a.checkpoint.empty()) throw ParameterError("strategy " + se + " requires --checkpoint");
    backbone = training::restore_backbone(training::load_checkpoint(a.checkpoint));
  }

  const auto all = datakit::load_manifest(a.manifest, mapping_from(a.mapping));
  const auto records = select_fold(all, a.folds, a.fold_index);
  const auto images = datakit::load_images(a.manifest, records);
  std::optional<pipelines::BackboneClassifier> classifier;
  if (backbone) classifier.emplace(backbone);

  std::vector<json> rows(records.size());
  parallel_for(records.size(), a.threads, [&](std::size_t i) {
    const auto& rec = records[i];
    auto se_run = [&](const RgbImage& img) {
      if (se == "end2end") return pipelines::classify_end_to_end(*classifier, img);
      const pipelines::FixedDetections dets(run_detector(detector, se == "bodyparts", rec, img));
      if (se == "patch") {
        return pipelines::classify_by_patches(dets, *classifier, img,
                                              {a.threshold, a.padding, 1});
      }
      return pipelines::classify_by_body_parts(dets, img, a.threshold);
    };
    pipelines::PipelineResult r;
    if (csam) {
      const pipelines::ConstantAgeEstimator age(constant_age ? *constant_age
                                                             : pipelines::age_from_record(rec));
      r = pipelines::full_csam_pipeline(age, se_run, images[i]);
      r.strategy = "csam";
    } else {
      r = se_run(images[i]);
    }
    rows[i] = pipelines::to_json(r, rec.id);
  });
  const fs::path path = output_path(a.out, "results.jsonl");
  write_file_atomic(path, jsonl(rows));
  std::map<std::string, int> counts;
  for (const json& r : rows) ++counts[r["fine_label"].get<std::string>()];
  out << "wrote " << rows.size() << " results to " << path.string();
  for (const auto& [label, n] : counts) out << " " << label << "=" << n;
  out << "\n";
  return kExitOk;
}

// -------------------------------------------------------------------- detect

struct DetectArgs {
  std::string manifest;
  std::string mapping;
  std::string kind = "persons";
  std::string detector = "blob";
  std::string out;
};

int cmd_detect(const DetectArgs& a, std::ostream& out) {
  if (a.kind != "persons" && a.kind != "parts") {
    throw ParameterError("--kind must be persons or parts");
  }
  const DetectorChoice detector = parse_detector(a.detector);
  const auto records = datakit::load_manifest(a.manifest, mapping_from(a.mapping));
  const auto images = datakit::load_images(a.manifest, records);
  std::vector<json> rows;
  for (std::size_t i = 0; i < records.size(); ++i) {
    rows.push_back({{"schema_version", kSchemaVersion},
                    {"id", records[i].id},
                    {"kind", a.kind},
                    {"detections", detections_to_json(run_detector(
                                       detector, a.kind == "parts", records[i], images[i]))}});
  }
  const fs::path path = output_path(a.out, "detections.jsonl");
  write_file_atomic(path, jsonl(rows));
  out << "wrote detections for " << rows.size() << " images to " << path.string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------- eval

struct EvalArgs {
  std::string results;
  std::string manifest;
  std::string mapping;
  std::string folds;
  int fold_index = -1;
  std::string task = "classify";
  double iou_threshold = evalkit::kDefaultIouThreshold;
  bool coco_recall = false;
  std::string out;
};

// Evaluation groups: one per fold when folds are given without an index.
std::vector<std::pair<std::string, std::vector<datakit::ImageRecord>>> eval_groups(
    const std::vector<datakit::ImageRecord>& records, const EvalArgs& a) {
  std::vector<std::pair<std::string, std::vector<datakit::ImageRecord>>> groups;
  if (a.folds.empty()) {
    groups.emplace_back("all", records);
    return groups;
  }
  if (a.fold_index >= 0) {
    groups.emplace_back("fold_" + std::to_string(a.fold_index),
                        select_fold(records, a.folds, a.fold_index));
    return groups;
  }
  const auto folds = datakit::load_folds(a.folds);
  groups.resize(folds.k);
  for (int f = 0; f < folds.k; ++f) groups[f].first = "fold_" + std::to_string(f);
  std::vector<std::string> unassigned;
  for (const auto& r : records) {
    auto it = folds.assignment.find(r.id);
    if (it == folds.assignment.end()) {
      unassigned.push_back(r.id);
      continue;
    }
    groups[it->second].second.push_back(r);
  }
  if (!unassigned.empty()) {
    throw InputError("manifest ids missing from the fold file: " + list_ids(unassigned));
  }
  return groups;
}

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  if (a.task != "classify" && a.task != "persons" && a.task != "parts") {
    throw ParameterError("--task must be classify, persons or parts");
  }
  const auto records = datakit::load_manifest(a.manifest, mapping_from(a.mapping));
  std::set<std::string> manifest_ids;
  for (const auto& r : records) manifest_ids.insert(r.id);

  std::map<std::string, FineLabel> labels;
  std::map<std::string, std::vector<evalkit::Detection>> detections;
  std::vector<std::string> unknown;
  if (a.task == "classify") {
    for (const json& row : read_jsonl(a.results)) {
      try {
        const std::string id = row.at("id").get<std::string>();
        if (!manifest_ids.contains(id)) unknown.push_back(id);
        labels[id] = parse_fine_label(row.at("fine_label").get<std::string>());
      } catch (const json::exception& e) {
        throw InputError(a.results + ": " + e.what());
      }
    }
  } else {
    detections = load_detection_file(a.results);
    for (const auto& [id, d] : detections) {
      if (!manifest_ids.contains(id)) unknown.push_back(id);
    }
  }
  if (!unknown.empty()) throw InputError("result ids not in the manifest: " + list_ids(unknown));

  const auto groups = eval_groups(records, a);
  std::vector<std::string> missing;
  for (const auto& [name, group] : groups) {
    for (const auto& r : group) {
      const bool present = a.task == "classify" ? labels.contains(r.id) : detections.contains(r.id);
      if (!present) missing.push_back(r.id);
    }
  }
  if (!missing.empty()) throw InputError("ids without results: " + list_ids(missing));

  json per_group = json::array();
  json summary;
  if (a.task == "classify") {
    std::vector<evalkit::ClassificationReport> reports;
    for (const auto& [name, group] : groups) {
      if (group.empty()) continue;
      std::vector<FineLabel> pred, gt;
      for (const auto& r : group) {
        pred.push_back(labels.at(r.id));
        gt.push_back(r.fine_label);
      }
      reports.push_back(evalkit::classification_report(pred, gt));
      json j = evalkit::to_json(reports.back());
      j["group"] = name;
      per_group.push_back(j);
    }
    if (reports.empty()) throw InputError("nothing to evaluate");
    summary = evalkit::to_json(evalkit::aggregate_folds(std::span<const evalkit::ClassificationReport>(reports)));
  } else {
    const bool parts = a.task == "parts";
    std::vector<evalkit::DetectionReport> reports;
    for (const auto& [name, group] : groups) {
      if (group.empty()) continue;
      std::vector<evalkit::ImageEval> images;
      for (const auto& r : group) {
        images.push_back({detections.at(r.id), parts ? pipelines::part_ground_truth(r)
                                                     : pipelines::person_ground_truth(r)});
      }
      reports.push_back(evalkit::detection_report(
          images, {a.iou_threshold, evalkit::kDefaultMaxDetections, a.coco_recall}));
      json j = evalkit::to_json(reports.back());
      j["group"] = name;
      per_group.push_back(j);
    }
    if (reports.empty()) throw InputError("nothing to evaluate");
    summary = evalkit::to_json(evalkit::aggregate_folds(std::span<const evalkit::DetectionReport>(reports)));
  }
  const json doc = {{"schema_version", kSchemaVersion},
                    {"task", a.task},
                    {"groups", per_group},
                    {"summary", summary}};
  const fs::path path = output_path(a.out, "report.json");
  write_file_atomic(path, doc.dump(2) + "\n");
  for (const auto& [name, stat] : summary["metrics"].items()) {
    if (stat["mean"].is_null()) continue;
    out << name << " " << stat["mean"].get<double>() << " +- " << stat["std"].get<double>() << "\n";
  }
  out << "wrote " << path.string() << "\n";
  return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"semod: sexually-explicit content moderation toolkit"};
  app.name("semod");
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* generate = app.add_subcommand("generate", "Render a synthetic proxy dataset");
  generate->add_option("--config", gen.config, "Generator spec (JSON)")->required();
  generate->add_option("--seed", gen.seed, "Random seed");
  generate->add_option("--num-samples", gen.num_samples, "Override num_samples");
  generate->add_option("--out", gen.out, "Output directory");

  SplitArgs split_args;
  auto* split = app.add_subcommand("split", "Stratified k-fold assignment");
  split->add_option("--manifest", split_args.manifest, "Manifest (JSON lines)")->required();
  split->add_option("--mapping", split_args.mapping, "Label mapping (JSON)");
  split->add_option("--k", split_args.k, "Number of folds")->capture_default_str();
  split->add_option("--seed", split_args.seed, "Random seed");
  split->add_option("--out", split_args.out, "Fold CSV path");

  DedupArgs dedup_args;
  auto* dedup = app.add_subcommand("dedup", "Near-duplicate filtering of embeddings");
  dedup->add_option("--embeddings", dedup_args.embeddings, "Embedding file (CSV or binary)")
      ->required();
  dedup->add_option("--threshold", dedup_args.threshold, "Euclidean distance threshold")
      ->required();
  dedup->add_option("--out", dedup_args.out, "Output directory");

  EmbedArgs embed_args;
  auto* embed = app.add_subcommand("embed", "Penultimate-layer embeddings for a manifest");
  embed->add_option("--checkpoint", embed_args.checkpoint, "Model checkpoint")->required();
  embed->add_option("--manifest", embed_args.manifest, "Manifest (JSON lines)")->required();
  embed->add_option("--mapping", embed_args.mapping, "Label mapping (JSON)");
  embed->add_option("--format", embed_args.format, "csv or binary")
      ->check(CLI::IsMember({"csv", "binary"}));
  embed->add_option("--threads", embed_args.threads, "Worker threads (0 = all cores)");
  embed->add_option("--out", embed_args.out, "Output file");

  TrainArgs train_args;
  std::uint64_t train_seed = 0;
  int train_threads = 0;
  auto* train = app.add_subcommand("train", "Staged training from a config file");
  train->add_option("--config", train_args.config, "Training config (JSON)")->required();
  train->add_option("--manifest", train_args.manifest, "Replace the last stage's datasets");
  train->add_option("--folds", train_args.folds, "Fold CSV; holdout folds become validation");
  train->add_option("--fold-index", train_args.fold_index, "Validation fold")
      ->capture_default_str();
  train->add_option("--resume", train_args.resume, "Checkpoint to resume from");
  auto* seed_opt = train->add_option("--seed", train_seed, "Override the config seed");
  auto* threads_opt = train->add_option("--threads", train_threads, "Override config threads");
  train->add_option("--out", train_args.out, "Output directory");

  InferArgs infer_args;
  auto* infer = app.add_subcommand("infer", "Run an inference strategy over a manifest");
  infer->add_option("--checkpoint", infer_args.checkpoint, "Model checkpoint");
  infer->add_option("--manifest", infer_args.manifest, "Manifest (JSON lines)")->required();
  infer->add_option("--mapping", infer_args.mapping, "Label mapping (JSON)");
  infer->add_option("--strategy", infer_args.strategy, "end2end | patch | bodyparts | csam")
      ->capture_default_str();
  infer->add_option("--se-strategy", infer_args.se_strategy,
                    "SE strategy inside csam: end2end | patch | bodyparts")
      ->capture_default_str();
  infer->add_option("--detector", infer_args.detector, "blob | ground-truth | <detections.jsonl>");
  infer->add_option("--age-stub", infer_args.age_stub,
                    "minor_present | adults_only | ground-truth (required for csam)");
  infer->add_option("--threshold", infer_args.threshold, "Detector confidence threshold")
      ->capture_default_str();
  infer->add_option("--padding", infer_args.padding, "Patch padding fraction")
      ->capture_default_str();
  infer->add_option("--folds", infer_args.folds, "Fold CSV");
  infer->add_option("--fold-index", infer_args.fold_index, "Only records of this fold");
  infer->add_option("--threads", infer_args.threads, "Worker threads (0 = all cores)");
  infer->add_option("--out", infer_args.out, "Results (JSON lines)");

  DetectArgs detect_args;
  auto* detect = app.add_subcommand("detect", "Write person or body-part detections");
  detect->add_option("--manifest", detect_args.manifest, "Manifest (JSON lines)")->required();
  detect->add_option("--mapping", detect_args.mapping, "Label mapping (JSON)");
  detect->add_option("--kind", detect_args.kind, "persons | parts")->capture_default_str();
  detect->add_option("--detector", detect_args.detector, "blob | ground-truth")
      ->capture_default_str();
  detect->add_option("--out", detect_args.out, "Detections (JSON lines)");

  EvalArgs eval_args;
  auto* eval = app.add_subcommand("eval", "Metrics report for inference or detection results");
  eval->add_option("--results", eval_args.results, "Results (JSON lines)")->required();
  eval->add_option("--manifest", eval_args.manifest, "Manifest (JSON lines)")->required();
  eval->add_option("--mapping", eval_args.mapping, "Label mapping (JSON)");
  eval->add_option("--folds", eval_args.folds, "Fold CSV: one report per fold plus mean/std");
  eval->add_option("--fold-index", eval_args.fold_index, "Evaluate a single fold");
  eval->add_option("--task", eval_args.task, "classify | persons | parts")->capture_default_str();
  eval->add_option("--threshold", eval_args.iou_threshold, "IoU threshold for detection tasks")
      ->capture_default_str();
  eval->add_flag("--coco-recall", eval_args.coco_recall, "AR averaged over IoU 0.50:0.95");
  eval->add_option("--out", eval_args.out, "Report path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*generate) return cmd_generate(gen, out);
    if (*split) return cmd_split(split_args, out);
    if (*dedup) return cmd_dedup(dedup_args, out);
    if (*embed) return cmd_embed(embed_args, out);
    if (*train) {
      if (seed_opt->count() > 0) train_args.seed = train_seed;
      if (threads_opt->count() > 0) train_args.threads = train_threads;
      return cmd_train(train_args, out);
    }
    if (*infer) return cmd_infer(infer_args, out);
    if (*detect) return cmd_detect(detect_args, out);
    if (*eval) return cmd_eval(eval_args, out);
  } catch (const DivergenceError& e) {
    err << "diverged: " << e.what() << "\n";
    return kExitRuntime;
  } catch (const ParameterError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitConfig;
}

}  // namespace semod::cli
