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

#include "semod/training/checkpoint.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <set>

#include "semod/error.hpp"
#include "semod/fileio.hpp"

namespace semod::training {

using nlohmann::json;

namespace {

constexpr char kMagic[8] = {'S', 'E', 'M', 'O', 'D', 'C', 'K', '1'};
constexpr int kSchemaVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "checkpoint codec assumes a little-endian host");

void put_u64(std::string& out, std::uint64_t v) {
  char buf[8];
  std::memcpy(buf, &v, 8);
  out.append(buf, 8);
}

void put_doubles(std::string& out, const std::vector<double>& values) {
  put_u64(out, values.size());
  const auto* p = reinterpret_cast<const char*>(values.data());
  out.append(p, values.size() * sizeof(double));
}

std::uint64_t take_u64(const std::string& in, std::size_t& pos) {
  if (in.size() - pos < 8) throw InputError("checkpoint truncated");
  std::uint64_t v;
  std::memcpy(&v, in.data() + pos, 8);
  pos += 8;
  return v;
}

std::vector<double> take_doubles(const std::string& in, std::size_t& pos) {
  const std::uint64_t n = take_u64(in, pos);
  if ((in.size() - pos) / sizeof(double) < n) throw InputError("checkpoint truncated");
  std::vector<double> values(n);
  std::memcpy(values.data(), in.data() + pos, n * sizeof(double));
  pos += n * sizeof(double);
  return values;
}

}  // namespace

Checkpoint make_checkpoint(const Backbone& backbone, const std::string& stage, int stage_index,
                           int epoch, const json& config, std::vector<double> optimizer_state) {
  Checkpoint c;
  c.architecture = backbone.architecture();
  c.stage = stage;
  c.stage_index = stage_index;
  c.epoch = epoch;
  c.config = config;
  c.fingerprint = config_fingerprint(config);
  c.parameters.assign(backbone.parameters().begin(), backbone.parameters().end());
  c.optimizer_state = std::move(optimizer_state);
  return c;
}

std::string encode_checkpoint(const Checkpoint& c) {
  const json header = {{"schema_version", kSchemaVersion},
                       {"architecture", c.architecture},
                       {"stage", c.stage},
                       {"stage_index", c.stage_index},
                       {"epoch", c.epoch},
                       {"fingerprint", c.fingerprint},
                       {"config", c.config}};
  const std::string text = header.dump();
  std::string out(kMagic, 8);
  put_u64(out, text.size());
  out += text;
  put_doubles(out, c.parameters);
  put_doubles(out, c.optimizer_state);
  return out;
}

Checkpoint decode_checkpoint(const std::string& bytes) {
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kMagic, 8) != 0) {
    throw InputError("not a semod checkpoint");
  }
  std::size_t pos = 8;
  const std::uint64_t header_len = take_u64(bytes, pos);
  if (bytes.size() - pos < header_len) throw InputError("checkpoint truncated");
  Checkpoint c;
  try {
    const json header = json::parse(bytes.substr(pos, header_len));
    if (header.at("schema_version").get<int>() != kSchemaVersion) {
      throw InputError("unsupported checkpoint schema_version");
    }
    c.architecture = header.at("architecture");
    c.stage = header.at("stage").get<std::string>();
    c.stage_index = header.at("stage_index").get<int>();
    c.epoch = header.at("epoch").get<int>();
    c.fingerprint = header.at("fingerprint").get<std::string>();
    c.config = header.at("config");
  } catch (const json::exception& e) {
    throw InputError(std::string("checkpoint header: ") + e.what());
  }
  pos += header_len;
  c.parameters = take_doubles(bytes, pos);
  c.optimizer_state = take_doubles(bytes, pos);
  if (pos != bytes.size()) throw InputError("trailing bytes in checkpoint");
  return c;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  write_file_atomic(path, encode_checkpoint(checkpoint));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  try {
    return decode_checkpoint(read_file(path));
  } catch (const InputError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

std::unique_ptr<Backbone> restore_backbone(const Checkpoint& checkpoint) {
  auto backbone = make_backbone(checkpoint.architecture, 0);
  if (backbone->parameters().size() != checkpoint.parameters.size()) {
    throw InputError("checkpoint parameter count does not match its architecture");
  }
  std::copy(checkpoint.parameters.begin(), checkpoint.parameters.end(),
            backbone->parameters().begin());
  return backbone;
}

std::string config_fingerprint(const json& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : config.dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

TrainingConfig TrainingConfig::FromJson(const json& j) {
  static const std::set<std::string> kKeys = {"schema_version", "seed",  "threads", "holdout_folds",
                                              "label_mapping",  "model", "stages"};
  if (!j.is_object()) throw ParameterError("training config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!kKeys.contains(key)) throw ParameterError("unknown config key '" + key + "'");
  }
  TrainingConfig c;
  try {
    if (j.contains("schema_version") && j.at("schema_version").get<int>() != 1) {
      throw ParameterError("unsupported training config schema_version");
    }
    c.seed = j.value("seed", c.seed);
    c.threads = j.value("threads", c.threads);
    c.holdout_folds = j.value("holdout_folds", c.holdout_folds);
    c.label_mapping = j.value("label_mapping", c.label_mapping);
    if (j.contains("model")) c.model = j.at("model");
    for (const json& s : j.at("stages")) c.stages.push_back(StageSpec::FromJson(s));
  } catch (const json::exception& e) {
    throw ParameterError(std::string("training config: ") + e.what());
  }
  if (c.stages.empty()) throw ParameterError("training config needs at least one stage");
  if (c.holdout_folds != 1 && c.holdout_folds != 2) {
    throw ParameterError("holdout_folds must be 1 or 2");
  }
  std::set<std::string> names;
  for (const StageSpec& s : c.stages) {
    if (!names.insert(s.name).second) throw ParameterError("duplicate stage name '" + s.name + "'");
  }
  make_backbone(c.model, 0);  // validates the model block
  return c;
}

json TrainingConfig::ToJson() const {
  json stages_json = json::array();
  for (const StageSpec& s : stages) stages_json.push_back(s.ToJson());
  return {{"schema_version", 1},        {"seed", seed},
          {"threads", threads},         {"holdout_folds", holdout_folds},
          {"label_mapping", label_mapping}, {"model", model},
          {"stages", stages_json}};
}

TrainingConfig load_training_config(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw ParameterError(path.string() + ": " + e.what());
  }
  return TrainingConfig::FromJson(j);
}

}  // namespace semod::training
