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

#include "semod/datakit/folds.hpp"

#include <algorithm>
#include <sstream>

#include "semod/error.hpp"
#include "semod/fileio.hpp"
#include "semod/rng.hpp"

namespace semod::datakit {

std::vector<std::string> FoldAssignment::ids_in_fold(int fold) const {
  std::vector<std::string> ids;
  for (const auto& [id, f] : assignment) {
    if (f == fold) ids.push_back(id);
  }
  return ids;
}

std::vector<std::size_t> FoldAssignment::fold_sizes() const {
  std::vector<std::size_t> sizes(static_cast<std::size_t>(std::max(k, 0)), 0);
  for (const auto& [id, f] : assignment) ++sizes[f];
  return sizes;
}

FoldAssignment stratified_folds(const std::vector<ImageRecord>& records, int k,
                                std::uint64_t seed) {
  if (k < 2) throw ParameterError("k must be >= 2");
  if (records.empty()) throw ParameterError("cannot split an empty manifest");
  if (static_cast<std::size_t>(k) > records.size()) {
    throw ParameterError("k=" + std::to_string(k) + " exceeds record count " +
                         std::to_string(records.size()));
  }

  std::map<StratumKey, std::vector<std::string>> strata;
  for (const ImageRecord& r : records) strata[stratum_key(r)].push_back(r.id);

  FoldAssignment folds;
  folds.k = k;
  Rng rng(seed);
  int cursor = 0;
  for (auto& [key, ids] : strata) {
    std::sort(ids.begin(), ids.end());
    rng.shuffle(std::span<std::string>(ids));
    for (const std::string& id : ids) {
      if (!folds.assignment.emplace(id, cursor).second) {
        throw InputError("duplicate record id '" + id + "'");
      }
      cursor = (cursor + 1) % k;
    }
  }
  return folds;
}

std::string format_folds_csv(const FoldAssignment& folds) {
  std::string out = "id,fold\n";
  for (const auto& [id, f] : folds.assignment) {
    out += id;
    out += ',';
    out += std::to_string(f);
    out += '\n';
  }
  return out;
}

FoldAssignment parse_folds_csv(const std::string& contents) {
  std::istringstream in(contents);
  std::string line;
  if (!std::getline(in, line) || line.rfind("id,fold", 0) != 0) {
    throw InputError("fold CSV must start with header 'id,fold'");
  }
  FoldAssignment folds;
  int max_fold = -1;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.rfind(',');
    if (comma == std::string::npos || comma == 0) {
      throw InputError("fold CSV line " + std::to_string(line_no) + ": expected id,fold");
    }
    int fold = 0;
    try {
      std::size_t used = 0;
      fold = std::stoi(line.substr(comma + 1), &used);
      if (used != line.size() - comma - 1) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw InputError("fold CSV line " + std::to_string(line_no) + ": bad fold index");
    }
    if (fold < 0) throw InputError("fold CSV line " + std::to_string(line_no) + ": negative fold");
    if (!folds.assignment.emplace(line.substr(0, comma), fold).second) {
      throw InputError("fold CSV line " + std::to_string(line_no) + ": duplicate id");
    }
    max_fold = std::max(max_fold, fold);
  }
  folds.k = max_fold + 1;
  return folds;
}

void save_folds(const std::filesystem::path& path, const FoldAssignment& folds) {
  write_file_atomic(path, format_folds_csv(folds));
}

FoldAssignment load_folds(const std::filesystem::path& path) {
  return parse_folds_csv(read_file(path));
}

std::set<int> holdout_set(const FoldAssignment& folds, int fold_index, int holdout_folds) {
  if (fold_index < 0 || fold_index >= folds.k) {
    throw ParameterError("fold index " + std::to_string(fold_index) + " outside [0, " +
                         std::to_string(folds.k) + ")");
  }
  if (holdout_folds != 1 && holdout_folds != 2) {
    throw ParameterError("holdout_folds must be 1 or 2");
  }
  std::set<int> out{fold_index};
  if (holdout_folds == 2) out.insert((fold_index + 1) % folds.k);
  return out;
}

}  // namespace semod::datakit
