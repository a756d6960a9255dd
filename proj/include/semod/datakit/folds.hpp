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

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "semod/datakit/records.hpp"

namespace semod::datakit {

struct FoldAssignment {
  int k = 0;
  std::map<std::string, int> assignment;  // record id -> fold in [0, k)

  std::vector<std::string> ids_in_fold(int fold) const;
  std::vector<std::size_t> fold_sizes() const;
};

// Records are grouped by stratum_key(); strata are visited in key order and
// each stratum's ids (sorted, then shuffled with `seed`) are dealt
// round-robin. The dealing cursor carries over between strata so that both
// per-stratum and global fold sizes differ by at most one.
// Throws ParameterError if k < 2 or k exceeds the record count.
FoldAssignment stratified_folds(const std::vector<ImageRecord>& records, int k,
                                std::uint64_t seed);

// CSV with header `id,fold`, rows sorted by id.
std::string format_folds_csv(const FoldAssignment& folds);
FoldAssignment parse_folds_csv(const std::string& contents);
void save_folds(const std::filesystem::path& path, const FoldAssignment& folds);
FoldAssignment load_folds(const std::filesystem::path& path);

// Validation folds for a cross-validation round: {fold_index} or, with
// holdout_folds == 2, {fold_index, (fold_index + 1) mod k}.
std::set<int> holdout_set(const FoldAssignment& folds, int fold_index, int holdout_folds = 1);

}  // namespace semod::datakit
