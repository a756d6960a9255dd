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

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace semod::datakit {

struct EmbeddingVector {
  std::string id;
  std::vector<double> values;
};

struct DedupResult {
  std::vector<std::string> kept;                           // ascending
  std::map<std::string, std::vector<std::string>> clusters;  // kept id -> dropped ids
};

double euclidean_distance(const std::vector<double>& a, const std::vector<double>& b);

// Greedy near-duplicate removal. Ids are visited in ascending lexicographic
// order; an id survives iff it is farther than `threshold` from every id kept
// so far. A dropped id joins the cluster of its nearest kept id (first in
// order on ties). Throws InputError on ragged or non-finite vectors or
// duplicate ids, ParameterError on a negative threshold.
DedupResult near_duplicate_filter(std::vector<EmbeddingVector> embeddings, double threshold);

// Embedding files.
//  CSV:    header `id,v0,...,v{d-1}` then one row per vector.
//  Binary: magic "SEMB", u32 version (1), u64 count, u32 dim, then per row
//          u32 id byte length, id bytes, dim float64 values. All integers and
//          floats little-endian.
// load_embeddings picks the format from the magic bytes.
std::vector<EmbeddingVector> load_embeddings(const std::filesystem::path& path);
void save_embeddings_csv(const std::filesystem::path& path,
                         const std::vector<EmbeddingVector>& embeddings);
void save_embeddings_binary(const std::filesystem::path& path,
                            const std::vector<EmbeddingVector>& embeddings);
std::string encode_embeddings_binary(const std::vector<EmbeddingVector>& embeddings);
std::vector<EmbeddingVector> decode_embeddings_binary(const std::string& bytes);
std::vector<EmbeddingVector> parse_embeddings_csv(const std::string& contents);

}  // namespace semod::datakit
