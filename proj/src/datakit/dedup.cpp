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

#include "semod/datakit/dedup.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <limits>
#include <set>
#include <sstream>

#include "semod/error.hpp"
#include "semod/fileio.hpp"

namespace semod::datakit {

double euclidean_distance(const std::vector<double>& a, const std::vector<double>& b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    sum += d * d;
  }
  return std::sqrt(sum);
}

namespace {

void check_collection(const std::vector<EmbeddingVector>& embeddings) {
  std::set<std::string_view> ids;
  for (const EmbeddingVector& e : embeddings) {
    if (e.values.size() != embeddings.front().values.size()) {
      throw InputError("embedding '" + e.id + "' has length " + std::to_string(e.values.size()) +
                       ", expected " + std::to_string(embeddings.front().values.size()));
    }
    for (double v : e.values) {
      if (!std::isfinite(v)) throw InputError("embedding '" + e.id + "' is not finite");
    }
    if (!ids.insert(e.id).second) throw InputError("duplicate embedding id '" + e.id + "'");
  }
}

}  // namespace

DedupResult near_duplicate_filter(std::vector<EmbeddingVector> embeddings, double threshold) {
  if (!(threshold >= 0.0) || !std::isfinite(threshold)) {
    throw ParameterError("dedup threshold must be a finite value >= 0");
  }
  check_collection(embeddings);
  std::sort(embeddings.begin(), embeddings.end(),
            [](const EmbeddingVector& a, const EmbeddingVector& b) { return a.id < b.id; });

  DedupResult result;
  std::vector<const EmbeddingVector*> kept;
  for (const EmbeddingVector& e : embeddings) {
    const EmbeddingVector* nearest = nullptr;
    double nearest_dist = std::numeric_limits<double>::infinity();
    for (const EmbeddingVector* k : kept) {
      const double d = euclidean_distance(e.values, k->values);
      if (d < nearest_dist) {
        nearest_dist = d;
        nearest = k;
      }
    }
    if (nearest == nullptr || nearest_dist > threshold) {
      kept.push_back(&e);
      result.kept.push_back(e.id);
    } else {
      result.clusters[nearest->id].push_back(e.id);
    }
  }
  return result;
}

namespace {

constexpr char kMagic[4] = {'S', 'E', 'M', 'B'};
constexpr std::uint32_t kBinaryVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "embedding binary codec assumes a little-endian host");

template <typename T>
void put(std::string& out, T value) {
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.append(buf, sizeof(T));
}

template <typename T>
T take(const std::string& in, std::size_t& pos) {
  if (in.size() - pos < sizeof(T)) throw InputError("embedding file truncated");
  T value;
  std::memcpy(&value, in.data() + pos, sizeof(T));
  pos += sizeof(T);
  return value;
}

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

}  // namespace

std::string encode_embeddings_binary(const std::vector<EmbeddingVector>& embeddings) {
  if (!embeddings.empty()) check_collection(embeddings);
  std::string out(kMagic, 4);
  put<std::uint32_t>(out, kBinaryVersion);
  put<std::uint64_t>(out, embeddings.size());
  put<std::uint32_t>(out, embeddings.empty()
                              ? 0
                              : static_cast<std::uint32_t>(embeddings.front().values.size()));
  for (const EmbeddingVector& e : embeddings) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(e.id.size()));
    out += e.id;
    for (double v : e.values) put<double>(out, v);
  }
  return out;
}

std::vector<EmbeddingVector> decode_embeddings_binary(const std::string& bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw InputError("not a binary embedding file");
  }
  std::size_t pos = 4;
  if (take<std::uint32_t>(bytes, pos) != kBinaryVersion) {
    throw InputError("unsupported embedding file version");
  }
  const auto count = take<std::uint64_t>(bytes, pos);
  const auto dim = take<std::uint32_t>(bytes, pos);
  std::vector<EmbeddingVector> out;
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto len = take<std::uint32_t>(bytes, pos);
    if (bytes.size() - pos < len) throw InputError("embedding file truncated");
    EmbeddingVector e;
    e.id = bytes.substr(pos, len);
    pos += len;
    e.values.resize(dim);
    for (auto& v : e.values) v = take<double>(bytes, pos);
    out.push_back(std::move(e));
  }
  if (pos != bytes.size()) throw InputError("trailing bytes in embedding file");
  return out;
}

std::vector<EmbeddingVector> parse_embeddings_csv(const std::string& contents) {
  std::istringstream in(contents);
  std::string line;
  if (!std::getline(in, line) || line.rfind("id", 0) != 0) {
    throw InputError("embedding CSV must start with a header beginning with 'id'");
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto dim = static_cast<std::size_t>(std::count(line.begin(), line.end(), ','));
  std::vector<EmbeddingVector> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    EmbeddingVector e;
    std::size_t start = 0;
    std::size_t comma = line.find(',');
    e.id = line.substr(0, comma);
    while (comma != std::string::npos) {
      start = comma + 1;
      comma = line.find(',', start);
      const std::string field =
          line.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
      if (ec != std::errc() || ptr != field.data() + field.size()) {
        throw InputError("embedding CSV line " + std::to_string(line_no) + ": bad number '" +
                         field + "'");
      }
      e.values.push_back(v);
    }
    if (e.values.size() != dim) {
      throw InputError("embedding CSV line " + std::to_string(line_no) + ": expected " +
                       std::to_string(dim) + " values, got " + std::to_string(e.values.size()));
    }
    out.push_back(std::move(e));
  }
  if (!out.empty()) check_collection(out);
  return out;
}

std::vector<EmbeddingVector> load_embeddings(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  if (bytes.size() >= 4 && std::memcmp(bytes.data(), kMagic, 4) == 0) {
    return decode_embeddings_binary(bytes);
  }
  return parse_embeddings_csv(bytes);
}

void save_embeddings_csv(const std::filesystem::path& path,
                         const std::vector<EmbeddingVector>& embeddings) {
  if (!embeddings.empty()) check_collection(embeddings);
  std::string out = "id";
  const std::size_t dim = embeddings.empty() ? 0 : embeddings.front().values.size();
  for (std::size_t i = 0; i < dim; ++i) out += ",v" + std::to_string(i);
  out += '\n';
  for (const EmbeddingVector& e : embeddings) {
    out += e.id;
    for (double v : e.values) out += "," + format_double(v);
    out += '\n';
  }
  write_file_atomic(path, out);
}

void save_embeddings_binary(const std::filesystem::path& path,
                            const std::vector<EmbeddingVector>& embeddings) {
  write_file_atomic(path, encode_embeddings_binary(embeddings));
}

}  // namespace semod::datakit
