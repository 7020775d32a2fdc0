// Copyright 2026 The SMF Rewrite Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SMF_SIMILARITY_H_
#define SMF_SIMILARITY_H_

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace smf {

using Embedding = std::vector<double>;

enum class EmbedderBackend { kHashedNgram, kEncoderMean, kInjectedTable };

std::string_view backend_name(EmbedderBackend backend);

// Maps a non-empty token sequence to a fixed-dimension real vector.
// Implementations are immutable after construction.
class SentenceEmbedder {
 public:
  virtual ~SentenceEmbedder() = default;

  // Throws kEmptyInput for an empty sequence.
  virtual Embedding embed(std::span<const std::string> tokens) const = 0;
  virtual size_t dimension() const = 0;
  virtual EmbedderBackend backend() const = 0;
};

// 64-bit FNV-1a over raw bytes.
uint64_t fnv1a64(std::string_view bytes);

// Bag of hashed character trigrams. The tokens are joined as
// " " + join(tokens, " ") + " ", every 3-byte window is hashed with 64-bit
// FNV-1a, the bucket is hash % dimension, and the count vector is
// L2-normalized.
class HashedNgramEmbedder final : public SentenceEmbedder {
 public:
  static constexpr size_t kDefaultDimension = 256;

  explicit HashedNgramEmbedder(size_t dimension = kDefaultDimension);

  Embedding embed(std::span<const std::string> tokens) const override;
  size_t dimension() const override { return dimension_; }
  EmbedderBackend backend() const override { return EmbedderBackend::kHashedNgram; }

 private:
  size_t dimension_;
};

// Mean of encoder output states. The encoder callback returns one row per
// token (tokens x dim).
class EncoderMeanEmbedder final : public SentenceEmbedder {
 public:
  using EncodeFn = std::function<Eigen::MatrixXd(std::span<const std::string>)>;

  EncoderMeanEmbedder(EncodeFn encode, size_t dimension);

  Embedding embed(std::span<const std::string> tokens) const override;
  size_t dimension() const override { return dimension_; }
  EmbedderBackend backend() const override { return EmbedderBackend::kEncoderMean; }

 private:
  EncodeFn encode_;
  size_t dimension_;
};

// dot(u, v) / (|u| |v|), clamped to [-1, 1].
// Throws kDimensionMismatch or kZeroVector.
double cosine(std::span<const double> u, std::span<const double> v);

// Fixture-backed similarity values keyed by (constraint id, decoded prefix
// length). Used to replay printed similarity sequences exactly.
class InjectedSimilarityTable {
 public:
  InjectedSimilarityTable() = default;

  // JSON object {"<constraint_id>:<prefix_len>": value, ...}.
  static InjectedSimilarityTable from_json_text(std::string_view json_text);
  static InjectedSimilarityTable from_file(const std::string& path);

  void set(size_t constraint_id, size_t prefix_len, double value);
  // Throws kMissingEntry.
  double sim_lookup(size_t prefix_len, size_t constraint_id) const;
  size_t size() const { return values_.size(); }

 private:
  std::map<std::pair<size_t, size_t>, double> values_;
};

}  // namespace smf

#endif  // SMF_SIMILARITY_H_
