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

#include "smf/similarity.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "smf/error.h"
#include "smf/text.h"

namespace smf {

std::string_view backend_name(EmbedderBackend backend) {
  switch (backend) {
    case EmbedderBackend::kHashedNgram: return "hashed-ngram";
    case EmbedderBackend::kEncoderMean: return "encoder-mean";
    case EmbedderBackend::kInjectedTable: return "injected-table";
  }
  return "unknown";
}

uint64_t fnv1a64(std::string_view bytes) {
  uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

HashedNgramEmbedder::HashedNgramEmbedder(size_t dimension) : dimension_(dimension) {
  if (dimension_ == 0) throw Error(ErrorCode::kInvalidArgument, "embedding dimension must be positive");
}

Embedding HashedNgramEmbedder::embed(std::span<const std::string> tokens) const {
  if (tokens.empty()) throw Error(ErrorCode::kEmptyInput, "cannot embed an empty token sequence");
  const std::string text = " " + join(tokens, " ") + " ";
  Embedding v(dimension_, 0.0);
  for (size_t i = 0; i + 3 <= text.size(); ++i) {
    v[fnv1a64(std::string_view(text).substr(i, 3)) % dimension_] += 1.0;
  }
  double norm = 0.0;
  for (double x : v) norm += x * x;
  norm = std::sqrt(norm);
  for (double& x : v) x /= norm;
  return v;
}

EncoderMeanEmbedder::EncoderMeanEmbedder(EncodeFn encode, size_t dimension)
    : encode_(std::move(encode)), dimension_(dimension) {}

Embedding EncoderMeanEmbedder::embed(std::span<const std::string> tokens) const {
  if (tokens.empty()) throw Error(ErrorCode::kEmptyInput, "cannot embed an empty token sequence");
  const Eigen::MatrixXd states = encode_(tokens);
  if (static_cast<size_t>(states.cols()) != dimension_ || states.rows() == 0) {
    throw Error(ErrorCode::kDimensionMismatch, "encoder returned an unexpected state shape");
  }
  const Eigen::VectorXd mean = states.colwise().mean().transpose();
  return Embedding(mean.data(), mean.data() + mean.size());
}

double cosine(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) {
    throw Error(ErrorCode::kDimensionMismatch,
                std::to_string(u.size()) + " vs " + std::to_string(v.size()));
  }
  double dot = 0.0, uu = 0.0, vv = 0.0;
  for (size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    uu += u[i] * u[i];
    vv += v[i] * v[i];
  }
  if (uu == 0.0 || vv == 0.0) throw Error(ErrorCode::kZeroVector, "cosine of a zero vector");
  return std::clamp(dot / (std::sqrt(uu) * std::sqrt(vv)), -1.0, 1.0);
}

InjectedSimilarityTable InjectedSimilarityTable::from_json_text(std::string_view json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, std::string("similarity fixture: ") + e.what());
  }
  if (!doc.is_object()) throw Error(ErrorCode::kInvalidArgument, "similarity fixture must be an object");
  InjectedSimilarityTable table;
  for (const auto& [key, value] : doc.items()) {
    const size_t colon = key.find(':');
    if (colon == std::string::npos || !value.is_number()) {
      throw Error(ErrorCode::kInvalidArgument, "bad similarity fixture entry: " + key);
    }
    table.set(std::stoul(key.substr(0, colon)), std::stoul(key.substr(colon + 1)),
              value.get<double>());
  }
  return table;
}

InjectedSimilarityTable InjectedSimilarityTable::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return from_json_text(buffer.str());
}

void InjectedSimilarityTable::set(size_t constraint_id, size_t prefix_len, double value) {
  values_[{constraint_id, prefix_len}] = value;
}

double InjectedSimilarityTable::sim_lookup(size_t prefix_len, size_t constraint_id) const {
  const auto it = values_.find({constraint_id, prefix_len});
  if (it == values_.end()) {
    throw Error(ErrorCode::kMissingEntry, "no similarity for " + std::to_string(constraint_id) +
                                              ":" + std::to_string(prefix_len));
  }
  return it->second;
}

}  // namespace smf
