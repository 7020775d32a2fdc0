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

#ifndef SMF_AUTOGRAD_H_
#define SMF_AUTOGRAD_H_

#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace smf::nn {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
// Per (query, key) flag state, queries as rows.
using FlagGrid = Eigen::Matrix<uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Parameter {
  std::string name;
  Matrix value;
};

class Tape;

// Handle to a node on a Tape.
struct Var {
  Tape* tape = nullptr;
  int id = -1;

  const Matrix& value() const;
  bool valid() const { return tape != nullptr; }
};

// Reverse-mode tape over dense matrices. Ops are coarse (linear, attention,
// layer norm, ...) with hand-written backward passes. A tape built with
// record=false only evaluates values.
class Tape {
 public:
  explicit Tape(bool record = true) : record_(record) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return record_; }

  Var constant(Matrix value);
  // Binds a parameter by reference; its gradient lands in slot `index` of
  // the vector passed to backward().
  Var weight(const Parameter& parameter, int index);

  const Matrix& value(int id) const;
  bool needs_grad(int id) const { return nodes_[id].needs_grad; }
  Matrix& grad(int id);

  // Seeds d(output)/d(output) = seed for a 1x1 output and back-propagates.
  // Parameter gradients are added into param_grads[index], which must be
  // pre-sized with matrices of the parameter shapes.
  void backward(Var output, std::vector<Matrix>& param_grads, double seed = 1.0);

  // Internal: registers an op result.
  Var push(Matrix value, std::vector<int> inputs, std::function<void(Tape&, int)> backward);

 private:
  struct Node {
    Matrix owned;
    const Matrix* external = nullptr;
    Matrix grad;
    bool needs_grad = false;
    bool has_grad = false;
    int param_index = -1;
    std::function<void(Tape&, int)> backward;
  };

  bool record_;
  std::deque<Node> nodes_;
};

Var add(Var a, Var b);
Var matmul(Var a, Var b);
// x * w + b (b is 1 x out, broadcast over rows).
Var linear(Var x, Var w, Var b);
Var relu(Var x);
// Row-wise layer normalization with gain and bias (both 1 x dim).
Var layer_norm(Var x, Var gain, Var bias, double eps = 1e-5);
// Gathers rows of `table`.
Var embedding(Var table, const std::vector<int>& ids);
// Rows [first, first + count).
Var slice_rows(Var x, int first, int count);

struct AttentionOptions {
  int heads = 1;
  bool causal = false;
  // Keys with key_mask[i] == false receive zero weight.
  std::optional<std::vector<bool>> key_mask;
  // Flag-augmented attention: scores q_j . (k_i + E_k[F(j, i)]) and values
  // v_i + E_v[F(j, i)]. E tables have 3 rows; head h uses the contiguous
  // column slice [h * dim/heads, (h + 1) * dim/heads).
  const FlagGrid* flags = nullptr;
  Var flag_keys;
  Var flag_values;
};

// Scaled dot-product multi-head attention over projected q (nq x dim),
// k and v (nk x dim). Scale is 1/sqrt(dim/heads).
Var attention(Var q, Var k, Var v, const AttentionOptions& options);

// The softmax weights attention() uses, one nq x nk matrix per head.
// flag_keys is required when options.flags is set.
std::vector<Matrix> attention_weights(const Matrix& q, const Matrix& k,
                                      const AttentionOptions& options,
                                      const Matrix* flag_keys = nullptr);

// Mean token cross-entropy of row-wise softmax(logits) against targets, with
// optional label smoothing. Returns a 1x1 node.
Var cross_entropy(Var logits, const std::vector<int>& targets, double label_smoothing = 0.0);

// Sum of all elements (1x1).
Var sum(Var x);
// Elementwise product with a constant matrix, then summed (1x1). Handy as a
// generic scalar probe in gradient checks.
Var weighted_sum(Var x, const Matrix& weights);

// Row-wise log-softmax, no tape.
Matrix log_softmax_rows(const Matrix& logits);

}  // namespace smf::nn

#endif  // SMF_AUTOGRAD_H_
