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

#include "smf/autograd.h"

#include <cmath>
#include <limits>
#include <memory>

#include "smf/error.h"

namespace smf::nn {

const Matrix& Var::value() const { return tape->value(id); }

Var Tape::constant(Matrix value) {
  Node node;
  node.owned = std::move(value);
  nodes_.push_back(std::move(node));
  return {this, static_cast<int>(nodes_.size()) - 1};
}

Var Tape::weight(const Parameter& parameter, int index) {
  Node node;
  node.external = &parameter.value;
  node.needs_grad = record_;
  node.param_index = index;
  nodes_.push_back(std::move(node));
  return {this, static_cast<int>(nodes_.size()) - 1};
}

const Matrix& Tape::value(int id) const {
  const Node& node = nodes_[id];
  return node.external ? *node.external : node.owned;
}

Matrix& Tape::grad(int id) {
  Node& node = nodes_[id];
  if (!node.has_grad) {
    const Matrix& v = value(id);
    node.grad = Matrix::Zero(v.rows(), v.cols());
    node.has_grad = true;
  }
  return node.grad;
}

Var Tape::push(Matrix value, std::vector<int> inputs, std::function<void(Tape&, int)> backward) {
  Node node;
  node.owned = std::move(value);
  if (record_) {
    for (int in : inputs) {
      if (nodes_[in].needs_grad) {
        node.needs_grad = true;
        break;
      }
    }
    if (node.needs_grad) node.backward = std::move(backward);
  }
  nodes_.push_back(std::move(node));
  return {this, static_cast<int>(nodes_.size()) - 1};
}

void Tape::backward(Var output, std::vector<Matrix>& param_grads, double seed) {
  if (!record_) throw Error(ErrorCode::kInvalidArgument, "backward on a non-recording tape");
  const Matrix& out = value(output.id);
  if (out.rows() != 1 || out.cols() != 1) {
    throw Error(ErrorCode::kShapeMismatch, "backward expects a scalar output");
  }
  grad(output.id)(0, 0) = seed;
  for (int id = output.id; id >= 0; --id) {
    Node& node = nodes_[id];
    if (!node.has_grad) continue;
    if (node.backward) node.backward(*this, id);
    if (node.param_index >= 0) {
      Matrix& sink = param_grads.at(node.param_index);
      if (sink.rows() != node.grad.rows() || sink.cols() != node.grad.cols()) {
        throw Error(ErrorCode::kShapeMismatch, "parameter gradient slot has the wrong shape");
      }
      sink += node.grad;
    }
  }
}

namespace {

void require_same_tape(Var a, Var b) {
  if (a.tape != b.tape) throw Error(ErrorCode::kInvalidArgument, "vars from different tapes");
}

void require_shape(bool ok, const char* what) {
  if (!ok) throw Error(ErrorCode::kShapeMismatch, what);
}

}  // namespace

Var add(Var a, Var b) {
  require_same_tape(a, b);
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  require_shape(av.rows() == bv.rows() && av.cols() == bv.cols(), "add: shapes differ");
  const int ia = a.id, ib = b.id;
  return a.tape->push(av + bv, {ia, ib}, [ia, ib](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    if (t.needs_grad(ia)) t.grad(ia) += g;
    if (t.needs_grad(ib)) t.grad(ib) += g;
  });
}

Var matmul(Var a, Var b) {
  require_same_tape(a, b);
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  require_shape(av.cols() == bv.rows(), "matmul: inner dimensions differ");
  const int ia = a.id, ib = b.id;
  return a.tape->push(av * bv, {ia, ib}, [ia, ib](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    if (t.needs_grad(ia)) t.grad(ia).noalias() += g * t.value(ib).transpose();
    if (t.needs_grad(ib)) t.grad(ib).noalias() += t.value(ia).transpose() * g;
  });
}

Var linear(Var x, Var w, Var b) {
  require_same_tape(x, w);
  require_same_tape(x, b);
  const Matrix& xv = x.value();
  const Matrix& wv = w.value();
  const Matrix& bv = b.value();
  require_shape(xv.cols() == wv.rows(), "linear: input width != weight rows");
  require_shape(bv.rows() == 1 && bv.cols() == wv.cols(), "linear: bias shape");
  Matrix y = xv * wv;
  y.rowwise() += bv.row(0);
  const int ix = x.id, iw = w.id, ib = b.id;
  return x.tape->push(std::move(y), {ix, iw, ib}, [ix, iw, ib](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    if (t.needs_grad(ix)) t.grad(ix).noalias() += g * t.value(iw).transpose();
    if (t.needs_grad(iw)) t.grad(iw).noalias() += t.value(ix).transpose() * g;
    if (t.needs_grad(ib)) t.grad(ib) += g.colwise().sum();
  });
}

Var relu(Var x) {
  const Matrix y = x.value().cwiseMax(0.0);
  const int ix = x.id;
  return x.tape->push(y, {ix}, [ix](Tape& t, int self) {
    if (!t.needs_grad(ix)) return;
    const Matrix& g = t.grad(self);
    const Matrix& xv = t.value(ix);
    t.grad(ix).array() += (xv.array() > 0.0).cast<double>() * g.array();
  });
}

Var layer_norm(Var x, Var gain, Var bias, double eps) {
  require_same_tape(x, gain);
  require_same_tape(x, bias);
  const Matrix& xv = x.value();
  const Matrix& gv = gain.value();
  const Matrix& bv = bias.value();
  require_shape(gv.rows() == 1 && gv.cols() == xv.cols(), "layer_norm: gain shape");
  require_shape(bv.rows() == 1 && bv.cols() == xv.cols(), "layer_norm: bias shape");
  const Eigen::Index n = xv.rows(), d = xv.cols();
  auto xhat = std::make_shared<Matrix>(n, d);
  auto inv_std = std::make_shared<Eigen::VectorXd>(n);
  Matrix y(n, d);
  for (Eigen::Index r = 0; r < n; ++r) {
    const double mean = xv.row(r).mean();
    const double var = (xv.row(r).array() - mean).square().mean();
    const double is = 1.0 / std::sqrt(var + eps);
    (*inv_std)(r) = is;
    xhat->row(r) = (xv.row(r).array() - mean) * is;
    y.row(r) = xhat->row(r).cwiseProduct(gv.row(0)) + bv.row(0);
  }
  const int ix = x.id, ig = gain.id, ib = bias.id;
  return x.tape->push(std::move(y), {ix, ig, ib}, [ix, ig, ib, xhat, inv_std](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    if (t.needs_grad(ig)) t.grad(ig) += g.cwiseProduct(*xhat).colwise().sum();
    if (t.needs_grad(ib)) t.grad(ib) += g.colwise().sum();
    if (!t.needs_grad(ix)) return;
    const Matrix& gv = t.value(ig);
    Matrix& dx = t.grad(ix);
    for (Eigen::Index r = 0; r < g.rows(); ++r) {
      const Eigen::RowVectorXd dxhat = g.row(r).cwiseProduct(gv.row(0));
      const double m1 = dxhat.mean();
      const double m2 = dxhat.cwiseProduct(xhat->row(r)).mean();
      dx.row(r).array() += (*inv_std)(r) * (dxhat.array() - m1 - xhat->row(r).array() * m2);
    }
  });
}

Var embedding(Var table, const std::vector<int>& ids) {
  const Matrix& tv = table.value();
  Matrix y(static_cast<Eigen::Index>(ids.size()), tv.cols());
  for (size_t r = 0; r < ids.size(); ++r) {
    if (ids[r] < 0 || ids[r] >= tv.rows()) {
      throw Error(ErrorCode::kTokenOutOfVocab, "embedding id " + std::to_string(ids[r]));
    }
    y.row(static_cast<Eigen::Index>(r)) = tv.row(ids[r]);
  }
  const int it = table.id;
  return table.tape->push(std::move(y), {it}, [it, ids](Tape& t, int self) {
    if (!t.needs_grad(it)) return;
    const Matrix& g = t.grad(self);
    Matrix& dt = t.grad(it);
    for (size_t r = 0; r < ids.size(); ++r) dt.row(ids[r]) += g.row(static_cast<Eigen::Index>(r));
  });
}

Var slice_rows(Var x, int first, int count) {
  const Matrix& xv = x.value();
  require_shape(first >= 0 && count >= 0 && first + count <= xv.rows(), "slice_rows: out of range");
  const int ix = x.id;
  return x.tape->push(xv.middleRows(first, count), {ix}, [ix, first, count](Tape& t, int self) {
    if (t.needs_grad(ix)) t.grad(ix).middleRows(first, count) += t.grad(self);
  });
}

namespace {

struct AttentionShape {
  Eigen::Index nq, nk, dim, dh;
  int heads;
};

AttentionShape check_attention(const Matrix& q, const Matrix& k, const Matrix* v,
                               const AttentionOptions& o, const Matrix* ek, const Matrix* ev) {
  AttentionShape s{q.rows(), k.rows(), q.cols(), 0, o.heads};
  require_shape(o.heads >= 1 && s.dim % o.heads == 0, "attention: dim not divisible by heads");
  require_shape(k.cols() == s.dim, "attention: key width");
  if (v) require_shape(v->rows() == s.nk && v->cols() == s.dim, "attention: value shape");
  if (o.key_mask) require_shape(static_cast<Eigen::Index>(o.key_mask->size()) == s.nk, "attention: mask size");
  if (o.causal) require_shape(s.nq <= s.nk, "attention: causal needs nq <= nk");
  if (o.flags) {
    require_shape(o.flags->rows() == s.nq && o.flags->cols() == s.nk, "attention: flag grid shape");
    require_shape(ek && ek->rows() == 3 && ek->cols() == s.dim, "attention: E_k must be 3 x dim");
    if (ev) require_shape(ev->rows() == 3 && ev->cols() == s.dim, "attention: E_v must be 3 x dim");
  }
  s.dh = s.dim / o.heads;
  return s;
}

// Softmax weights of one head.
Matrix head_probs(const Matrix& q, const Matrix& k, const AttentionOptions& o,
                  const Matrix* ek, const AttentionShape& s, int h) {
  const auto qh = q.middleCols(h * s.dh, s.dh);
  const auto kh = k.middleCols(h * s.dh, s.dh);
  Matrix scores = qh * kh.transpose();
  if (o.flags) {
    const Matrix qe = qh * ek->middleCols(h * s.dh, s.dh).transpose();
    for (Eigen::Index j = 0; j < s.nq; ++j) {
      for (Eigen::Index i = 0; i < s.nk; ++i) scores(j, i) += qe(j, (*o.flags)(j, i));
    }
  }
  scores *= 1.0 / std::sqrt(static_cast<double>(s.dh));
  const double neg_inf = -std::numeric_limits<double>::infinity();
  const Eigen::Index causal_offset = s.nk - s.nq;
  for (Eigen::Index j = 0; j < s.nq; ++j) {
    for (Eigen::Index i = 0; i < s.nk; ++i) {
      if ((o.causal && i > j + causal_offset) || (o.key_mask && !(*o.key_mask)[i])) {
        scores(j, i) = neg_inf;
      }
    }
  }
  for (Eigen::Index j = 0; j < s.nq; ++j) {
    const double m = scores.row(j).maxCoeff();
    if (m == neg_inf) {
      scores.row(j).setZero();
      continue;
    }
    scores.row(j) = (scores.row(j).array() - m).exp();
    scores.row(j) /= scores.row(j).sum();
  }
  return scores;
}

// counts(j, s) = sum of weights of keys whose flag for query j is s.
Matrix flag_mass(const Matrix& probs, const FlagGrid& flags) {
  Matrix counts = Matrix::Zero(probs.rows(), 3);
  for (Eigen::Index j = 0; j < probs.rows(); ++j) {
    for (Eigen::Index i = 0; i < probs.cols(); ++i) counts(j, flags(j, i)) += probs(j, i);
  }
  return counts;
}

}  // namespace

std::vector<Matrix> attention_weights(const Matrix& q, const Matrix& k,
                                      const AttentionOptions& options, const Matrix* flag_keys) {
  const AttentionShape s = check_attention(q, k, nullptr, options, flag_keys, nullptr);
  std::vector<Matrix> out;
  for (int h = 0; h < s.heads; ++h) out.push_back(head_probs(q, k, options, flag_keys, s, h));
  return out;
}

Var attention(Var q, Var k, Var v, const AttentionOptions& o) {
  require_same_tape(q, k);
  require_same_tape(q, v);
  const Matrix& qv = q.value();
  const Matrix& kv = k.value();
  const Matrix& vv = v.value();
  const Matrix* ek = o.flags ? &o.flag_keys.value() : nullptr;
  const Matrix* ev = o.flags ? &o.flag_values.value() : nullptr;
  const AttentionShape s = check_attention(qv, kv, &vv, o, ek, ev);

  auto probs = std::make_shared<std::vector<Matrix>>();
  auto masses = std::make_shared<std::vector<Matrix>>();
  Matrix out(s.nq, s.dim);
  for (int h = 0; h < s.heads; ++h) {
    probs->push_back(head_probs(qv, kv, o, ek, s, h));
    const Matrix& a = probs->back();
    Matrix oh = a * vv.middleCols(h * s.dh, s.dh);
    if (o.flags) {
      masses->push_back(flag_mass(a, *o.flags));
      oh += masses->back() * ev->middleCols(h * s.dh, s.dh);
    }
    out.middleCols(h * s.dh, s.dh) = oh;
  }

  std::vector<int> inputs{q.id, k.id, v.id};
  int iek = -1, iev = -1;
  std::shared_ptr<FlagGrid> flags;
  if (o.flags) {
    require_same_tape(q, o.flag_keys);
    require_same_tape(q, o.flag_values);
    iek = o.flag_keys.id;
    iev = o.flag_values.id;
    inputs.push_back(iek);
    inputs.push_back(iev);
    flags = std::make_shared<FlagGrid>(*o.flags);
  }
  const int iq = q.id, ik = k.id, iv = v.id;
  return q.tape->push(std::move(out), inputs,
                      [=](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    const Matrix& qm = t.value(iq);
    const Matrix& km = t.value(ik);
    const Matrix& vm = t.value(iv);
    const double scale = 1.0 / std::sqrt(static_cast<double>(s.dh));
    for (int h = 0; h < s.heads; ++h) {
      const Matrix& a = (*probs)[h];
      const Matrix gh = g.middleCols(h * s.dh, s.dh);
      if (t.needs_grad(iv)) t.grad(iv).middleCols(h * s.dh, s.dh).noalias() += a.transpose() * gh;
      Matrix da = gh * vm.middleCols(h * s.dh, s.dh).transpose();
      if (flags) {
        const Matrix& evm = t.value(iev);
        if (t.needs_grad(iev)) {
          t.grad(iev).middleCols(h * s.dh, s.dh).noalias() += (*masses)[h].transpose() * gh;
        }
        const Matrix dmass = gh * evm.middleCols(h * s.dh, s.dh).transpose();
        for (Eigen::Index j = 0; j < s.nq; ++j) {
          for (Eigen::Index i = 0; i < s.nk; ++i) da(j, i) += dmass(j, (*flags)(j, i));
        }
      }
      // softmax backward, then the 1/sqrt(dh) scale.
      Matrix ds(s.nq, s.nk);
      for (Eigen::Index j = 0; j < s.nq; ++j) {
        const double dot = a.row(j).dot(da.row(j));
        ds.row(j) = a.row(j).array() * (da.row(j).array() - dot) * scale;
      }
      if (t.needs_grad(iq)) t.grad(iq).middleCols(h * s.dh, s.dh).noalias() += ds * km.middleCols(h * s.dh, s.dh);
      if (t.needs_grad(ik)) t.grad(ik).middleCols(h * s.dh, s.dh).noalias() += ds.transpose() * qm.middleCols(h * s.dh, s.dh);
      if (flags) {
        Matrix dflag = Matrix::Zero(s.nq, 3);
        for (Eigen::Index j = 0; j < s.nq; ++j) {
          for (Eigen::Index i = 0; i < s.nk; ++i) dflag(j, (*flags)(j, i)) += ds(j, i);
        }
        const Matrix& ekm = t.value(iek);
        if (t.needs_grad(iq)) t.grad(iq).middleCols(h * s.dh, s.dh).noalias() += dflag * ekm.middleCols(h * s.dh, s.dh);
        if (t.needs_grad(iek)) t.grad(iek).middleCols(h * s.dh, s.dh).noalias() += dflag.transpose() * qm.middleCols(h * s.dh, s.dh);
      }
    }
  });
}

Var cross_entropy(Var logits, const std::vector<int>& targets, double label_smoothing) {
  const Matrix& z = logits.value();
  require_shape(static_cast<Eigen::Index>(targets.size()) == z.rows(), "cross_entropy: target count");
  const Matrix logp = log_softmax_rows(z);
  const double n = static_cast<double>(z.rows());
  const double vocab = static_cast<double>(z.cols());
  double loss = 0.0;
  for (Eigen::Index r = 0; r < z.rows(); ++r) {
    const int tgt = targets[r];
    if (tgt < 0 || tgt >= z.cols()) throw Error(ErrorCode::kTokenOutOfVocab, "target id " + std::to_string(tgt));
    loss -= (1.0 - label_smoothing) * logp(r, tgt);
    if (label_smoothing > 0.0) loss -= label_smoothing / vocab * logp.row(r).sum();
  }
  Matrix out(1, 1);
  out(0, 0) = loss / n;
  const int il = logits.id;
  auto saved = std::make_shared<Matrix>(logp);
  return logits.tape->push(std::move(out), {il}, [il, saved, targets, label_smoothing, n, vocab](Tape& t, int self) {
    if (!t.needs_grad(il)) return;
    const double g = t.grad(self)(0, 0);
    Matrix d = saved->array().exp();
    if (label_smoothing > 0.0) d.array() -= label_smoothing / vocab;
    for (size_t r = 0; r < targets.size(); ++r) d(static_cast<Eigen::Index>(r), targets[r]) -= 1.0 - label_smoothing;
    t.grad(il) += d * (g / n);
  });
}

Var sum(Var x) {
  Matrix out(1, 1);
  out(0, 0) = x.value().sum();
  const int ix = x.id;
  return x.tape->push(std::move(out), {ix}, [ix](Tape& t, int self) {
    if (t.needs_grad(ix)) t.grad(ix).array() += t.grad(self)(0, 0);
  });
}

Var weighted_sum(Var x, const Matrix& weights) {
  const Matrix& xv = x.value();
  require_shape(xv.rows() == weights.rows() && xv.cols() == weights.cols(), "weighted_sum: shape");
  Matrix out(1, 1);
  out(0, 0) = xv.cwiseProduct(weights).sum();
  const int ix = x.id;
  return x.tape->push(std::move(out), {ix}, [ix, weights](Tape& t, int self) {
    if (t.needs_grad(ix)) t.grad(ix) += weights * t.grad(self)(0, 0);
  });
}

Matrix log_softmax_rows(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const double m = logits.row(r).maxCoeff();
    const double lse = m + std::log((logits.row(r).array() - m).exp().sum());
    out.row(r) = logits.row(r).array() - lse;
  }
  return out;
}

}  // namespace smf::nn
