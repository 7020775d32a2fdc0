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

#include "smf/train.h"

#include <cmath>
#include <cstdio>
#include <numeric>

#include "smf/error.h"
#include "smf/rng.h"

namespace smf {

std::string_view optimizer_name(OptimizerKind kind) {
  return kind == OptimizerKind::kAdam ? "adam" : "sgd";
}

OptimizerKind parse_optimizer(std::string_view name) {
  if (name == "adam") return OptimizerKind::kAdam;
  if (name == "sgd") return OptimizerKind::kSgd;
  throw Error(ErrorCode::kInvalidArgument, "unknown optimizer " + std::string(name));
}

void TrainingConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw Error(ErrorCode::kInvalidArgument, "learning rate must be positive");
  }
  if (batch_size == 0) throw Error(ErrorCode::kInvalidArgument, "batch size must be positive");
  if (epochs < 0) throw Error(ErrorCode::kInvalidArgument, "epochs must be non-negative");
  if (label_smoothing < 0.0 || label_smoothing >= 1.0) {
    throw Error(ErrorCode::kInvalidArgument, "label smoothing must lie in [0, 1)");
  }
}

Optimizer::Optimizer(const TrainingConfig& config, const std::vector<nn::Parameter>& params)
    : config_(config) {
  if (config_.optimizer == OptimizerKind::kAdam) {
    for (const nn::Parameter& p : params) {
      m_.push_back(nn::Matrix::Zero(p.value.rows(), p.value.cols()));
      v_.push_back(nn::Matrix::Zero(p.value.rows(), p.value.cols()));
    }
  }
}

void Optimizer::step(std::vector<nn::Parameter>& params, const std::vector<nn::Matrix>& grads) {
  ++t_;
  const double lr = config_.learning_rate;
  if (config_.optimizer == OptimizerKind::kSgd) {
    for (size_t i = 0; i < params.size(); ++i) params[i].value -= lr * grads[i];
    return;
  }
  const double b1 = config_.beta1, b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  for (size_t i = 0; i < params.size(); ++i) {
    m_[i] = b1 * m_[i] + (1.0 - b1) * grads[i];
    v_[i] = b2 * v_[i] + (1.0 - b2) * grads[i].cwiseProduct(grads[i]);
    params[i].value.array() -=
        lr * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + config_.epsilon);
  }
}

double clip_gradients(std::vector<nn::Matrix>& grads, double max_norm) {
  double sq = 0.0;
  for (const nn::Matrix& g : grads) sq += g.squaredNorm();
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double scale = max_norm / norm;
    for (nn::Matrix& g : grads) g *= scale;
  }
  return norm;
}

TrainingLog train(Seq2SeqModel& model, const std::vector<TrainingExample>& corpus,
                  const TrainingConfig& config,
                  const std::function<void(const LossRecord&)>& on_step) {
  config.validate();
  if (corpus.empty()) throw Error(ErrorCode::kEmptyInput, "training corpus is empty");

  std::vector<nn::Parameter>& params = model.parameters();
  Optimizer optimizer(config, params);
  std::vector<nn::Matrix> grads;
  for (const nn::Parameter& p : params) grads.push_back(nn::Matrix::Zero(p.value.rows(), p.value.cols()));

  const bool flagged = model.config().use_flags;
  std::vector<size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(config.seed, 100));

  TrainingLog log;
  size_t step = 0;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_loss = 0.0;
    size_t epoch_tokens = 0;
    for (size_t begin = 0; begin < order.size(); begin += config.batch_size) {
      if (config.max_steps > 0 && step >= config.max_steps) break;
      const size_t end = std::min(order.size(), begin + config.batch_size);
      size_t batch_tokens = 0;
      for (size_t k = begin; k < end; ++k) batch_tokens += corpus[order[k]].targets.size();

      for (nn::Matrix& g : grads) g.setZero();
      double batch_loss = 0.0;
      for (size_t k = begin; k < end; ++k) {
        const TrainingExample& ex = corpus[order[k]];
        nn::Tape tape;
        const nn::FlagGrid* flags = flagged && ex.flags.size() > 0 ? &ex.flags : nullptr;
        nn::Var loss = model.loss(tape, ex.input_ids, ex.decoder_ids, ex.targets, flags,
                                  config.label_smoothing);
        const double value = loss.value()(0, 0);
        if (!std::isfinite(value)) {
          throw Error(ErrorCode::kNonFiniteLoss, "loss " + std::to_string(value) + " on example " +
                                                     ex.id + " at epoch " + std::to_string(epoch) +
                                                     ", step " + std::to_string(step + 1));
        }
        const double weight = static_cast<double>(ex.targets.size()) / static_cast<double>(batch_tokens);
        tape.backward(loss, grads, weight);
        batch_loss += value * weight;
      }
      const double norm = clip_gradients(grads, config.clip_norm);
      if (!std::isfinite(norm)) {
        throw Error(ErrorCode::kNonFiniteLoss, "gradient norm is not finite at epoch " +
                                                   std::to_string(epoch) + ", step " +
                                                   std::to_string(step + 1));
      }
      optimizer.step(params, grads);
      ++step;

      const LossRecord record{epoch, step, batch_loss};
      log.steps.push_back(record);
      if (on_step) on_step(record);
      epoch_loss += batch_loss * static_cast<double>(batch_tokens);
      epoch_tokens += batch_tokens;
    }
    if (epoch_tokens == 0) break;
    log.epoch_losses.push_back(epoch_loss / static_cast<double>(epoch_tokens));
  }
  return log;
}

std::string loss_log_csv(const TrainingLog& log) {
  std::string out = "epoch,step,loss\n";
  char line[96];
  for (const LossRecord& r : log.steps) {
    std::snprintf(line, sizeof(line), "%d,%zu,%.9f\n", r.epoch, r.step, r.loss);
    out += line;
  }
  return out;
}

}  // namespace smf
