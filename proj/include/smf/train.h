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

#ifndef SMF_TRAIN_H_
#define SMF_TRAIN_H_

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "smf/model.h"
#include "smf/pipeline.h"

namespace smf {

enum class OptimizerKind { kAdam, kSgd };

std::string_view optimizer_name(OptimizerKind kind);
OptimizerKind parse_optimizer(std::string_view name);

struct TrainingConfig {
  double learning_rate = 3e-4;
  size_t batch_size = 16;
  int epochs = 10;
  uint64_t seed = 7;
  OptimizerKind optimizer = OptimizerKind::kAdam;
  double label_smoothing = 0.0;
  double clip_norm = 1.0;  // <= 0 disables clipping
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  size_t max_steps = 0;  // 0: run all epochs

  void validate() const;
};

struct LossRecord {
  int epoch = 0;
  size_t step = 0;
  double loss = 0.0;  // token-weighted mean over the batch
};

struct TrainingLog {
  std::vector<LossRecord> steps;
  std::vector<double> epoch_losses;  // token-weighted mean over each epoch
};

class Optimizer {
 public:
  Optimizer(const TrainingConfig& config, const std::vector<nn::Parameter>& params);
  void step(std::vector<nn::Parameter>& params, const std::vector<nn::Matrix>& grads);
  size_t steps_taken() const { return t_; }

 private:
  TrainingConfig config_;
  std::vector<nn::Matrix> m_;
  std::vector<nn::Matrix> v_;
  size_t t_ = 0;
};

// Scales grads in place so their global L2 norm is at most max_norm.
// Returns the norm before clipping.
double clip_gradients(std::vector<nn::Matrix>& grads, double max_norm);

// Teacher-forced training. Examples are visited in a seeded shuffled order
// each epoch. Throws kNonFiniteLoss if a loss or gradient is not finite.
TrainingLog train(Seq2SeqModel& model, const std::vector<TrainingExample>& corpus,
                  const TrainingConfig& config,
                  const std::function<void(const LossRecord&)>& on_step = {});

// "epoch,step,loss" rows.
std::string loss_log_csv(const TrainingLog& log);

}  // namespace smf

#endif  // SMF_TRAIN_H_
