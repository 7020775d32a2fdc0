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


#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "doctest.h"
#include "smf/datagen.h"
#include "smf/error.h"
#include "smf/model.h"
#include "smf/pipeline.h"
#include "smf/train.h"
#include "test_util.h"

namespace nn = smf::nn;
using smf::ErrorCode;
using smf::TrainingConfig;
using smf::TrainingExample;
using smf::testing::error_code_of;

namespace {

struct Setup {
  smf::Vocabulary vocab;
  std::vector<TrainingExample> flagged;
  std::vector<TrainingExample> vanilla;
};

const Setup& setup() {
  static const Setup kSetup = [] {
    smf::GeneratorConfig g;
    g.n = 64;
    const auto corpus = smf::generate(g);
    Setup s;
    s.vocab = smf::build_vocabulary(corpus);
    for (const auto& x : corpus) {
      s.flagged.push_back(smf::make_training_example(x, s.vocab, smf::SatisfierConfig{}, true));
      s.vanilla.push_back(smf::make_training_example(x, s.vocab, smf::SatisfierConfig{}, false));
    }
    return s;
  }();
  return kSetup;
}

smf::ModelConfig small_config(bool use_flags) {
  smf::ModelConfig c;
  c.dim = 16;
  c.heads = 2;
  c.encoder_layers = 1;
  c.decoder_layers = 1;
  c.ff_dim = 32;
  c.vocab_size = static_cast<int>(setup().vocab.size());
  c.max_length = 64;
  c.use_flags = use_flags;
  return c;
}

TrainingConfig quick(int epochs) {
  TrainingConfig t;
  t.learning_rate = 3e-3;
  t.batch_size = 8;
  t.epochs = epochs;
  return t;
}

}  // namespace

TEST_SUITE("train") {

TEST_CASE("config validation and names") {
  TrainingConfig t;
  CHECK_NOTHROW(t.validate());
  t.learning_rate = 0.0;
  CHECK(error_code_of([&] { t.validate(); }) == ErrorCode::kInvalidArgument);
  t = TrainingConfig{};
  t.batch_size = 0;
  CHECK(error_code_of([&] { t.validate(); }) == ErrorCode::kInvalidArgument);
  CHECK(smf::parse_optimizer("sgd") == smf::OptimizerKind::kSgd);
  CHECK(smf::optimizer_name(smf::OptimizerKind::kAdam) == "adam");
}

TEST_CASE("adam first step") {
  TrainingConfig t;
  t.learning_rate = 0.1;
  std::vector<nn::Parameter> p{{"w", nn::Matrix::Constant(1, 2, 1.0)}};
  nn::Matrix g(1, 2);
  g << 0.5, -2.0;
  smf::Optimizer opt(t, p);
  opt.step(p, {g});
  // bias-corrected first step moves each weight by lr * sign(g)
  CHECK(p[0].value(0, 0) == doctest::Approx(0.9).epsilon(1e-6));
  CHECK(p[0].value(0, 1) == doctest::Approx(1.1).epsilon(1e-6));
  CHECK(opt.steps_taken() == 1);

  t.optimizer = smf::OptimizerKind::kSgd;
  std::vector<nn::Parameter> q{{"w", nn::Matrix::Constant(1, 2, 1.0)}};
  smf::Optimizer sgd(t, q);
  sgd.step(q, {g});
  CHECK(q[0].value(0, 0) == doctest::Approx(0.95));
  CHECK(q[0].value(0, 1) == doctest::Approx(1.2));
}

TEST_CASE("gradient clipping") {
  std::vector<nn::Matrix> g{nn::Matrix::Constant(1, 1, 3.0), nn::Matrix::Constant(1, 1, 4.0)};
  CHECK(smf::clip_gradients(g, 1.0) == doctest::Approx(5.0));
  CHECK(g[0](0, 0) == doctest::Approx(0.6));
  CHECK(g[1](0, 0) == doctest::Approx(0.8));
  std::vector<nn::Matrix> h{nn::Matrix::Constant(1, 1, 0.3)};
  smf::clip_gradients(h, 1.0);
  CHECK(h[0](0, 0) == 0.3);
  smf::clip_gradients(h, 0.0);
  CHECK(h[0](0, 0) == 0.3);
}

TEST_CASE("loss decreases over the first epochs") {
  smf::Seq2SeqModel m(small_config(true), 7);
  const auto log = smf::train(m, setup().flagged, quick(3));
  REQUIRE(log.epoch_losses.size() == 3);
  CHECK(log.epoch_losses[1] < log.epoch_losses[0]);
  CHECK(log.epoch_losses[2] < log.epoch_losses[1]);
  CHECK(log.steps.size() == 3 * 8);
  for (const auto& p : m.parameters()) CHECK(p.value.allFinite());
}

TEST_CASE("training is deterministic") {
  smf::Seq2SeqModel a(small_config(true), 7), b(small_config(true), 7);
  const auto la = smf::train(a, setup().flagged, quick(2));
  const auto lb = smf::train(b, setup().flagged, quick(2));
  CHECK(smf::loss_log_csv(la) == smf::loss_log_csv(lb));
  for (size_t i = 0; i < a.parameters().size(); ++i) {
    CHECK(a.parameters()[i].value == b.parameters()[i].value);
  }
  TrainingConfig other = quick(2);
  other.seed = 8;
  smf::Seq2SeqModel c(small_config(true), 7);
  CHECK(smf::loss_log_csv(smf::train(c, setup().flagged, other)) != smf::loss_log_csv(la));
}

TEST_CASE("loss log csv") {
  smf::TrainingLog log;
  log.steps = {{0, 1, 2.5}, {1, 2, 0.125}};
  CHECK(smf::loss_log_csv(log) == "epoch,step,loss\n0,1,2.500000000\n1,2,0.125000000\n");
}

TEST_CASE("vanilla ablation trains") {
  smf::Seq2SeqModel m(small_config(false), 7);
  const auto log = smf::train(m, setup().vanilla, quick(2));
  CHECK(log.epoch_losses[1] < log.epoch_losses[0]);
}

TEST_CASE("single example memorization") {
  smf::ModelConfig c = small_config(true);
  c.dim = 32;
  c.ff_dim = 64;
  smf::Seq2SeqModel m(c, 3);
  const std::vector<TrainingExample> one{setup().flagged[5]};
  TrainingConfig t;
  t.learning_rate = 3e-3;
  t.batch_size = 1;
  t.epochs = 200;
  const auto log = smf::train(m, one, t);
  CHECK(log.steps.size() == 200);
  CHECK(log.epoch_losses.back() < 0.1);
}

TEST_CASE("non finite loss aborts") {
  smf::Seq2SeqModel m(small_config(true), 7);
  m.param("out.b").value(0, 5) = std::numeric_limits<double>::quiet_NaN();
  CHECK(error_code_of([&] { smf::train(m, setup().flagged, quick(1)); }) ==
        ErrorCode::kNonFiniteLoss);
  smf::Seq2SeqModel e(small_config(true), 7);
  CHECK(error_code_of([&] { smf::train(e, {}, quick(1)); }) == ErrorCode::kEmptyInput);
}

TEST_CASE("max steps stops early") {
  smf::Seq2SeqModel m(small_config(true), 7);
  TrainingConfig t = quick(5);
  t.max_steps = 3;
  CHECK(smf::train(m, setup().flagged, t).steps.size() == 3);
}

}  // TEST_SUITE
