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


#include <string>
#include <vector>

#include "doctest.h"
#include "smf/datagen.h"
#include "smf/error.h"
#include "smf/pipeline.h"
#include "smf/text.h"
#include "test_util.h"

using smf::PQAInstance;
using smf::SatisfierConfig;
using smf::testing::error_code_of;

namespace {

const std::vector<PQAInstance>& corpus() {
  static const std::vector<PQAInstance> kCorpus = [] {
    smf::GeneratorConfig c;
    c.n = 120;
    return smf::generate(c);
  }();
  return kCorpus;
}

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("input layout") {
  for (const auto& x : corpus()) {
    CAPTURE(x.id);
    const auto in = smf::prepare_input(x);
    const auto q = smf::tokenize(x.question);
    const auto a = smf::tokenize(x.answer);
    CHECK(in.x_tokens.size() == in.layout.total_length());
    CHECK(in.x_tokens[q.size()] == "<sep>");
    CHECK(in.x_tokens[q.size() + 1 + a.size()] == "<sep>");
    CHECK(in.layout.answer_offset == q.size() + 1);
    const auto rows = smf::constraint_token_rows(in.constraints, in.layout);
    for (size_t k = 0; k < rows.size(); ++k) {
      for (size_t i = 0; i < rows[k].size(); ++i) {
        CHECK(in.x_tokens[rows[k][i]] == in.constraints[k].tokens[i]);
        CHECK(in.x_tokens[rows[k][i]] != "<sep>");
      }
    }
  }
}

TEST_CASE("misaligned constraints are rejected") {
  PQAInstance x = corpus().front();
  x.constraints[0].span.start += 1;
  x.constraints[0].span.end += 1;
  CHECK(error_code_of([&] { smf::prepare_input(x); }) == smf::ErrorCode::kOffsetOutOfRange);
}

TEST_CASE("missing constraints are extracted from the parses") {
  PQAInstance x = corpus().front();
  const auto stored = smf::prepare_input(x).constraints;
  x.constraints.clear();
  CHECK(smf::prepare_input(x).constraints == stored);
}

TEST_CASE("teacher forced flags follow the gold target") {
  SatisfierConfig cfg;
  cfg.mode = smf::SatisfactionMode::kLexical;
  for (const auto& x : corpus()) {
    const auto in = smf::prepare_input(x);
    const auto y = smf::tokenize(x.target);
    const auto m = smf::teacher_forced_flags(in, y, cfg);
    CHECK(m.num_columns() == y.size() + 1);
    auto tr = smf::make_tracker(in, cfg);
    for (const auto& t : y) tr.advance(t);
    for (size_t t = 0; t < m.num_columns(); ++t) {
      CHECK(std::equal(m.column(t).begin(), m.column(t).end(), tr.matrix().column(t).begin()));
    }
  }
}

TEST_CASE("training examples") {
  const auto vocab = smf::build_vocabulary(corpus());
  const auto& x = corpus()[3];
  const auto ex = smf::make_training_example(x, vocab, SatisfierConfig{}, true);
  const auto y = smf::tokenize(x.target);
  CHECK(ex.id == x.id);
  CHECK(ex.decoder_ids.size() == y.size() + 1);
  CHECK(ex.decoder_ids.front() == smf::Vocabulary::kSep);
  CHECK(ex.targets.back() == smf::Vocabulary::kEos);
  CHECK(ex.targets.size() == ex.decoder_ids.size());
  for (size_t i = 1; i < ex.decoder_ids.size(); ++i) CHECK(ex.decoder_ids[i] == ex.targets[i - 1]);
  CHECK(ex.flags.rows() == static_cast<Eigen::Index>(ex.decoder_ids.size()));
  CHECK(ex.flags.cols() == static_cast<Eigen::Index>(ex.input_ids.size()));
  CHECK(std::count(ex.input_ids.begin(), ex.input_ids.end(), smf::Vocabulary::kSep) == 2);
  const auto vanilla = smf::make_training_example(x, vocab, SatisfierConfig{}, false);
  CHECK(vanilla.flags.size() == 0);
  for (const auto& inst : corpus()) {
    for (int id : smf::make_training_example(inst, vocab, SatisfierConfig{}, false).input_ids) {
      CHECK(id != smf::Vocabulary::kUnk);
    }
  }
}

}  // TEST_SUITE
