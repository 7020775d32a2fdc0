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

#include "smf/pipeline.h"

#include "smf/error.h"
#include "smf/text.h"

namespace smf {

std::vector<std::vector<std::string>> ModelInput::constraint_words() const {
  std::vector<std::vector<std::string>> out;
  out.reserve(constraints.size());
  for (const Constraint& c : constraints) out.push_back(c.tokens);
  return out;
}

ModelInput prepare_input(const PQAInstance& instance) {
  const std::vector<std::string> q = tokenize(instance.question);
  const std::vector<std::string> a = tokenize(instance.answer);
  const std::vector<std::string> c = tokenize(instance.context);

  ModelInput in;
  in.layout = InputLayout::from_lengths(q.size(), a.size(), c.size());
  in.x_tokens = q;
  in.x_tokens.push_back("<sep>");
  in.x_tokens.insert(in.x_tokens.end(), a.begin(), a.end());
  in.x_tokens.push_back("<sep>");
  in.x_tokens.insert(in.x_tokens.end(), c.begin(), c.end());

  in.constraints = instance.constraints;
  if (in.constraints.empty() && !instance.question_parse.empty()) {
    in.constraints = gold_constraints(instance);
  }
  const std::vector<std::vector<size_t>> rows = constraint_token_rows(in.constraints, in.layout);
  for (size_t k = 0; k < in.constraints.size(); ++k) {
    Constraint& con = in.constraints[k];
    for (std::string& t : con.tokens) t = to_lower(t);
    for (size_t i = 0; i < rows[k].size(); ++i) {
      if (i >= con.tokens.size() || in.x_tokens[rows[k][i]] != con.tokens[i]) {
        throw Error(ErrorCode::kOffsetOutOfRange,
                    "constraint \"" + con.text() + "\" does not match the tokens of " + instance.id);
      }
    }
  }
  return in;
}

FlagTracker make_tracker(const ModelInput& input, const SatisfierConfig& config,
                         std::shared_ptr<const SimilarityScorer> scorer) {
  return FlagTracker::for_constraints(input.x_tokens, input.constraints, input.layout, config,
                                      std::move(scorer));
}

MentionFlagMatrix teacher_forced_flags(const ModelInput& input, const std::vector<std::string>& y,
                                       const SatisfierConfig& config,
                                       std::shared_ptr<const SimilarityScorer> scorer) {
  FlagTracker tracker = make_tracker(input, config, std::move(scorer));
  for (const std::string& t : y) tracker.advance(t);
  return tracker.matrix();
}

TrainingExample make_training_example(const PQAInstance& instance, const Vocabulary& vocab,
                                      const SatisfierConfig& config, bool use_flags,
                                      std::shared_ptr<const SimilarityScorer> scorer) {
  const ModelInput in = prepare_input(instance);
  const std::vector<std::string> y = tokenize(instance.target);

  TrainingExample ex;
  ex.id = instance.id;
  ex.input_ids = vocab.encode(in.x_tokens);
  ex.decoder_ids.push_back(Vocabulary::kSep);
  const std::vector<int> y_ids = vocab.encode(y);
  ex.decoder_ids.insert(ex.decoder_ids.end(), y_ids.begin(), y_ids.end());
  ex.targets = y_ids;
  ex.targets.push_back(Vocabulary::kEos);
  if (use_flags) {
    ex.flags = flag_grid(teacher_forced_flags(in, y, config, std::move(scorer)), ex.decoder_ids.size());
  }
  return ex;
}

Vocabulary build_vocabulary(const std::vector<PQAInstance>& instances) {
  std::vector<std::vector<std::string>> sentences;
  sentences.reserve(instances.size() * 2);
  for (const PQAInstance& inst : instances) {
    sentences.push_back(prepare_input(inst).x_tokens);
    sentences.push_back(tokenize(inst.target));
  }
  return Vocabulary::build(sentences);
}

}  // namespace smf
