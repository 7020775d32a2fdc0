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

#ifndef SMF_PIPELINE_H_
#define SMF_PIPELINE_H_

#include <memory>
#include <string>
#include <vector>

#include "smf/datagen.h"
#include "smf/flags.h"
#include "smf/model.h"
#include "smf/treebank.h"

namespace smf {

// Tokenized x = [q; <sep>; a; <sep>; c] with constraints lowercased to match.
struct ModelInput {
  std::vector<std::string> x_tokens;
  InputLayout layout;
  std::vector<Constraint> constraints;

  std::vector<std::vector<std::string>> constraint_words() const;
};

// Uses the instance's stored constraints, or extracts them from its parses
// when none are stored. Throws kOffsetOutOfRange when a constraint does not
// line up with the tokenized question or answer.
ModelInput prepare_input(const PQAInstance& instance);

FlagTracker make_tracker(const ModelInput& input, const SatisfierConfig& config,
                         std::shared_ptr<const SimilarityScorer> scorer = nullptr);

// Mention flags along a known output: one column per prefix length,
// so y.size() + 1 columns.
MentionFlagMatrix teacher_forced_flags(const ModelInput& input, const std::vector<std::string>& y,
                                       const SatisfierConfig& config,
                                       std::shared_ptr<const SimilarityScorer> scorer = nullptr);

struct TrainingExample {
  std::string id;
  std::vector<int> input_ids;
  std::vector<int> decoder_ids;  // <sep> y
  std::vector<int> targets;      // y <eos>
  nn::FlagGrid flags;            // empty for a vanilla model
};

TrainingExample make_training_example(const PQAInstance& instance, const Vocabulary& vocab,
                                      const SatisfierConfig& config, bool use_flags,
                                      std::shared_ptr<const SimilarityScorer> scorer = nullptr);

// Vocabulary over inputs and targets of the given instances.
Vocabulary build_vocabulary(const std::vector<PQAInstance>& instances);

}  // namespace smf

#endif  // SMF_PIPELINE_H_
