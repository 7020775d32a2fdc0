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

#ifndef SMF_DECODE_H_
#define SMF_DECODE_H_

#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "smf/flags.h"
#include "smf/model.h"

namespace smf {

// Next-token log-probabilities given the decoder prefix (starting with the
// start token) and the mention flags for every prefix position.
class StepScorer {
 public:
  virtual ~StepScorer() = default;
  virtual std::vector<double> next_log_probs(const std::vector<int>& prefix,
                                             const MentionFlagMatrix& flags) const = 0;
};

// Caches decoder self-attention states per prefix, so each call costs one
// incremental step. The cache is not synchronized: one scorer per thread.
class ModelStepScorer final : public StepScorer {
 public:
  ModelStepScorer(const Seq2SeqModel& model, std::vector<int> x_ids);
  std::vector<double> next_log_probs(const std::vector<int>& prefix,
                                     const MentionFlagMatrix& flags) const override;

 private:
  struct Entry {
    Seq2SeqModel::DecoderCache cache;
    nn::FlagGrid grid;  // flag rows the cached positions were computed with
  };

  const Seq2SeqModel& model_;
  std::vector<nn::Matrix> keys_;
  std::vector<nn::Matrix> values_;
  int length_ = 0;
  mutable std::map<std::vector<int>, Entry> cache_;
  mutable size_t watermark_ = 0;
};

enum class DecoderKind { kGreedy, kBeam, kCbs };

std::string_view decoder_name(DecoderKind kind);
DecoderKind parse_decoder(std::string_view name);

struct DecodeOptions {
  size_t max_len = 48;
  size_t beam = 4;
  double length_exponent = 0.7;
};

struct Hypothesis {
  std::vector<int> tokens;  // emitted tokens, without start or end token
  double score = 0.0;       // sum of chosen-token log-probabilities
  FlagTracker flags;
  size_t satisfied = 0;     // constraints in state 2 according to the flags
  bool finished = false;

  // Constrained search bookkeeping.
  std::vector<bool> met;
  int active = -1;          // constraint in progress
  size_t progress = 0;      // tokens of `active` emitted so far
  size_t bank = 0;          // constraint tokens emitted

  double normalized_score(double exponent) const;
};

struct DecodeResult {
  Hypothesis best;
  bool unsatisfiable = false;  // constrained search found no finished top-bank hypothesis
  std::vector<Hypothesis> finished;
};

DecodeResult greedy_decode(const StepScorer& scorer, const Vocabulary& vocab, FlagTracker flags,
                           const DecodeOptions& options);

// Length-normalized beam search; beam = 1 reproduces greedy decoding.
DecodeResult beam_decode(const StepScorer& scorer, const Vocabulary& vocab, FlagTracker flags,
                         const DecodeOptions& options);

// Grid beam search with one bank per constraint token. Only hypotheses that
// have emitted every constraint, each contiguously, may end.
DecodeResult cbs_decode(const StepScorer& scorer, const Vocabulary& vocab, FlagTracker flags,
                        const std::vector<std::vector<int>>& constraints,
                        const DecodeOptions& options);

DecodeResult run_decoder(DecoderKind kind, const StepScorer& scorer, const Vocabulary& vocab,
                         FlagTracker flags, const std::vector<std::vector<int>>& constraints,
                         const DecodeOptions& options);

// Number of constraints contained verbatim in the output.
size_t lexical_matches(const std::vector<std::string>& output,
                       const std::vector<std::vector<std::string>>& constraints);

// {"output_tokens", "score", "constraints_satisfied", "flag_trace_path"}.
std::string decode_report_json(const DecodeResult& result, const Vocabulary& vocab,
                               const std::vector<std::vector<std::string>>& constraints,
                               const std::string& flag_trace_path = "");

}  // namespace smf

#endif  // SMF_DECODE_H_
