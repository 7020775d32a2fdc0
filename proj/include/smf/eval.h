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

#ifndef SMF_EVAL_H_
#define SMF_EVAL_H_

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "smf/datagen.h"
#include "smf/flags.h"

namespace smf {

using TokenList = std::vector<std::string>;

struct BleuResult {
  double score = 0.0;  // 0-100
  std::array<double, 4> precisions{};
  double brevity_penalty = 0.0;
  size_t hypothesis_length = 0;
  size_t reference_length = 0;
};

// Corpus BLEU-4 against one reference per hypothesis. With smoothing,
// an order n >= 2 with no matches uses 1 / (total_n + 1) as its precision.
BleuResult corpus_bleu(const std::vector<TokenList>& hypotheses,
                       const std::vector<TokenList>& references, bool smooth = true);
double bleu(const std::vector<TokenList>& hypotheses, const std::vector<TokenList>& references,
            bool smooth = true);

struct RougeL {
  double precision = 0.0;
  double recall = 0.0;
  double f = 0.0;
};

inline constexpr double kRougeBeta = 1.2;

size_t lcs_length(const TokenList& a, const TokenList& b);
RougeL rouge_l_scores(const TokenList& hypothesis, const TokenList& reference,
                      double beta = kRougeBeta);
double rouge_l(const TokenList& hypothesis, const TokenList& reference, double beta = kRougeBeta);

struct RewriteOutput {
  std::string id;
  TokenList tokens;
};

struct CoverageCounts {
  size_t constraints = 0;
  size_t lexical = 0;
  size_t semantic = 0;

  double lexical_rate() const;
  double semantic_rate() const;
};

struct CoverageReport {
  CoverageCounts overall;
  std::map<std::string, CoverageCounts> by_category;
};

// Offline flag replay over each output, once in lexical and once in
// semantic mode (thresholds from `config`). Throws kIdMismatch unless
// outputs and instances carry the same ids in the same order.
CoverageReport coverage_audit(const std::vector<RewriteOutput>& outputs,
                              const std::vector<PQAInstance>& instances,
                              std::shared_ptr<const SimilarityScorer> scorer = nullptr,
                              const SatisfierConfig& config = {});

struct CorrectnessCounts {
  size_t n = 0;
  size_t polarity = 0;
  size_t style = 0;
  size_t context = 0;
};

struct CorrectnessReport {
  CorrectnessCounts overall;
  std::map<std::string, CorrectnessCounts> by_category;
};

bool polarity_correct(const TokenList& output, Polarity gold);
bool style_correct(const TokenList& output, const TokenSet& first_person = first_person_lexicon());
bool context_covered(const TokenList& output, const PQAInstance& instance);

CorrectnessReport correctness_audit(const std::vector<RewriteOutput>& outputs,
                                    const std::vector<PQAInstance>& instances);

struct MetricRow {
  size_t n = 0;
  double bleu = 0.0;
  double bleu_unsmoothed = 0.0;
  double rouge_l = 0.0;
  double coverage_lexical = 0.0;
  double coverage_semantic = 0.0;
  double style_accuracy = 0.0;
  double polarity_accuracy = 0.0;
  double context_accuracy = 0.0;
};

struct EvalReport {
  std::string system;
  MetricRow overall;
  std::map<std::string, MetricRow> by_category;
  std::optional<double> bertscore;  // not computed here
};

EvalReport evaluate(const std::string& system, const std::vector<RewriteOutput>& outputs,
                    const std::vector<PQAInstance>& instances,
                    std::shared_ptr<const SimilarityScorer> scorer = nullptr,
                    const SatisfierConfig& config = {});

std::string report_json(const EvalReport& report);
// Rows are systems, columns metrics.
std::string report_table(const std::vector<EvalReport>& reports);
// Rows are categories of one system.
std::string category_table(const EvalReport& report);

// Percentile interval of corpus BLEU over resampled corpora.
struct BootstrapInterval {
  double low = 0.0;
  double high = 0.0;
};
BootstrapInterval bootstrap_bleu(const std::vector<TokenList>& hypotheses,
                                 const std::vector<TokenList>& references, size_t samples,
                                 uint64_t seed, double confidence = 0.95);

// Rewrite output JSONL: {"id", "output", ...}; tokens are taken from
// "output_tokens" when present, else from tokenizing "output".
std::vector<RewriteOutput> read_outputs(const std::string& path);

}  // namespace smf

#endif  // SMF_EVAL_H_
