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

#include "smf/eval.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "smf/error.h"
#include "smf/pipeline.h"
#include "smf/rng.h"
#include "smf/text.h"

namespace smf {
namespace {

using NgramCounts = std::map<std::vector<std::string>, size_t>;

NgramCounts ngrams(const TokenList& tokens, size_t n) {
  NgramCounts counts;
  if (tokens.size() < n) return counts;
  for (size_t i = 0; i + n <= tokens.size(); ++i) {
    ++counts[TokenList(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                       tokens.begin() + static_cast<std::ptrdiff_t>(i + n))];
  }
  return counts;
}

struct BleuSuff {
  std::array<size_t, 4> matches{};
  std::array<size_t, 4> totals{};
  size_t hyp_len = 0;
  size_t ref_len = 0;
};

BleuSuff sentence_stats(const TokenList& hyp, const TokenList& ref) {
  BleuSuff s;
  s.hyp_len = hyp.size();
  s.ref_len = ref.size();
  for (size_t n = 1; n <= 4; ++n) {
    const NgramCounts h = ngrams(hyp, n);
    const NgramCounts r = ngrams(ref, n);
    for (const auto& [gram, count] : h) {
      const auto it = r.find(gram);
      if (it != r.end()) s.matches[n - 1] += std::min(count, it->second);
    }
    s.totals[n - 1] = hyp.size() >= n ? hyp.size() - n + 1 : 0;
  }
  return s;
}

BleuResult bleu_from(const BleuSuff& s, bool smooth) {
  BleuResult out;
  out.hypothesis_length = s.hyp_len;
  out.reference_length = s.ref_len;
  if (s.hyp_len == 0) return out;
  out.brevity_penalty =
      s.hyp_len > s.ref_len ? 1.0
                            : std::exp(1.0 - static_cast<double>(s.ref_len) / static_cast<double>(s.hyp_len));
  double log_sum = 0.0;
  bool zero = false;
  for (size_t n = 0; n < 4; ++n) {
    double p;
    if (s.matches[n] > 0) {
      p = static_cast<double>(s.matches[n]) / static_cast<double>(s.totals[n]);
    } else if (smooth && n > 0) {
      p = 1.0 / static_cast<double>(s.totals[n] + 1);
    } else {
      p = 0.0;
    }
    out.precisions[n] = p;
    if (p == 0.0) {
      zero = true;
    } else {
      log_sum += std::log(p);
    }
  }
  out.score = zero ? 0.0 : 100.0 * out.brevity_penalty * std::exp(log_sum / 4.0);
  return out;
}

BleuSuff accumulate(const std::vector<TokenList>& hyps, const std::vector<TokenList>& refs,
                    const std::vector<size_t>& index) {
  BleuSuff total;
  for (size_t i : index) {
    const BleuSuff s = sentence_stats(hyps[i], refs[i]);
    for (size_t n = 0; n < 4; ++n) {
      total.matches[n] += s.matches[n];
      total.totals[n] += s.totals[n];
    }
    total.hyp_len += s.hyp_len;
    total.ref_len += s.ref_len;
  }
  return total;
}

void check_corpus(const std::vector<TokenList>& hyps, const std::vector<TokenList>& refs) {
  if (hyps.empty()) throw Error(ErrorCode::kEmptyInput, "empty corpus");
  if (hyps.size() != refs.size()) {
    throw Error(ErrorCode::kShapeMismatch, std::to_string(hyps.size()) + " hypotheses but " +
                                               std::to_string(refs.size()) + " references");
  }
  for (const TokenList& r : refs) {
    if (r.empty()) throw Error(ErrorCode::kEmptyInput, "empty reference");
  }
}

void check_aligned(const std::vector<RewriteOutput>& outputs, const std::vector<PQAInstance>& instances) {
  if (outputs.size() != instances.size()) {
    throw Error(ErrorCode::kIdMismatch, std::to_string(outputs.size()) + " outputs for " +
                                            std::to_string(instances.size()) + " instances");
  }
  for (size_t i = 0; i < outputs.size(); ++i) {
    if (outputs[i].id != instances[i].id) {
      throw Error(ErrorCode::kIdMismatch,
                  "output " + outputs[i].id + " is aligned with instance " + instances[i].id);
    }
  }
}

double rate(size_t num, size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

size_t count_satisfied(const ModelInput& in, const TokenList& output, SatisfierConfig config,
                       SatisfactionMode mode, std::shared_ptr<const SimilarityScorer> scorer) {
  config.mode = mode;
  config.style_enabled = false;
  FlagTracker tracker = make_tracker(in, config, mode == SatisfactionMode::kSemantic ? scorer : nullptr);
  for (const std::string& t : output) tracker.advance(t);
  return tracker.satisfied_count();
}

MetricRow metric_row(const std::vector<TokenList>& hyps, const std::vector<TokenList>& refs,
                     const CoverageCounts& cov, const CorrectnessCounts& cor) {
  MetricRow row;
  row.n = hyps.size();
  row.bleu = bleu(hyps, refs, true);
  row.bleu_unsmoothed = bleu(hyps, refs, false);
  double r = 0.0;
  for (size_t i = 0; i < hyps.size(); ++i) r += hyps[i].empty() ? 0.0 : rouge_l(hyps[i], refs[i]);
  row.rouge_l = r / static_cast<double>(hyps.size());
  row.coverage_lexical = cov.lexical_rate();
  row.coverage_semantic = cov.semantic_rate();
  row.style_accuracy = rate(cor.style, cor.n);
  row.polarity_accuracy = rate(cor.polarity, cor.n);
  row.context_accuracy = rate(cor.context, cor.n);
  return row;
}

nlohmann::ordered_json row_json(const MetricRow& r) {
  nlohmann::ordered_json j;
  j["n"] = r.n;
  j["bleu"] = r.bleu;
  j["bleu_unsmoothed"] = r.bleu_unsmoothed;
  j["rouge_l"] = r.rouge_l;
  j["coverage_lexical"] = r.coverage_lexical;
  j["coverage_semantic"] = r.coverage_semantic;
  j["style_accuracy"] = r.style_accuracy;
  j["polarity_accuracy"] = r.polarity_accuracy;
  j["context_accuracy"] = r.context_accuracy;
  return j;
}

std::string table_row(const std::string& name, const MetricRow& r) {
  char line[256];
  std::snprintf(line, sizeof(line), "%-16s %5zu %7.2f %7.2f %7.4f %7.4f %7.4f %7.4f %7.4f %7.4f\n",
                name.c_str(), r.n, r.bleu, r.bleu_unsmoothed, r.rouge_l, r.coverage_lexical,
                r.coverage_semantic, r.style_accuracy, r.polarity_accuracy, r.context_accuracy);
  return line;
}

std::string table_header(const char* first) {
  char line[256];
  std::snprintf(line, sizeof(line), "%-16s %5s %7s %7s %7s %7s %7s %7s %7s %7s\n", first, "n", "BLEU",
                "BLEU-0", "ROUGE-L", "Cov-Lex", "Cov-Sem", "Style", "Polar", "Context");
  return line;
}

}  // namespace

BleuResult corpus_bleu(const std::vector<TokenList>& hypotheses,
                       const std::vector<TokenList>& references, bool smooth) {
  check_corpus(hypotheses, references);
  std::vector<size_t> all(hypotheses.size());
  for (size_t i = 0; i < all.size(); ++i) all[i] = i;
  return bleu_from(accumulate(hypotheses, references, all), smooth);
}

double bleu(const std::vector<TokenList>& hypotheses, const std::vector<TokenList>& references,
            bool smooth) {
  return corpus_bleu(hypotheses, references, smooth).score;
}

size_t lcs_length(const TokenList& a, const TokenList& b) {
  std::vector<size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (size_t i = 1; i <= a.size(); ++i) {
    for (size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

RougeL rouge_l_scores(const TokenList& hypothesis, const TokenList& reference, double beta) {
  if (hypothesis.empty() || reference.empty()) {
    throw Error(ErrorCode::kEmptyInput, "ROUGE-L needs non-empty sequences");
  }
  const double lcs = static_cast<double>(lcs_length(hypothesis, reference));
  RougeL out;
  out.precision = lcs / static_cast<double>(hypothesis.size());
  out.recall = lcs / static_cast<double>(reference.size());
  if (lcs > 0.0) {
    const double b2 = beta * beta;
    out.f = (1.0 + b2) * out.precision * out.recall / (out.recall + b2 * out.precision);
  }
  return out;
}

double rouge_l(const TokenList& hypothesis, const TokenList& reference, double beta) {
  return rouge_l_scores(hypothesis, reference, beta).f;
}

double CoverageCounts::lexical_rate() const { return rate(lexical, constraints); }
double CoverageCounts::semantic_rate() const { return rate(semantic, constraints); }

CoverageReport coverage_audit(const std::vector<RewriteOutput>& outputs,
                              const std::vector<PQAInstance>& instances,
                              std::shared_ptr<const SimilarityScorer> scorer,
                              const SatisfierConfig& config) {
  check_aligned(outputs, instances);
  CoverageReport report;
  for (size_t i = 0; i < outputs.size(); ++i) {
    const ModelInput in = prepare_input(instances[i]);
    CoverageCounts c;
    c.constraints = in.constraints.size();
    if (c.constraints > 0) {
      c.lexical = count_satisfied(in, outputs[i].tokens, config, SatisfactionMode::kLexical, nullptr);
      c.semantic = count_satisfied(in, outputs[i].tokens, config, SatisfactionMode::kSemantic, scorer);
    }
    for (CoverageCounts* dst :
         {&report.overall, &report.by_category[std::string(category_name(instances[i].category))]}) {
      dst->constraints += c.constraints;
      dst->lexical += c.lexical;
      dst->semantic += c.semantic;
    }
  }
  return report;
}

bool polarity_correct(const TokenList& output, Polarity gold) {
  if (output.empty()) return false;
  return output.front() == (gold == Polarity::kYes ? "yes" : "no");
}

bool style_correct(const TokenList& output, const TokenSet& first_person) {
  return std::none_of(output.begin(), output.end(),
                      [&](const std::string& t) { return first_person.contains(t); });
}

bool context_covered(const TokenList& output, const PQAInstance& instance) {
  const TokenList phrase =
      tokenize(instance.context_phrase.empty() ? instance.context : instance.context_phrase);
  return !phrase.empty() && contains_sequence(output, phrase);
}

CorrectnessReport correctness_audit(const std::vector<RewriteOutput>& outputs,
                                    const std::vector<PQAInstance>& instances) {
  check_aligned(outputs, instances);
  CorrectnessReport report;
  for (size_t i = 0; i < outputs.size(); ++i) {
    const TokenList& out = outputs[i].tokens;
    const bool p = polarity_correct(out, instances[i].polarity);
    const bool s = style_correct(out);
    const bool c = context_covered(out, instances[i]);
    for (CorrectnessCounts* dst :
         {&report.overall, &report.by_category[std::string(category_name(instances[i].category))]}) {
      ++dst->n;
      dst->polarity += p;
      dst->style += s;
      dst->context += c;
    }
  }
  return report;
}

EvalReport evaluate(const std::string& system, const std::vector<RewriteOutput>& outputs,
                    const std::vector<PQAInstance>& instances,
                    std::shared_ptr<const SimilarityScorer> scorer, const SatisfierConfig& config) {
  const CoverageReport cov = coverage_audit(outputs, instances, scorer, config);
  const CorrectnessReport cor = correctness_audit(outputs, instances);

  std::map<std::string, std::pair<std::vector<TokenList>, std::vector<TokenList>>> groups;
  std::vector<TokenList> hyps, refs;
  for (size_t i = 0; i < outputs.size(); ++i) {
    TokenList ref = tokenize(instances[i].target);
    auto& g = groups[std::string(category_name(instances[i].category))];
    g.first.push_back(outputs[i].tokens);
    g.second.push_back(ref);
    hyps.push_back(outputs[i].tokens);
    refs.push_back(std::move(ref));
  }

  EvalReport report;
  report.system = system;
  report.overall = metric_row(hyps, refs, cov.overall, cor.overall);
  for (const auto& [cat, g] : groups) {
    report.by_category[cat] = metric_row(g.first, g.second, cov.by_category.at(cat), cor.by_category.at(cat));
  }
  return report;
}

std::string report_json(const EvalReport& report) {
  nlohmann::ordered_json j;
  j["system"] = report.system;
  j["overall"] = row_json(report.overall);
  nlohmann::ordered_json cats = nlohmann::ordered_json::object();
  for (const auto& [cat, row] : report.by_category) cats[cat] = row_json(row);
  j["by_category"] = cats;
  j["bertscore"] = report.bertscore ? nlohmann::ordered_json(*report.bertscore) : nlohmann::ordered_json(nullptr);
  j["rouge_beta"] = kRougeBeta;
  return j.dump(2);
}

std::string report_table(const std::vector<EvalReport>& reports) {
  std::string out = table_header("system");
  for (const EvalReport& r : reports) out += table_row(r.system, r.overall);
  return out;
}

std::string category_table(const EvalReport& report) {
  std::string out = table_header("category");
  for (Category c : kAllCategories) {
    const auto it = report.by_category.find(std::string(category_name(c)));
    if (it != report.by_category.end()) out += table_row(it->first, it->second);
  }
  out += table_row("all", report.overall);
  return out;
}

BootstrapInterval bootstrap_bleu(const std::vector<TokenList>& hypotheses,
                                 const std::vector<TokenList>& references, size_t samples,
                                 uint64_t seed, double confidence) {
  check_corpus(hypotheses, references);
  if (samples == 0) throw Error(ErrorCode::kInvalidArgument, "samples must be positive");
  Rng rng(seed);
  std::vector<double> scores;
  std::vector<size_t> index(hypotheses.size());
  for (size_t s = 0; s < samples; ++s) {
    for (size_t& i : index) i = rng.below(hypotheses.size());
    scores.push_back(bleu_from(accumulate(hypotheses, references, index), true).score);
  }
  std::sort(scores.begin(), scores.end());
  const double tail = (1.0 - confidence) / 2.0;
  const auto at = [&](double q) {
    const size_t k = std::min(scores.size() - 1, static_cast<size_t>(q * static_cast<double>(scores.size())));
    return scores[k];
  };
  return {at(tail), at(1.0 - tail)};
}

std::vector<RewriteOutput> read_outputs(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot read " + path);
  std::vector<RewriteOutput> out;
  for (std::string line; std::getline(in, line);) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const nlohmann::json j = nlohmann::json::parse(line);
      RewriteOutput r;
      r.id = j.at("id").get<std::string>();
      if (j.contains("output_tokens")) {
        r.tokens = j.at("output_tokens").get<TokenList>();
      } else {
        r.tokens = tokenize(j.value("output", ""));
      }
      out.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kInvalidArgument, std::string("bad output line: ") + e.what());
    }
  }
  return out;
}

}  // namespace smf
