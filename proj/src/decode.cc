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

#include "smf/decode.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "json.hpp"
#include "smf/error.h"
#include "smf/text.h"

namespace smf {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

bool is_blocked(int id) {
  return id == Vocabulary::kPad || id == Vocabulary::kUnk || id == Vocabulary::kSep;
}

std::vector<int> prefix_of(const Hypothesis& h) {
  std::vector<int> prefix;
  prefix.reserve(h.tokens.size() + 1);
  prefix.push_back(Vocabulary::kSep);
  prefix.insert(prefix.end(), h.tokens.begin(), h.tokens.end());
  return prefix;
}

std::vector<double> step_log_probs(const StepScorer& scorer, const Hypothesis& h, size_t vocab_size) {
  std::vector<double> lp = scorer.next_log_probs(prefix_of(h), h.flags.matrix());
  if (lp.size() != vocab_size) {
    throw Error(ErrorCode::kShapeMismatch, "scorer returned " + std::to_string(lp.size()) +
                                               " scores for a vocabulary of " +
                                               std::to_string(vocab_size));
  }
  for (size_t i = 0; i < lp.size(); ++i) {
    if (is_blocked(static_cast<int>(i))) lp[i] = kNegInf;
  }
  return lp;
}

Hypothesis extend(const Hypothesis& parent, int token, double score, const Vocabulary& vocab) {
  Hypothesis h = parent;
  h.score = score;
  if (token == Vocabulary::kEos) {
    h.finished = true;
    return h;
  }
  h.tokens.push_back(token);
  h.flags.advance(vocab.token(token));
  h.satisfied = h.flags.satisfied_count();
  return h;
}

struct Candidate {
  size_t parent = 0;
  int token = 0;
  double score = kNegInf;
  size_t order = 0;  // generation order, last tie-breaker
  // Constrained search: resulting automaton state.
  int active = -1;
  size_t progress = 0;
  size_t bank = 0;
  int completes = -1;  // constraint finished by this token
};

bool better(const Candidate& a, const Candidate& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.token != b.token) return a.token < b.token;
  if (a.parent != b.parent) return a.parent < b.parent;
  return a.order < b.order;
}

void keep_top(std::vector<Candidate>& cands, size_t k) {
  const size_t n = std::min(k, cands.size());
  std::partial_sort(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(n), cands.end(), better);
  cands.resize(n);
}

const Hypothesis& pick_best(const std::vector<Hypothesis>& hyps, double exponent) {
  size_t best = 0;
  for (size_t i = 1; i < hyps.size(); ++i) {
    if (hyps[i].normalized_score(exponent) > hyps[best].normalized_score(exponent)) best = i;
  }
  return hyps[best];
}

Hypothesis root(FlagTracker flags) {
  Hypothesis h;
  h.flags = std::move(flags);
  h.satisfied = h.flags.satisfied_count();
  return h;
}

}  // namespace

ModelStepScorer::ModelStepScorer(const Seq2SeqModel& model, std::vector<int> x_ids) : model_(model) {
  nn::Tape tape(false);
  const Seq2SeqModel::CrossMemory memory = model.cross_memory(tape, model.encode(tape, x_ids));
  for (const nn::Var& k : memory.keys) keys_.push_back(k.value());
  for (const nn::Var& v : memory.values) values_.push_back(v.value());
  length_ = memory.length;
}

std::vector<double> ModelStepScorer::next_log_probs(const std::vector<int>& prefix,
                                                    const MentionFlagMatrix& flags) const {
  const size_t n = prefix.size();
  if (n == 0) throw Error(ErrorCode::kEmptyInput, "empty decoder input");
  if (n > static_cast<size_t>(model_.config().max_length)) {
    throw Error(ErrorCode::kLengthOverflow, "decoder length " + std::to_string(n) + " > max_length " +
                                                std::to_string(model_.config().max_length));
  }
  const bool use_flags = model_.config().use_flags;
  nn::FlagGrid grid;
  if (use_flags) grid = flag_grid(flags, n);

  // A shorter prefix than before means a new search started.
  if (n < watermark_) cache_.clear();
  if (n > watermark_) {
    std::erase_if(cache_, [n](const auto& kv) { return kv.first.size() + 1 < n; });
    watermark_ = n;
  }

  Entry entry;
  size_t start = 0;
  for (size_t k = n - 1; k > 0; --k) {
    auto it = cache_.find(std::vector<int>(prefix.begin(), prefix.begin() + static_cast<long>(k)));
    if (it == cache_.end()) continue;
    if (use_flags && it->second.grid != grid.topRows(static_cast<Eigen::Index>(k))) continue;
    entry = it->second;
    start = k;
    break;
  }
  nn::Matrix logits;
  for (size_t j = start; j < n; ++j) {
    nn::FlagGrid row;
    if (use_flags) row = grid.row(static_cast<Eigen::Index>(j));
    logits = model_.decode_step(keys_, values_, entry.cache, prefix[j], use_flags ? &row : nullptr);
  }
  if (use_flags) entry.grid = grid;
  cache_[prefix] = std::move(entry);
  const nn::Matrix lp = nn::log_softmax_rows(logits);
  return std::vector<double>(lp.data(), lp.data() + lp.size());
}

std::string_view decoder_name(DecoderKind kind) {
  switch (kind) {
    case DecoderKind::kGreedy:
      return "greedy";
    case DecoderKind::kBeam:
      return "beam";
    case DecoderKind::kCbs:
      return "cbs";
  }
  return "greedy";
}

DecoderKind parse_decoder(std::string_view name) {
  if (name == "greedy") return DecoderKind::kGreedy;
  if (name == "beam") return DecoderKind::kBeam;
  if (name == "cbs") return DecoderKind::kCbs;
  throw Error(ErrorCode::kInvalidArgument, "unknown decoder " + std::string(name));
}

double Hypothesis::normalized_score(double exponent) const {
  const size_t len = tokens.size() + (finished ? 1 : 0);
  if (len == 0) return score;
  return score / std::pow(static_cast<double>(len), exponent);
}

DecodeResult greedy_decode(const StepScorer& scorer, const Vocabulary& vocab, FlagTracker flags,
                           const DecodeOptions& options) {
  Hypothesis h = root(std::move(flags));
  for (size_t step = 0; step < options.max_len && !h.finished; ++step) {
    const std::vector<double> lp = step_log_probs(scorer, h, vocab.size());
    // max_element keeps the first maximum: lowest id wins ties.
    const auto it = std::max_element(lp.begin(), lp.end());
    const int token = static_cast<int>(it - lp.begin());
    h = extend(h, token, h.score + *it, vocab);
  }
  DecodeResult out;
  out.best = h;
  if (h.finished) out.finished.push_back(h);
  return out;
}

DecodeResult beam_decode(const StepScorer& scorer, const Vocabulary& vocab, FlagTracker flags,
                         const DecodeOptions& options) {
  if (options.beam == 0) throw Error(ErrorCode::kInvalidArgument, "beam must be at least 1");
  std::vector<Hypothesis> alive = {root(std::move(flags))};
  DecodeResult out;
  for (size_t step = 0; step < options.max_len && !alive.empty(); ++step) {
    std::vector<Candidate> cands;
    for (size_t p = 0; p < alive.size(); ++p) {
      const std::vector<double> lp = step_log_probs(scorer, alive[p], vocab.size());
      for (size_t tok = 0; tok < lp.size(); ++tok) {
        if (lp[tok] == kNegInf) continue;
        Candidate c;
        c.parent = p;
        c.token = static_cast<int>(tok);
        c.score = alive[p].score + lp[tok];
        c.order = cands.size();
        cands.push_back(c);
      }
    }
    keep_top(cands, options.beam);
    std::vector<Hypothesis> next;
    for (const Candidate& c : cands) {
      Hypothesis h = extend(alive[c.parent], c.token, c.score, vocab);
      (h.finished ? out.finished : next).push_back(std::move(h));
    }
    alive = std::move(next);
  }
  out.best = out.finished.empty() ? pick_best(alive, options.length_exponent)
                                  : pick_best(out.finished, options.length_exponent);
  return out;
}

DecodeResult cbs_decode(const StepScorer& scorer, const Vocabulary& vocab, FlagTracker flags,
                        const std::vector<std::vector<int>>& constraints,
                        const DecodeOptions& options) {
  if (options.beam == 0) throw Error(ErrorCode::kInvalidArgument, "beam must be at least 1");
  size_t total = 0;
  for (const auto& c : constraints) {
    if (c.empty()) throw Error(ErrorCode::kEmptyInput, "empty constraint");
    for (int tok : c) {
      if (tok < 0 || static_cast<size_t>(tok) >= vocab.size() || is_blocked(tok) ||
          tok == Vocabulary::kEos) {
        throw Error(ErrorCode::kTokenOutOfVocab, "constraint token id " + std::to_string(tok));
      }
    }
    total += c.size();
  }

  Hypothesis start = root(std::move(flags));
  start.met.assign(constraints.size(), false);
  std::vector<Hypothesis> alive = {std::move(start)};
  DecodeResult out;

  for (size_t step = 0; step < options.max_len && !alive.empty(); ++step) {
    std::vector<std::vector<Candidate>> banks(total + 1);
    size_t order = 0;
    auto add = [&](Candidate c) {
      c.order = order++;
      banks[c.bank].push_back(c);
    };
    for (size_t p = 0; p < alive.size(); ++p) {
      const Hypothesis& h = alive[p];
      const std::vector<double> lp = step_log_probs(scorer, h, vocab.size());
      Candidate base;
      base.parent = p;
      base.bank = h.bank;
      base.active = h.active;
      base.progress = h.progress;

      if (h.active >= 0) {
        // A started constraint must be finished before anything else.
        const auto& c = constraints[static_cast<size_t>(h.active)];
        Candidate next = base;
        next.token = c[h.progress];
        next.score = h.score + lp[static_cast<size_t>(next.token)];
        next.bank = h.bank + 1;
        next.progress = h.progress + 1;
        if (next.progress == c.size()) {
          next.completes = h.active;
          next.active = -1;
          next.progress = 0;
        }
        add(next);
        continue;
      }

      for (size_t tok = 0; tok < lp.size(); ++tok) {
        if (lp[tok] == kNegInf) continue;
        if (static_cast<int>(tok) == Vocabulary::kEos && h.bank != total) continue;
        Candidate gen = base;
        gen.token = static_cast<int>(tok);
        gen.score = h.score + lp[tok];
        add(gen);
      }
      for (size_t ci = 0; ci < constraints.size(); ++ci) {
        if (h.met[ci]) continue;
        const auto& c = constraints[ci];
        Candidate s = base;
        s.token = c[0];
        s.score = h.score + lp[static_cast<size_t>(c[0])];
        s.bank = h.bank + 1;
        if (c.size() == 1) {
          s.completes = static_cast<int>(ci);
        } else {
          s.active = static_cast<int>(ci);
          s.progress = 1;
        }
        add(s);
      }
    }

    std::vector<Hypothesis> next;
    for (auto& bank : banks) {
      keep_top(bank, options.beam);
      for (const Candidate& c : bank) {
        Hypothesis h = extend(alive[c.parent], c.token, c.score, vocab);
        h.active = c.active;
        h.progress = c.progress;
        h.bank = c.bank;
        if (c.completes >= 0) h.met[static_cast<size_t>(c.completes)] = true;
        (h.finished ? out.finished : next).push_back(std::move(h));
      }
    }
    alive = std::move(next);
  }

  if (!out.finished.empty()) {
    out.best = pick_best(out.finished, options.length_exponent);
    return out;
  }
  size_t top = 0;
  for (const Hypothesis& h : alive) top = std::max(top, h.bank);
  std::vector<Hypothesis> best_bank;
  for (const Hypothesis& h : alive) {
    if (h.bank == top) best_bank.push_back(h);
  }
  out.best = pick_best(best_bank, options.length_exponent);
  out.unsatisfiable = total > 0;
  return out;
}

DecodeResult run_decoder(DecoderKind kind, const StepScorer& scorer, const Vocabulary& vocab,
                         FlagTracker flags, const std::vector<std::vector<int>>& constraints,
                         const DecodeOptions& options) {
  switch (kind) {
    case DecoderKind::kGreedy:
      return greedy_decode(scorer, vocab, std::move(flags), options);
    case DecoderKind::kBeam:
      return beam_decode(scorer, vocab, std::move(flags), options);
    case DecoderKind::kCbs:
      return cbs_decode(scorer, vocab, std::move(flags), constraints, options);
  }
  return greedy_decode(scorer, vocab, std::move(flags), options);
}

size_t lexical_matches(const std::vector<std::string>& output,
                       const std::vector<std::vector<std::string>>& constraints) {
  size_t n = 0;
  for (const auto& c : constraints) n += contains_sequence(output, c) ? 1 : 0;
  return n;
}

std::string decode_report_json(const DecodeResult& result, const Vocabulary& vocab,
                               const std::vector<std::vector<std::string>>& constraints,
                               const std::string& flag_trace_path) {
  const std::vector<std::string> tokens = vocab.decode(result.best.tokens);
  nlohmann::ordered_json j;
  j["output_tokens"] = tokens;
  j["score"] = result.best.score;
  j["constraints_satisfied"] = lexical_matches(tokens, constraints);
  j["flag_trace_path"] = flag_trace_path.empty() ? nlohmann::ordered_json(nullptr)
                                                 : nlohmann::ordered_json(flag_trace_path);
  j["finished"] = result.best.finished;
  j["unsatisfiable"] = result.unsatisfiable;
  return j.dump();
}

}  // namespace smf
