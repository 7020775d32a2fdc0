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

#include "smf/flags.h"

#include <algorithm>
#include <sstream>

#include "json.hpp"
#include "smf/error.h"

namespace smf {

std::string_view mode_name(SatisfactionMode mode) {
  switch (mode) {
    case SatisfactionMode::kSemantic: return "semantic";
    case SatisfactionMode::kLexical: return "lexical";
    case SatisfactionMode::kOff: return "off";
  }
  return "unknown";
}

SatisfactionMode parse_mode(std::string_view name) {
  if (name == "semantic") return SatisfactionMode::kSemantic;
  if (name == "lexical") return SatisfactionMode::kLexical;
  if (name == "off") return SatisfactionMode::kOff;
  throw Error(ErrorCode::kInvalidArgument, "unknown satisfaction mode: " + std::string(name));
}

std::string_view style_trigger_name(StyleTrigger trigger) {
  return trigger == StyleTrigger::kFirstPerson ? "first_person" : "second_person";
}

StyleTrigger parse_style_trigger(std::string_view name) {
  if (name == "first_person") return StyleTrigger::kFirstPerson;
  if (name == "second_person") return StyleTrigger::kSecondPerson;
  throw Error(ErrorCode::kInvalidArgument, "unknown style trigger: " + std::string(name));
}

void SatisfierConfig::validate() const {
  if (!(threshold_a >= 0.0 && threshold_a <= 1.0) || !(threshold_b >= 0.0 && threshold_b <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "thresholds must lie in [0, 1]");
  }
}

const TokenSet& SatisfierConfig::trigger_lexicon() const {
  return style_trigger == StyleTrigger::kFirstPerson ? first_person : second_person;
}

std::span<const uint8_t> MentionFlagMatrix::column(size_t t) const {
  if (t >= columns_) throw Error(ErrorCode::kIndexOutOfRange, "flag column " + std::to_string(t));
  return std::span<const uint8_t>(history_).subspan(t * input_length_, input_length_);
}

std::optional<size_t> MentionFlagMatrix::constraint_at(size_t position) const {
  if (owner_.at(position) < 0) return std::nullopt;
  return static_cast<size_t>(owner_[position]);
}

bool MentionFlagMatrix::is_style_position(size_t position) const { return style_.at(position); }

void MentionFlagMatrix::push_column() {
  history_.reserve(history_.size() + input_length_);
  const size_t start = (columns_ - 1) * input_length_;
  for (size_t i = 0; i < input_length_; ++i) history_.push_back(history_[start + i]);
  ++columns_;
}

void MentionFlagMatrix::set_constraint_state(size_t constraint_id, uint8_t value) {
  constraint_states_.at(constraint_id) = value;
  uint8_t* col = history_.data() + (columns_ - 1) * input_length_;
  for (size_t pos : owned_[constraint_id]) col[pos] = value;
}

void MentionFlagMatrix::set_style_state(uint8_t value) {
  uint8_t* col = history_.data() + (columns_ - 1) * input_length_;
  for (size_t pos : style_positions_) col[pos] = value;
}

MentionFlagMatrix init_flags(std::span<const std::string> x_tokens,
                             const std::vector<std::vector<size_t>>& constraint_rows,
                             const SatisfierConfig& config) {
  MentionFlagMatrix m;
  const size_t n = x_tokens.size();
  m.input_length_ = n;
  m.columns_ = 1;
  m.history_.assign(n, kFlagNone);
  m.owner_.assign(n, -1);
  m.style_.assign(n, false);
  m.owned_.resize(constraint_rows.size());
  m.constraint_states_.assign(constraint_rows.size(), kFlagUnsatisfied);

  for (size_t c = 0; c < constraint_rows.size(); ++c) {
    for (size_t pos : constraint_rows[c]) {
      if (pos >= n) {
        throw Error(ErrorCode::kIndexOutOfRange,
                    "constraint position " + std::to_string(pos) + " >= input length " + std::to_string(n));
      }
      if (m.owner_[pos] >= 0) continue;
      m.owner_[pos] = static_cast<int>(c);
      m.owned_[c].push_back(pos);
      m.history_[pos] = kFlagUnsatisfied;
    }
  }
  if (config.style_enabled) {
    for (size_t i = 0; i < n; ++i) {
      if (m.owner_[i] < 0 && config.first_person.contains(to_lower(x_tokens[i]))) {
        m.style_[i] = true;
        m.style_positions_.push_back(i);
        m.history_[i] = kFlagSatisfied;
      }
    }
  }
  return m;
}

std::vector<Span> candidate_spans(size_t t, size_t clen) {
  std::vector<Span> spans;
  if (t == 0 || clen == 0) return spans;
  const size_t first = t > clen ? t - clen : 0;
  for (size_t k = first; k < t; ++k) spans.push_back({k, t});
  return spans;
}

bool update_semantic(MentionFlagMatrix& m, size_t constraint_id, double sim_now,
                     double sim_prev, const SatisfierConfig& config) {
  if (m.constraint_state(constraint_id) != kFlagUnsatisfied) return false;
  if (sim_now > config.threshold_a && (sim_now - sim_prev) > config.threshold_b) {
    m.set_constraint_state(constraint_id, kFlagSatisfied);
    return true;
  }
  return false;
}

bool update_lexical(MentionFlagMatrix& m, size_t constraint_id,
                    std::span<const std::string> constraint_tokens,
                    std::span<const std::string> decoded_prefix) {
  if (m.constraint_state(constraint_id) != kFlagUnsatisfied) return false;
  if (!constraint_tokens.empty() && contains_sequence(decoded_prefix, constraint_tokens)) {
    m.set_constraint_state(constraint_id, kFlagSatisfied);
    return true;
  }
  return false;
}

bool update_style(MentionFlagMatrix& m, std::string_view newest_output_token,
                  const SatisfierConfig& config) {
  if (!config.style_enabled || m.style_positions().empty()) return false;
  if (!config.trigger_lexicon().contains(to_lower(newest_output_token))) return false;
  if (m.state(m.style_positions().front()) != kFlagSatisfied) return false;
  m.set_style_state(kFlagUnsatisfied);
  return true;
}

EmbeddingSimilarityScorer::EmbeddingSimilarityScorer(std::shared_ptr<const SentenceEmbedder> embedder)
    : embedder_(std::move(embedder)) {
  if (!embedder_) throw Error(ErrorCode::kInvalidArgument, "null embedder");
}

double EmbeddingSimilarityScorer::score(size_t, std::span<const std::string> constraint_tokens,
                                        std::span<const std::string> decoded_prefix) const {
  const Embedding target = embedder_->embed(constraint_tokens);
  double best = -1.0;
  for (const Span& s : candidate_spans(decoded_prefix.size(), constraint_tokens.size())) {
    const Embedding window = embedder_->embed(decoded_prefix.subspan(s.start, s.size()));
    best = std::max(best, cosine(window, target));
  }
  return best;
}

FlagTracker::FlagTracker(std::vector<std::string> x_tokens,
                         std::vector<std::vector<std::string>> constraint_tokens,
                         const std::vector<std::vector<size_t>>& constraint_rows,
                         SatisfierConfig config, std::shared_ptr<const SimilarityScorer> scorer)
    : x_tokens_(std::move(x_tokens)),
      constraints_(std::move(constraint_tokens)),
      config_(std::make_shared<const SatisfierConfig>(std::move(config))),
      scorer_(std::move(scorer)) {
  config_->validate();
  if (constraints_.size() != constraint_rows.size()) {
    throw Error(ErrorCode::kShapeMismatch, "constraint tokens and rows differ in count");
  }
  if (config_->mode == SatisfactionMode::kOff) {
    // Flags are disabled entirely: constraints are tracked but never shown.
    matrix_ = init_flags(x_tokens_, std::vector<std::vector<size_t>>(constraint_rows.size()), *config_);
  } else {
    matrix_ = init_flags(x_tokens_, constraint_rows, *config_);
  }
  if (config_->mode == SatisfactionMode::kSemantic && !scorer_ && !constraints_.empty()) {
    scorer_ = std::make_shared<EmbeddingSimilarityScorer>(std::make_shared<HashedNgramEmbedder>());
  }
  sims_.assign(constraints_.size(), std::vector<double>{0.0});
}

FlagTracker FlagTracker::for_constraints(std::vector<std::string> x_tokens,
                                         const std::vector<Constraint>& constraints,
                                         const InputLayout& layout, SatisfierConfig config,
                                         std::shared_ptr<const SimilarityScorer> scorer) {
  std::vector<std::vector<std::string>> tokens;
  for (const Constraint& c : constraints) tokens.push_back(c.tokens);
  return FlagTracker(std::move(x_tokens), std::move(tokens), constraint_token_rows(constraints, layout),
                     std::move(config), std::move(scorer));
}

void FlagTracker::advance(const std::string& token) {
  output_.push_back(token);
  matrix_.push_column();
  const SatisfierConfig& config = *config_;
  switch (config.mode) {
    case SatisfactionMode::kSemantic:
      for (size_t c = 0; c < constraints_.size(); ++c) {
        if (matrix_.constraint_state(c) != kFlagUnsatisfied) {
          sims_[c].push_back(sims_[c].back());
          continue;
        }
        const double now = scorer_->score(c, constraints_[c], output_);
        update_semantic(matrix_, c, now, sims_[c].back(), config);
        sims_[c].push_back(now);
      }
      break;
    case SatisfactionMode::kLexical:
      for (size_t c = 0; c < constraints_.size(); ++c) {
        update_lexical(matrix_, c, constraints_[c], output_);
      }
      break;
    case SatisfactionMode::kOff:
      break;
  }
  update_style(matrix_, token, config);
}

size_t FlagTracker::satisfied_count() const {
  size_t n = 0;
  for (size_t c = 0; c < matrix_.num_constraints(); ++c) {
    if (matrix_.constraint_state(c) == kFlagSatisfied) ++n;
  }
  return n;
}

std::string trace_tsv(const MentionFlagMatrix& m, std::span<const std::string> x_tokens,
                      std::span<const std::string> output_tokens, std::string_view start_label) {
  if (x_tokens.size() != m.input_length() || output_tokens.size() + 1 != m.num_columns()) {
    throw Error(ErrorCode::kShapeMismatch, "trace labels do not match the flag matrix");
  }
  std::ostringstream out;
  out << start_label;
  for (const std::string& tok : output_tokens) out << '\t' << tok;
  out << '\n';
  for (size_t i = 0; i < x_tokens.size(); ++i) {
    out << x_tokens[i];
    for (size_t t = 0; t < m.num_columns(); ++t) out << '\t' << static_cast<int>(m.column(t)[i]);
    out << '\n';
  }
  return out.str();
}

std::string trace_json(const FlagTracker& tracker, std::string_view start_label) {
  const MentionFlagMatrix& m = tracker.matrix();
  nlohmann::json doc;
  doc["input_tokens"] = tracker.x_tokens();
  std::vector<std::string> columns{std::string(start_label)};
  columns.insert(columns.end(), tracker.output_tokens().begin(), tracker.output_tokens().end());
  doc["output_tokens"] = columns;
  nlohmann::json rows = nlohmann::json::array();
  for (size_t i = 0; i < m.input_length(); ++i) {
    std::vector<int> row;
    for (size_t t = 0; t < m.num_columns(); ++t) row.push_back(m.column(t)[i]);
    rows.push_back(row);
  }
  doc["matrix"] = rows;
  doc["mode"] = mode_name(tracker.config().mode);
  if (tracker.config().mode == SatisfactionMode::kSemantic) {
    nlohmann::json sims = nlohmann::json::array();
    for (size_t c = 0; c < tracker.constraint_tokens().size(); ++c) sims.push_back(tracker.sim_history(c));
    doc["sim"] = sims;
  }
  return doc.dump();
}

}  // namespace smf
