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

#ifndef SMF_FLAGS_H_
#define SMF_FLAGS_H_

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "smf/similarity.h"
#include "smf/text.h"
#include "smf/treebank.h"

namespace smf {

// Flag alphabet of the mention-flag matrix.
enum FlagValue : uint8_t {
  kFlagNone = 0,         // not part of any constraint
  kFlagUnsatisfied = 1,  // constraint not yet mentioned
  kFlagSatisfied = 2,    // constraint mentioned
};

enum class SatisfactionMode { kSemantic, kLexical, kOff };
enum class StyleTrigger { kFirstPerson, kSecondPerson };

std::string_view mode_name(SatisfactionMode mode);
SatisfactionMode parse_mode(std::string_view name);
std::string_view style_trigger_name(StyleTrigger trigger);
StyleTrigger parse_style_trigger(std::string_view name);

struct SatisfierConfig {
  double threshold_a = 0.8;  // absolute similarity floor
  double threshold_b = 0.3;  // minimum step-to-step similarity increase
  SatisfactionMode mode = SatisfactionMode::kSemantic;
  bool style_enabled = false;
  StyleTrigger style_trigger = StyleTrigger::kFirstPerson;
  TokenSet first_person = first_person_lexicon();
  TokenSet second_person = second_person_lexicon();

  // Throws kInvalidArgument when a threshold lies outside [0, 1].
  void validate() const;
  const TokenSet& trigger_lexicon() const;
};

// Flag states of every input position, one column per decoding step.
// Column 0 is the initialization; column t is the state after t output
// tokens. Each input position is owned by at most one constraint (the first
// constraint in extraction order that covers it); a position's cell mirrors
// its owner's state.
class MentionFlagMatrix {
 public:
  MentionFlagMatrix() = default;

  size_t input_length() const { return input_length_; }
  size_t num_columns() const { return columns_; }
  size_t num_constraints() const { return constraint_states_.size(); }

  std::span<const uint8_t> column(size_t t) const;
  std::span<const uint8_t> current() const { return column(num_columns() - 1); }
  uint8_t state(size_t position) const { return current()[position]; }

  // Owner constraint of an input position, if any.
  std::optional<size_t> constraint_at(size_t position) const;
  bool is_style_position(size_t position) const;
  const std::vector<size_t>& style_positions() const { return style_positions_; }
  const std::vector<size_t>& owned_positions(size_t constraint_id) const {
    return owned_[constraint_id];
  }

  // Satisfaction state of a constraint (1 or 2), tracked even when the
  // constraint owns no position.
  uint8_t constraint_state(size_t constraint_id) const { return constraint_states_[constraint_id]; }

  // Starts a new column equal to the current one.
  void push_column();
  void set_constraint_state(size_t constraint_id, uint8_t value);
  void set_style_state(uint8_t value);

 private:
  friend MentionFlagMatrix init_flags(std::span<const std::string>,
                                      const std::vector<std::vector<size_t>>&,
                                      const SatisfierConfig&);

  size_t input_length_ = 0;
  size_t columns_ = 0;
  std::vector<uint8_t> history_;
  std::vector<int> owner_;
  std::vector<bool> style_;
  std::vector<size_t> style_positions_;
  std::vector<std::vector<size_t>> owned_;
  std::vector<uint8_t> constraint_states_;
};

// Constraint positions -> 1; with style enabled, unowned positions holding a
// first-person token -> 2; everything else -> 0. Throws kIndexOutOfRange.
MentionFlagMatrix init_flags(std::span<const std::string> x_tokens,
                             const std::vector<std::vector<size_t>>& constraint_rows,
                             const SatisfierConfig& config);

// Every suffix [k, t) of the decoded prefix with max(0, t - clen) <= k < t.
// Ordered from the longest window to the unit window.
std::vector<Span> candidate_spans(size_t t, size_t clen);

// Flips an unsatisfied constraint to 2 when sim_now > a and
// sim_now - sim_prev > b. Returns true on a flip.
bool update_semantic(MentionFlagMatrix& m, size_t constraint_id, double sim_now,
                     double sim_prev, const SatisfierConfig& config);

// Flips to 2 when the constraint occurs verbatim in the decoded prefix.
bool update_lexical(MentionFlagMatrix& m, size_t constraint_id,
                    std::span<const std::string> constraint_tokens,
                    std::span<const std::string> decoded_prefix);

// When the newest token is in the trigger lexicon, style positions still at
// 2 drop to 1 permanently.
bool update_style(MentionFlagMatrix& m, std::string_view newest_output_token,
                  const SatisfierConfig& config);

// Similarity of a constraint against the decoded prefix at the current step.
class SimilarityScorer {
 public:
  virtual ~SimilarityScorer() = default;
  virtual double score(size_t constraint_id, std::span<const std::string> constraint_tokens,
                       std::span<const std::string> decoded_prefix) const = 0;
};

// Maximum cosine between the constraint and every candidate window ending at
// the newest token.
class EmbeddingSimilarityScorer final : public SimilarityScorer {
 public:
  explicit EmbeddingSimilarityScorer(std::shared_ptr<const SentenceEmbedder> embedder);

  double score(size_t constraint_id, std::span<const std::string> constraint_tokens,
               std::span<const std::string> decoded_prefix) const override;

 private:
  std::shared_ptr<const SentenceEmbedder> embedder_;
};

class TableSimilarityScorer final : public SimilarityScorer {
 public:
  explicit TableSimilarityScorer(InjectedSimilarityTable table) : table_(std::move(table)) {}

  double score(size_t constraint_id, std::span<const std::string>,
               std::span<const std::string> decoded_prefix) const override {
    return table_.sim_lookup(decoded_prefix.size(), constraint_id);
  }

 private:
  InjectedSimilarityTable table_;
};

// Drives a MentionFlagMatrix through a decode: one advance() per emitted
// token. Copyable, so beam hypotheses carry their own tracker.
class FlagTracker {
 public:
  FlagTracker() = default;
  FlagTracker(std::vector<std::string> x_tokens,
              std::vector<std::vector<std::string>> constraint_tokens,
              const std::vector<std::vector<size_t>>& constraint_rows,
              SatisfierConfig config,
              std::shared_ptr<const SimilarityScorer> scorer = nullptr);

  // Convenience: rows from constraints and layout.
  static FlagTracker for_constraints(std::vector<std::string> x_tokens,
                                     const std::vector<Constraint>& constraints,
                                     const InputLayout& layout, SatisfierConfig config,
                                     std::shared_ptr<const SimilarityScorer> scorer = nullptr);

  void advance(const std::string& token);

  const MentionFlagMatrix& matrix() const { return matrix_; }
  const std::vector<std::string>& x_tokens() const { return x_tokens_; }
  const std::vector<std::string>& output_tokens() const { return output_; }
  const std::vector<std::vector<std::string>>& constraint_tokens() const { return constraints_; }
  const SatisfierConfig& config() const { return *config_; }
  // Similarity history of a constraint (semantic mode), index t = step t.
  const std::vector<double>& sim_history(size_t constraint_id) const { return sims_[constraint_id]; }
  size_t satisfied_count() const;

 private:
  std::vector<std::string> x_tokens_;
  std::vector<std::vector<std::string>> constraints_;
  std::shared_ptr<const SatisfierConfig> config_;
  std::shared_ptr<const SimilarityScorer> scorer_;
  MentionFlagMatrix matrix_;
  std::vector<std::string> output_;
  std::vector<std::vector<double>> sims_;
};

// Table-style dumps: header row of output tokens (column 0 labelled
// start_label), one row per input token, cells 0/1/2.
std::string trace_tsv(const MentionFlagMatrix& m, std::span<const std::string> x_tokens,
                      std::span<const std::string> output_tokens,
                      std::string_view start_label = "<sep>");
std::string trace_json(const FlagTracker& tracker, std::string_view start_label = "<sep>");

}  // namespace smf

#endif  // SMF_FLAGS_H_
