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

#ifndef SMF_TREEBANK_H_
#define SMF_TREEBANK_H_

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace smf {

// Half-open token interval [start, end).
struct Span {
  size_t start = 0;
  size_t end = 0;

  size_t size() const { return end - start; }
  bool empty() const { return end <= start; }
  friend bool operator==(const Span&, const Span&) = default;
  friend auto operator<=>(const Span&, const Span&) = default;
};

// A labeled constituency tree. Preterminals carry the surface token and have
// no children; every other node has at least one child.
struct ParseTree {
  std::string label;
  std::vector<ParseTree> children;
  std::optional<std::string> leaf_token;
  Span span;

  bool is_leaf() const { return leaf_token.has_value(); }
  std::vector<std::string> leaves() const;
};

// Parses a Penn-Treebank style S-expression such as
// "(NP (DT this) (NN monitor))". Throws smf::Error with kUnbalancedParens,
// kEmptyNode, kTagWithoutContent, or kInvalidArgument for other malformed
// shapes (mixed token/children content, bare atoms at top level).
ParseTree parse_bracketed(std::string_view text);

// Canonical bracketed form: one space between items, none after "(" or
// before ")". serialize(parse_bracketed(s)) == normalize_bracketed(s).
std::string serialize(const ParseTree& tree);
std::string normalize_bracketed(std::string_view text);

// Label with PTB function tags and indices stripped: "NP-SBJ-1" -> "NP".
std::string base_label(std::string_view label);

enum class Side { kQuestion, kAnswer };

std::string_view side_name(Side side);
Side parse_side(std::string_view name);

struct Constraint {
  std::vector<std::string> tokens;
  Span span;          // indices into the source sentence
  std::string label;  // NP, VP, PP, ADVP or ADJP
  Side source = Side::kQuestion;
  int priority = 0;   // NP=0, VP=1, other=2

  std::string text() const;
  friend bool operator==(const Constraint&, const Constraint&) = default;
};

int constraint_priority(std::string_view label);

struct ExtractionOptions {
  // Also emit NPs whose parent triggers neither rule (e.g. subjects under
  // S/SQ). Off reproduces the literal extraction procedure.
  bool include_toplevel_np = false;
};

// NP-anchored constraint extraction:
//   1. collect every NP node;
//   2. drop NPs whose yield is a single pronoun (PRP, PRP$, WP, WP$);
//   3. if the NP's parent is VP/PP/ADVP/ADJP, emit the parent's yield with
//      the parent's label; else if the parent is NP, emit the NP's own yield.
// Results are deduplicated by span within a side and ordered question first,
// then by priority, then by span.
std::vector<Constraint> extract_constraints(const ParseTree& question,
                                            const ParseTree* answer,
                                            const ExtractionOptions& options = {});

// Offsets of each source side inside x = [q; <sep>; a; <sep>; c].
struct InputLayout {
  size_t question_offset = 0;
  size_t question_length = 0;
  size_t answer_offset = 0;
  size_t answer_length = 0;
  size_t context_offset = 0;
  size_t context_length = 0;

  static InputLayout from_lengths(size_t question, size_t answer, size_t context);
  size_t total_length() const { return context_offset + context_length; }
};

// For every constraint, the positions of x its tokens occupy. Overlapping
// constraints keep their own (possibly intersecting) sets.
std::vector<std::vector<size_t>> constraint_token_rows(
    const std::vector<Constraint>& constraints, const InputLayout& layout);

}  // namespace smf

#endif  // SMF_TREEBANK_H_
