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

#include "smf/treebank.h"

#include <algorithm>
#include <cctype>
#include <set>
#include <tuple>

#include "smf/error.h"
#include "smf/text.h"

namespace smf {
namespace {

std::vector<std::string> lex(std::string_view text) {
  std::vector<std::string> items;
  size_t i = 0;
  while (i < text.size()) {
    const char c = text[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
    } else if (c == '(' || c == ')') {
      items.emplace_back(1, c);
      ++i;
    } else {
      size_t j = i;
      while (j < text.size() && text[j] != '(' && text[j] != ')' &&
             !std::isspace(static_cast<unsigned char>(text[j]))) {
        ++j;
      }
      items.emplace_back(text.substr(i, j - i));
      i = j;
    }
  }
  return items;
}

class BracketParser {
 public:
  explicit BracketParser(std::vector<std::string> items) : items_(std::move(items)) {}

  ParseTree parse_root() {
    if (items_.empty()) throw Error(ErrorCode::kInvalidArgument, "empty tree string");
    if (items_[0] == ")") throw Error(ErrorCode::kUnbalancedParens, "unexpected ')'");
    if (items_[0] != "(") {
      throw Error(ErrorCode::kInvalidArgument, "tree must start with '(': " + items_[0]);
    }
    ParseTree root = parse_node();
    if (pos_ != items_.size()) {
      if (items_[pos_] == ")") {
        throw Error(ErrorCode::kUnbalancedParens, "extra ')' after the root node");
      }
      throw Error(ErrorCode::kInvalidArgument, "trailing content after the root node");
    }
    return root;
  }

 private:
  bool at_end() const { return pos_ >= items_.size(); }

  ParseTree parse_node() {
    ++pos_;  // '('
    if (at_end()) throw Error(ErrorCode::kUnbalancedParens, "input ends inside a node");
    ParseTree node;
    node.span.start = leaf_count_;
    if (items_[pos_] == ")") throw Error(ErrorCode::kEmptyNode, "'()' group");
    if (items_[pos_] != "(") node.label = items_[pos_++];

    while (true) {
      if (at_end()) throw Error(ErrorCode::kUnbalancedParens, "missing ')' for " + node.label);
      const std::string& item = items_[pos_];
      if (item == ")") {
        ++pos_;
        break;
      }
      if (item == "(") {
        if (node.leaf_token) {
          throw Error(ErrorCode::kInvalidArgument, "node " + node.label + " mixes a token and children");
        }
        node.children.push_back(parse_node());
      } else {
        if (node.leaf_token || !node.children.empty()) {
          throw Error(ErrorCode::kInvalidArgument,
                      "node " + node.label + " has more than one token or mixes tokens and children");
        }
        node.leaf_token = item;
        ++pos_;
        ++leaf_count_;
      }
    }
    if (!node.leaf_token && node.children.empty()) {
      throw Error(ErrorCode::kTagWithoutContent, "(" + node.label + ") has no token or children");
    }
    node.span.end = leaf_count_;
    return node;
  }

  std::vector<std::string> items_;
  size_t pos_ = 0;
  size_t leaf_count_ = 0;
};

void serialize_into(const ParseTree& tree, std::string& out) {
  out += '(';
  out += tree.label;
  bool need_space = !tree.label.empty();
  if (tree.leaf_token) {
    if (need_space) out += ' ';
    out += *tree.leaf_token;
  }
  for (const ParseTree& child : tree.children) {
    if (need_space) out += ' ';
    serialize_into(child, out);
    need_space = true;
  }
  out += ')';
}

void collect_leaves(const ParseTree& tree, std::vector<std::string>& out) {
  if (tree.leaf_token) out.push_back(*tree.leaf_token);
  for (const ParseTree& child : tree.children) collect_leaves(child, out);
}

bool is_pronoun_tag(std::string_view tag) {
  return tag == "PRP" || tag == "PRP$" || tag == "WP" || tag == "WP$";
}

// An NP whose whole yield is one pronoun token: follow the unary chain down
// to the preterminal and test its tag.
bool is_single_pronoun(const ParseTree& np) {
  if (np.span.size() != 1) return false;
  const ParseTree* node = &np;
  while (!node->is_leaf()) {
    if (node->children.size() != 1) return false;
    node = &node->children.front();
  }
  return is_pronoun_tag(base_label(node->label));
}

bool is_phrase_parent(std::string_view label) {
  return label == "VP" || label == "PP" || label == "ADVP" || label == "ADJP";
}

struct Emission {
  Span span;
  std::string label;
};

void visit_nps(const ParseTree& node, const ParseTree* parent,
               const ExtractionOptions& options, std::vector<Emission>& out) {
  if (base_label(node.label) == "NP" && !is_single_pronoun(node)) {
    const std::string parent_label = parent ? base_label(parent->label) : std::string();
    if (parent && is_phrase_parent(parent_label)) {
      out.push_back({parent->span, parent_label});
    } else if (parent && parent_label == "NP") {
      out.push_back({node.span, "NP"});
    } else if (options.include_toplevel_np) {
      out.push_back({node.span, "NP"});
    }
  }
  for (const ParseTree& child : node.children) visit_nps(child, &node, options, out);
}

std::vector<Constraint> extract_side(const ParseTree& tree, Side side,
                                     const ExtractionOptions& options) {
  std::vector<Emission> emissions;
  visit_nps(tree, nullptr, options, emissions);

  const std::vector<std::string> tokens = tree.leaves();
  std::vector<Constraint> out;
  for (const Emission& e : emissions) {
    Constraint c;
    c.tokens.assign(tokens.begin() + static_cast<std::ptrdiff_t>(e.span.start),
                    tokens.begin() + static_cast<std::ptrdiff_t>(e.span.end));
    c.span = e.span;
    c.label = e.label;
    c.source = side;
    c.priority = constraint_priority(e.label);
    out.push_back(std::move(c));
  }
  std::stable_sort(out.begin(), out.end(), [](const Constraint& a, const Constraint& b) {
    return std::tie(a.priority, a.span) < std::tie(b.priority, b.span);
  });
  std::set<Span> seen;
  std::erase_if(out, [&seen](const Constraint& c) { return !seen.insert(c.span).second; });
  return out;
}

}  // namespace

std::vector<std::string> ParseTree::leaves() const {
  std::vector<std::string> out;
  collect_leaves(*this, out);
  return out;
}

ParseTree parse_bracketed(std::string_view text) {
  return BracketParser(lex(text)).parse_root();
}

std::string serialize(const ParseTree& tree) {
  std::string out;
  serialize_into(tree, out);
  return out;
}

std::string normalize_bracketed(std::string_view text) {
  const std::vector<std::string> items = lex(text);
  std::string out;
  for (size_t i = 0; i < items.size(); ++i) {
    if (i > 0 && items[i - 1] != "(" && items[i] != ")") out += ' ';
    out += items[i];
  }
  return out;
}

std::string base_label(std::string_view label) {
  if (label.empty() || label.front() == '-') return std::string(label);
  const size_t cut = label.find_first_of("-=");
  return std::string(label.substr(0, cut));
}

std::string_view side_name(Side side) {
  return side == Side::kQuestion ? "question" : "answer";
}

Side parse_side(std::string_view name) {
  if (name == "question") return Side::kQuestion;
  if (name == "answer") return Side::kAnswer;
  throw Error(ErrorCode::kInvalidArgument, "unknown constraint source: " + std::string(name));
}

std::string Constraint::text() const { return join(tokens); }

int constraint_priority(std::string_view label) {
  if (label == "NP") return 0;
  if (label == "VP") return 1;
  return 2;
}

std::vector<Constraint> extract_constraints(const ParseTree& question,
                                            const ParseTree* answer,
                                            const ExtractionOptions& options) {
  std::vector<Constraint> out = extract_side(question, Side::kQuestion, options);
  if (answer) {
    std::vector<Constraint> from_answer = extract_side(*answer, Side::kAnswer, options);
    out.insert(out.end(), std::make_move_iterator(from_answer.begin()),
               std::make_move_iterator(from_answer.end()));
  }
  return out;
}

InputLayout InputLayout::from_lengths(size_t question, size_t answer, size_t context) {
  InputLayout layout;
  layout.question_offset = 0;
  layout.question_length = question;
  layout.answer_offset = question + 1;
  layout.answer_length = answer;
  layout.context_offset = question + 1 + answer + 1;
  layout.context_length = context;
  return layout;
}

std::vector<std::vector<size_t>> constraint_token_rows(
    const std::vector<Constraint>& constraints, const InputLayout& layout) {
  std::vector<std::vector<size_t>> rows;
  rows.reserve(constraints.size());
  for (const Constraint& c : constraints) {
    const bool question = c.source == Side::kQuestion;
    const size_t offset = question ? layout.question_offset : layout.answer_offset;
    const size_t length = question ? layout.question_length : layout.answer_length;
    if (c.span.empty() || c.span.end > length) {
      throw Error(ErrorCode::kOffsetOutOfRange,
                  "constraint '" + c.text() + "' span exceeds its " +
                      std::string(side_name(c.source)) + " length " + std::to_string(length));
    }
    std::vector<size_t> row;
    for (size_t i = c.span.start; i < c.span.end; ++i) row.push_back(offset + i);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace smf
