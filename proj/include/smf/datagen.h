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

#ifndef SMF_DATAGEN_H_
#define SMF_DATAGEN_H_

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "smf/treebank.h"

namespace smf {

enum class Category { kExplanation, kComplement, kCondition, kAlternative };
enum class Polarity { kYes, kNo };

std::string_view category_name(Category c);
Category parse_category(std::string_view name);
std::string_view polarity_name(Polarity p);
Polarity parse_polarity(std::string_view name);

inline constexpr std::array<Category, 4> kAllCategories = {
    Category::kExplanation, Category::kComplement, Category::kCondition, Category::kAlternative};

struct PQAInstance {
  std::string id;
  std::string question;
  std::string answer;
  std::string context;         // product title
  std::string context_phrase;  // distinguishing noun phrase the target must carry
  Category category = Category::kExplanation;
  Polarity polarity = Polarity::kYes;
  std::string target;
  std::string question_parse;  // bracketed
  std::string answer_parse;    // bracketed, may be empty
  std::vector<Constraint> constraints;
  std::string domain;
  std::string split;
};

// Category proportions in enum order; must be non-negative and sum to 1.
using CategoryMix = std::array<double, 4>;
inline constexpr CategoryMix kUniformMix = {0.25, 0.25, 0.25, 0.25};

struct GeneratorConfig {
  uint64_t seed = 2023;
  size_t n = 1500;
  CategoryMix mix = kUniformMix;
  // Split sizes for n == 1500; other n are split in the same proportions.
  size_t train = 1000;
  size_t dev = 100;
  size_t test = 400;
  // Fraction of answers rephrased into first person.
  double first_person_rate = 0.2;
};

const std::vector<std::string>& synthetic_domains();

// Closed list of function words a target may use beyond its input fields.
const std::vector<std::string>& function_words();

// Deterministic synthetic corpus. Category counts follow the mix exactly up
// to largest-remainder rounding; order, products and polarity are seeded.
// Throws kInvalidMix (bad mix or n == 0).
std::vector<PQAInstance> generate(const GeneratorConfig& config);

// Runs constraint extraction on the instance's gold parses.
std::vector<Constraint> gold_constraints(const PQAInstance& instance,
                                         const ExtractionOptions& options = {});

// With probability `rate`, appends a first-person usage sentence to the
// answer (and its second-person counterpart to the target). Draws from
// `seed` and the instance id, so the result does not depend on call order.
PQAInstance first_person_variants(const PQAInstance& instance, double rate, uint64_t seed);

// Instances whose domain equals `domain` go to test, the rest to train.
void leave_one_domain_out(std::vector<PQAInstance>& instances, std::string_view domain);

// Corpus JSONL, one instance per line.
std::string to_jsonl_line(const PQAInstance& instance);
PQAInstance from_jsonl_line(std::string_view line);
void write_jsonl(const std::string& path, const std::vector<PQAInstance>& instances);
std::vector<PQAInstance> read_jsonl(const std::string& path);

// Human-readable text from tokens: no space before , . ? ! ; :
std::string detokenize(const std::vector<std::string>& tokens);

}  // namespace smf

#endif  // SMF_DATAGEN_H_
