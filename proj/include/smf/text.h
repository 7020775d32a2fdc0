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

#ifndef SMF_TEXT_H_
#define SMF_TEXT_H_

#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace smf {

using TokenSet = std::unordered_set<std::string>;

// Whitespace tokenization with ASCII lowercasing. Leading and trailing
// punctuation characters are split into tokens of their own; internal
// apostrophes and hyphens stay attached ("doesn't", "27-inch").
std::vector<std::string> tokenize(std::string_view text);

std::string join(std::span<const std::string> tokens, std::string_view sep = " ");

std::string to_lower(std::string_view text);

// True when `needle` occurs as a contiguous run inside `haystack`.
bool contains_sequence(std::span<const std::string> haystack,
                       std::span<const std::string> needle);

const TokenSet& first_person_lexicon();
const TokenSet& second_person_lexicon();

}  // namespace smf

#endif  // SMF_TEXT_H_
