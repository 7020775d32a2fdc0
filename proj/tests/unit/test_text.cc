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


#include <string>
#include <vector>

#include "doctest.h"
#include "smf/text.h"

using Tokens = std::vector<std::string>;

TEST_SUITE("text") {

TEST_CASE("tokenize splits edge punctuation and lowercases") {
  CHECK(smf::tokenize("Does this Monitor have a camera?") ==
        Tokens{"does", "this", "monitor", "have", "a", "camera", "?"});
  CHECK(smf::tokenize("No, it doesn't.") == Tokens{"no", ",", "it", "doesn't", "."});
  CHECK(smf::tokenize("  the 27-inch  (built-in) ") ==
        Tokens{"the", "27-inch", "(", "built-in", ")"});
  CHECK(smf::tokenize("").empty());
  CHECK(smf::tokenize(" \t\n").empty());
}

TEST_CASE("join and lower") {
  CHECK(smf::join(Tokens{"a", "b", "c"}) == "a b c");
  CHECK(smf::join(Tokens{"a", "b"}, "|") == "a|b");
  CHECK(smf::join(Tokens{}) == "");
  CHECK(smf::to_lower("We've GOT It") == "we've got it");
}

TEST_CASE("contiguous containment") {
  const Tokens hay{"it", "has", "a", "camera"};
  CHECK(smf::contains_sequence(hay, Tokens{"a", "camera"}));
  CHECK(smf::contains_sequence(hay, Tokens{"it"}));
  CHECK_FALSE(smf::contains_sequence(hay, Tokens{"has", "camera"}));
  CHECK_FALSE(smf::contains_sequence(hay, Tokens{"camera", "a"}));
  CHECK_FALSE(smf::contains_sequence(Tokens{}, Tokens{"a"}));
}

TEST_CASE("pronoun lexicons") {
  for (const char* t : {"i", "we", "us", "my", "our", "i've"}) CHECK(smf::first_person_lexicon().contains(t));
  for (const char* t : {"you", "your"}) {
    CHECK(smf::second_person_lexicon().contains(t));
    CHECK_FALSE(smf::first_person_lexicon().contains(t));
  }
}

}  // TEST_SUITE
