// Copyright (c) 2026 The ctxspell Authors
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

#include "doctest.h"

#include <random>

#include "ctxspell/textcore.hpp"
#include "support.hpp"

namespace ctxspell {
namespace {

using testing::brute_edit_distance;
using testing::to_u32;

std::string random_word(std::mt19937_64& rng, int max_len, const std::string& alphabet = "abcd") {
  const int len = std::uniform_int_distribution<int>(0, max_len)(rng);
  std::string s;
  for (int i = 0; i < len; ++i) s += alphabet[std::uniform_int_distribution<std::size_t>(0, alphabet.size() - 1)(rng)];
  return s;
}

// Every alignment path through the (ref, hyp) grid, scored by unit costs.
int brute_alignment_cost(const std::vector<std::string>& r, const std::vector<std::string>& h, std::size_t i = 0,
                         std::size_t j = 0) {
  if (i == r.size()) return static_cast<int>(h.size() - j);
  if (j == h.size()) return static_cast<int>(r.size() - i);
  return std::min({brute_alignment_cost(r, h, i + 1, j + 1) + (r[i] == h[j] ? 0 : 1),
                   brute_alignment_cost(r, h, i + 1, j) + 1, brute_alignment_cost(r, h, i, j + 1) + 1});
}

int alignment_cost(const WordAlignment& a, const std::vector<std::string>& r, const std::vector<std::string>& h) {
  int cost = 0;
  for (const auto& p : a.pairs) {
    if (!p.is_match_or_sub()) {
      ++cost;
    } else if (r[static_cast<std::size_t>(p.ref)] != h[static_cast<std::size_t>(p.hyp)]) {
      ++cost;
    }
  }
  return cost;
}

TEST_CASE("normalize lowercases and collapses whitespace") {
  CHECK(normalize("  Call   JOHN\tnow ") == "call john now");
  CHECK(normalize("") == "");
  CHECK(split_words("a  b c") == std::vector<std::string>{"a", "b", "c"});
  CHECK(join_words({"a", "b", "c"}, 1) == "b c");
}

TEST_CASE("tokenize chunks words greedily") {
  const TokenizedText t = tokenize("Call John");
  CHECK(t.tokens == std::vector<std::string>{"cal", "l", "joh", "n"});
  CHECK(t.word_of_token == std::vector<int>{0, 0, 1, 1});
  CHECK(t.token_span_of_word[1] == Range{2, 4});
  CHECK(tokenize("a").tokens == std::vector<std::string>{"a"});
  CHECK(tokenize("ten a.m.").tokens == std::vector<std::string>{"ten", "a.m", "."});
  CHECK(tokenize("").num_tokens() == 0);
  CHECK(detokenize(tokenize("call  John at ten")) == "call john at ten");
}

TEST_CASE("tokenize counts code points, not bytes") {
  const TokenizedText t = tokenize("zoë");
  REQUIRE(t.num_tokens() == 1);
  CHECK(utf8_chars("zoë").size() == 3);
}

TEST_CASE("char edit distance fixed points") {
  CHECK(char_edit_distance("john", "john") == 0);
  CHECK(char_edit_distance("kitten", "sitting") == 3);
  CHECK(char_edit_distance("", "abc") == 3);
  CHECK(brute_edit_distance(to_u32("kitten"), to_u32("sitting")) == 3);
}

TEST_CASE("char edit distance agrees with exhaustive recursion") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 300; ++trial) {
    const std::string a = random_word(rng, 6), b = random_word(rng, 6);
    CHECK(char_edit_distance(a, b) == brute_edit_distance(to_u32(a), to_u32(b)));
  }
}

TEST_CASE("word alignment of identical and substituted sequences") {
  const auto a = word_align({"call", "john"}, {"call", "john"});
  REQUIRE(a.pairs.size() == 2);
  CHECK(a.pairs[0] == AlignedPair{0, 0});
  CHECK(a.pairs[1] == AlignedPair{1, 1});
  CHECK(a.cost == 0);

  const auto s = word_align({"call", "john"}, {"call", "joe"});
  REQUIRE(s.pairs.size() == 2);
  CHECK(s.pairs[1] == AlignedPair{1, 1});
  CHECK(s.cost == 1);
}

TEST_CASE("word alignment records a deletion") {
  const std::vector<std::string> r{"call", "john", "now"}, h{"call", "now"};
  const auto a = word_align(r, h);
  CHECK(a.cost == brute_alignment_cost(r, h));
  CHECK(std::find(a.pairs.begin(), a.pairs.end(), AlignedPair{1, kGap}) != a.pairs.end());
  CHECK(a.hyp_of_ref(1) == kGap);
  CHECK(a.hyp_of_ref(2) == 1);
}

TEST_CASE("word alignment is minimal and consistent on random inputs") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::string> r, h;
    const int nr = std::uniform_int_distribution<int>(0, 5)(rng), nh = std::uniform_int_distribution<int>(0, 5)(rng);
    for (int i = 0; i < nr; ++i) r.push_back(random_word(rng, 1, "ab") + "x");
    for (int i = 0; i < nh; ++i) h.push_back(random_word(rng, 1, "ab") + "x");
    const auto a = word_align(r, h);
    const int best = brute_alignment_cost(r, h);
    CHECK(a.cost == best);
    CHECK(alignment_cost(a, r, h) == best);
    CHECK(word_edit_distance(r, h) == best);
    // Each word appears exactly once, in order.
    int next_r = 0, next_h = 0;
    for (const auto& p : a.pairs) {
      if (p.ref != kGap) CHECK(p.ref == next_r++);
      if (p.hyp != kGap) CHECK(p.hyp == next_h++);
    }
    CHECK(next_r == nr);
    CHECK(next_h == nh);
  }
}

}  // namespace
}  // namespace ctxspell
