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

#ifndef CTXSPELL_TEXTCORE_HPP_
#define CTXSPELL_TEXTCORE_HPP_

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace ctxspell {

inline constexpr int kDefaultChunkSize = 3;

// Half-open range [begin, end).
struct Range {
  int begin = 0;
  int end = 0;

  int size() const { return end - begin; }
  bool empty() const { return end <= begin; }
  bool contains(int i) const { return i >= begin && i < end; }
  friend bool operator==(const Range&, const Range&) = default;
};

struct TokenizedText {
  std::vector<std::string> words;
  std::vector<std::string> tokens;
  std::vector<int> word_of_token;
  std::vector<Range> token_span_of_word;

  int num_tokens() const { return static_cast<int>(tokens.size()); }
  int num_words() const { return static_cast<int>(words.size()); }
};

// Lowercases ASCII letters and collapses runs of whitespace to one space.
std::string normalize(std::string_view text);
std::vector<std::string> split_words(std::string_view text);
std::string join_words(const std::vector<std::string>& words, std::size_t begin = 0,
                       std::size_t end = static_cast<std::size_t>(-1));

// Splits UTF-8 into code points; invalid bytes become single-byte units.
std::vector<std::string> utf8_chars(std::string_view s);
std::u32string utf8_decode(std::string_view s);

// Lowercase, whitespace split, then greedy left-to-right chunks of at most
// `chunk_size` code points per word.
TokenizedText tokenize(std::string_view text, int chunk_size = kDefaultChunkSize);
std::string detokenize(const TokenizedText& tokenized);

// Unit-cost Levenshtein distance over code points.
int char_edit_distance(std::string_view a, std::string_view b);
int word_edit_distance(const std::vector<std::string>& a, const std::vector<std::string>& b);

inline constexpr int kGap = -1;

struct AlignedPair {
  int ref = kGap;
  int hyp = kGap;

  bool is_match_or_sub() const { return ref != kGap && hyp != kGap; }
  friend bool operator==(const AlignedPair&, const AlignedPair&) = default;
};

struct WordAlignment {
  std::vector<AlignedPair> pairs;
  int cost = 0;

  // Hypothesis word aligned to reference word `ref_index`, or kGap.
  int hyp_of_ref(int ref_index) const;
};

// Minimal word-level edit alignment. Backtrace prefers the diagonal move
// (match/substitution) over deletion over insertion.
WordAlignment word_align(const std::vector<std::string>& ref_words,
                         const std::vector<std::string>& hyp_words);

}  // namespace ctxspell

#endif  // CTXSPELL_TEXTCORE_HPP_
