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

#ifndef CTXSPELL_TAGGING_HPP_
#define CTXSPELL_TAGGING_HPP_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "ctxspell/ranker.hpp"
#include "ctxspell/textcore.hpp"

namespace ctxspell {

// Class ids double as logit columns. O is 0 so first-max argmax favors it.
enum class Tag : std::uint8_t { O = 0, B = 1, I = 2, L = 3 };
inline constexpr int kNumTags = 4;

char tag_char(Tag t);

struct TagTarget {
  std::vector<Tag> cls;
  // 0 = no phrase, k >= 1 = k-th bias list entry.
  std::vector<int> cind;
  // False when the name was deleted from the hypothesis.
  bool usable = true;

  std::size_t size() const { return cls.size(); }
  bool all_outside() const;
};

// Checks |cls| == |cind|, cind == 0 iff O, I/L only after B/I, and a constant
// cind over each B..L run. Returns an empty string when well formed.
std::string check_well_formed(const TagTarget& target);

struct CorrectionSpan {
  int token_start = 0;
  int token_end = 0;
  int phrase_index = 0;
  friend bool operator==(const CorrectionSpan&, const CorrectionSpan&) = default;
};

// Hypothesis word range aligned to the reference name, including adjacent
// inserted hypothesis words. Empty when the name was deleted.
Range aligned_name_words(const WordAlignment& alignment, Range name_word_span);

// Throws std::invalid_argument("phrase not in bias list") when the
// reference name is missing and `anti_context` is false.
TagTarget build_targets(std::string_view reference, std::string_view hypothesis,
                        Range name_word_span, const BiasList& bias_list, bool anti_context = false,
                        int chunk_size = kDefaultChunkSize);

// Lenient decoding of B I* L? runs; malformed I/L are treated as O.
std::vector<CorrectionSpan> extract_spans(const std::vector<Tag>& cls, const std::vector<int>& cind);

// Replaces the words overlapped by each span with its phrase, right to left.
// Throws std::out_of_range("bad context index").
std::string apply_correction(std::string_view hypothesis, const std::vector<CorrectionSpan>& spans,
                             const BiasList& bias_list, int chunk_size = kDefaultChunkSize);

}  // namespace ctxspell

#endif  // CTXSPELL_TAGGING_HPP_
