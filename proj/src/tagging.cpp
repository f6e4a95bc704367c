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

#include "ctxspell/tagging.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

namespace ctxspell {

char tag_char(Tag t) {
  switch (t) {
    case Tag::B: return 'B';
    case Tag::I: return 'I';
    case Tag::L: return 'L';
    case Tag::O: return 'O';
  }
  return '?';
}

bool TagTarget::all_outside() const {
  return std::all_of(cls.begin(), cls.end(), [](Tag t) { return t == Tag::O; });
}

std::string check_well_formed(const TagTarget& target) {
  if (target.cls.size() != target.cind.size()) return "cls/cind length mismatch";
  Tag prev = Tag::O;
  int run_index = 0;
  for (std::size_t t = 0; t < target.cls.size(); ++t) {
    const Tag tag = target.cls[t];
    const int k = target.cind[t];
    if ((k == 0) != (tag == Tag::O)) return "cind zero iff O violated at " + std::to_string(t);
    if (k < 0) return "negative cind at " + std::to_string(t);
    if (tag == Tag::I || tag == Tag::L) {
      if (prev != Tag::B && prev != Tag::I) return "dangling I/L at " + std::to_string(t);
      if (k != run_index) return "cind changes inside span at " + std::to_string(t);
    }
    if (tag == Tag::B) run_index = k;
    prev = tag;
  }
  return {};
}

Range aligned_name_words(const WordAlignment& alignment, Range name_word_span) {
  const auto& pairs = alignment.pairs;
  int first = -1;
  int last = -1;
  for (int p = 0; p < static_cast<int>(pairs.size()); ++p) {
    if (pairs[p].ref != kGap && name_word_span.contains(pairs[p].ref)) {
      if (first < 0) first = p;
      last = p;
    }
  }
  if (first < 0) return {};
  // Absorb hypothesis insertions hugging the name.
  while (first > 0 && pairs[first - 1].ref == kGap) --first;
  while (last + 1 < static_cast<int>(pairs.size()) && pairs[last + 1].ref == kGap) ++last;

  int lo = -1;
  int hi = -1;
  for (int p = first; p <= last; ++p) {
    if (pairs[p].hyp == kGap) continue;
    if (lo < 0) lo = pairs[p].hyp;
    hi = pairs[p].hyp;
  }
  if (lo < 0) return {};
  return {lo, hi + 1};
}

TagTarget build_targets(std::string_view reference, std::string_view hypothesis,
                        Range name_word_span, const BiasList& bias_list, bool anti_context,
                        int chunk_size) {
  const TokenizedText hyp = tokenize(hypothesis, chunk_size);
  TagTarget target;
  target.cls.assign(hyp.tokens.size(), Tag::O);
  target.cind.assign(hyp.tokens.size(), 0);
  if (anti_context) return target;

  const std::vector<std::string> ref_words = split_words(reference);
  if (name_word_span.begin < 0 || name_word_span.end > static_cast<int>(ref_words.size()) ||
      name_word_span.empty()) {
    throw std::invalid_argument("name span outside reference");
  }
  const std::string phrase = join_words(ref_words, name_word_span.begin, name_word_span.end);
  const int index = bias_list.find(phrase);
  if (index < 0) throw std::invalid_argument("phrase not in bias list");

  const Range words = aligned_name_words(word_align(ref_words, hyp.words), name_word_span);
  if (words.empty()) {
    target.usable = false;
    return target;
  }
  const int begin = hyp.token_span_of_word[words.begin].begin;
  const int end = hyp.token_span_of_word[words.end - 1].end;
  for (int t = begin; t < end; ++t) {
    target.cls[t] = (t == begin) ? Tag::B : (t == end - 1 ? Tag::L : Tag::I);
    target.cind[t] = index + 1;
  }
  return target;
}

std::vector<CorrectionSpan> extract_spans(const std::vector<Tag>& cls, const std::vector<int>& cind) {
  if (cls.size() != cind.size()) throw std::invalid_argument("cls/cind length mismatch");
  std::vector<CorrectionSpan> spans;
  const int n = static_cast<int>(cls.size());
  int t = 0;
  while (t < n) {
    if (cls[t] != Tag::B) {
      ++t;
      continue;
    }
    const int start = t++;
    while (t < n && cls[t] == Tag::I) ++t;
    if (t < n && cls[t] == Tag::L) ++t;

    std::map<int, int> votes;
    for (int u = start; u < t; ++u) ++votes[cind[u]];
    int best_count = 0;
    for (const auto& [k, c] : votes) best_count = std::max(best_count, c);
    int chosen = cind[start];
    if (votes[chosen] != best_count) {
      for (const auto& [k, c] : votes) {
        if (c == best_count) {
          chosen = k;
          break;
        }
      }
    }
    if (chosen > 0) spans.push_back({start, t, chosen});
  }
  return spans;
}

std::string apply_correction(std::string_view hypothesis, const std::vector<CorrectionSpan>& spans,
                             const BiasList& bias_list, int chunk_size) {
  const TokenizedText hyp = tokenize(hypothesis, chunk_size);
  std::vector<std::string> words = hyp.words;
  for (const auto& s : spans) {
    if (s.phrase_index < 1 || s.phrase_index > static_cast<int>(bias_list.size())) {
      throw std::out_of_range("bad context index");
    }
    if (s.token_start < 0 || s.token_end > hyp.num_tokens() || s.token_start >= s.token_end) {
      throw std::out_of_range("span outside hypothesis tokens");
    }
  }
  std::vector<CorrectionSpan> ordered = spans;
  std::sort(ordered.begin(), ordered.end(),
            [](const CorrectionSpan& a, const CorrectionSpan& b) { return a.token_start > b.token_start; });
  int limit = hyp.num_words();  // words at or beyond this were already rewritten
  for (const auto& s : ordered) {
    const int w0 = hyp.word_of_token[s.token_start];
    const int w1 = hyp.word_of_token[s.token_end - 1] + 1;
    if (w1 > limit) continue;
    const std::vector<std::string> replacement = split_words(bias_list[s.phrase_index - 1]);
    words.erase(words.begin() + w0, words.begin() + w1);
    words.insert(words.begin() + w0, replacement.begin(), replacement.end());
    limit = w0;
  }
  return join_words(words);
}

}  // namespace ctxspell
