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

#include "ctxspell/textcore.hpp"

#include <algorithm>
#include <numeric>

namespace ctxspell {

namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

char ascii_lower(char c) {
  return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
}

int utf8_length(unsigned char lead) {
  if (lead < 0x80) return 1;
  if ((lead >> 5) == 0x6) return 2;
  if ((lead >> 4) == 0xE) return 3;
  if ((lead >> 3) == 0x1E) return 4;
  return 1;
}

template <typename Seq>
int levenshtein(const Seq& a, const Seq& b) {
  const std::size_t n = a.size();
  const std::size_t m = b.size();
  if (n == 0) return static_cast<int>(m);
  if (m == 0) return static_cast<int>(n);
  std::vector<int> prev(m + 1);
  std::vector<int> cur(m + 1);
  std::iota(prev.begin(), prev.end(), 0);
  for (std::size_t i = 1; i <= n; ++i) {
    cur[0] = static_cast<int>(i);
    for (std::size_t j = 1; j <= m; ++j) {
      const int sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({sub, prev[j] + 1, cur[j - 1] + 1});
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

}  // namespace

std::string normalize(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char c : text) {
    if (is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back(ascii_lower(c));
  }
  return out;
}

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> words;
  std::string cur;
  for (char c : text) {
    if (is_space(c)) {
      if (!cur.empty()) words.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(ascii_lower(c));
    }
  }
  if (!cur.empty()) words.push_back(std::move(cur));
  return words;
}

std::string join_words(const std::vector<std::string>& words, std::size_t begin, std::size_t end) {
  end = std::min(end, words.size());
  std::string out;
  for (std::size_t i = begin; i < end; ++i) {
    if (i > begin) out.push_back(' ');
    out += words[i];
  }
  return out;
}

std::vector<std::string> utf8_chars(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    std::size_t len = static_cast<std::size_t>(utf8_length(static_cast<unsigned char>(s[i])));
    if (i + len > s.size()) len = 1;
    out.emplace_back(s.substr(i, len));
    i += len;
  }
  return out;
}

std::u32string utf8_decode(std::string_view s) {
  std::u32string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    const auto lead = static_cast<unsigned char>(s[i]);
    std::size_t len = static_cast<std::size_t>(utf8_length(lead));
    if (i + len > s.size()) len = 1;
    char32_t cp = 0;
    if (len == 1) {
      cp = lead;
    } else {
      cp = lead & (0x7F >> len);
      for (std::size_t k = 1; k < len; ++k) {
        cp = (cp << 6) | (static_cast<unsigned char>(s[i + k]) & 0x3F);
      }
    }
    out.push_back(cp);
    i += len;
  }
  return out;
}

TokenizedText tokenize(std::string_view text, int chunk_size) {
  chunk_size = std::max(chunk_size, 1);
  TokenizedText out;
  out.words = split_words(text);
  for (int w = 0; w < out.num_words(); ++w) {
    const auto chars = utf8_chars(out.words[w]);
    const int begin = out.num_tokens();
    for (std::size_t i = 0; i < chars.size(); i += static_cast<std::size_t>(chunk_size)) {
      std::string piece;
      for (std::size_t k = i; k < std::min(chars.size(), i + chunk_size); ++k) piece += chars[k];
      out.tokens.push_back(std::move(piece));
      out.word_of_token.push_back(w);
    }
    out.token_span_of_word.push_back({begin, out.num_tokens()});
  }
  return out;
}

std::string detokenize(const TokenizedText& tokenized) {
  std::string out;
  for (int w = 0; w < static_cast<int>(tokenized.token_span_of_word.size()); ++w) {
    if (w > 0) out.push_back(' ');
    const Range span = tokenized.token_span_of_word[w];
    for (int t = span.begin; t < span.end; ++t) out += tokenized.tokens[t];
  }
  return out;
}

int char_edit_distance(std::string_view a, std::string_view b) {
  return levenshtein(utf8_decode(a), utf8_decode(b));
}

int word_edit_distance(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  return levenshtein(a, b);
}

int WordAlignment::hyp_of_ref(int ref_index) const {
  for (const auto& p : pairs) {
    if (p.ref == ref_index) return p.hyp;
  }
  return kGap;
}

WordAlignment word_align(const std::vector<std::string>& ref_words,
                         const std::vector<std::string>& hyp_words) {
  const int n = static_cast<int>(ref_words.size());
  const int m = static_cast<int>(hyp_words.size());
  // Suffix costs, so the forward trace can take the earliest admissible move.
  std::vector<std::vector<int>> cost(n + 1, std::vector<int>(m + 1, 0));
  for (int i = n; i >= 0; --i) {
    for (int j = m; j >= 0; --j) {
      if (i == n) {
        cost[i][j] = m - j;
      } else if (j == m) {
        cost[i][j] = n - i;
      } else {
        const int sub = cost[i + 1][j + 1] + (ref_words[i] == hyp_words[j] ? 0 : 1);
        cost[i][j] = std::min({sub, cost[i + 1][j] + 1, cost[i][j + 1] + 1});
      }
    }
  }

  WordAlignment out;
  out.cost = cost[0][0];
  int i = 0;
  int j = 0;
  while (i < n || j < m) {
    if (i < n && j < m &&
        cost[i][j] == cost[i + 1][j + 1] + (ref_words[i] == hyp_words[j] ? 0 : 1)) {
      out.pairs.push_back({i++, j++});
    } else if (i < n && cost[i][j] == cost[i + 1][j] + 1) {
      out.pairs.push_back({i++, kGap});
    } else {
      out.pairs.push_back({kGap, j++});
    }
  }
  return out;
}

}  // namespace ctxspell
