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

#include "ctxspell/ranker.hpp"

#include <algorithm>
#include <map>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <unordered_set>

#include "ctxspell/textcore.hpp"

namespace ctxspell {

namespace {

std::string checked_phrase(std::string phrase) {
  std::string normalized = normalize(phrase);
  if (normalized.empty()) throw std::invalid_argument("empty bias phrase");
  return normalized;
}

}  // namespace

BiasList::BiasList(std::vector<std::string> phrases) {
  phrases_.reserve(phrases.size());
  for (auto& p : phrases) phrases_.push_back(checked_phrase(std::move(p)));
}

int BiasList::find(std::string_view phrase) const {
  const std::string key = normalize(phrase);
  for (std::size_t i = 0; i < phrases_.size(); ++i) {
    if (phrases_[i] == key) return static_cast<int>(i);
  }
  return -1;
}

std::vector<int> BiasList::duplicates() const {
  std::vector<int> out;
  std::unordered_set<std::string> seen;
  for (std::size_t i = 0; i < phrases_.size(); ++i) {
    if (!seen.insert(phrases_[i]).second) out.push_back(static_cast<int>(i));
  }
  return out;
}

void BiasList::push_back(std::string phrase) { phrases_.push_back(checked_phrase(std::move(phrase))); }

void BiasList::insert(std::size_t pos, std::string phrase) {
  phrases_.insert(phrases_.begin() + static_cast<std::ptrdiff_t>(std::min(pos, phrases_.size())),
                  checked_phrase(std::move(phrase)));
}

void BiasList::erase(std::size_t pos) {
  if (pos >= phrases_.size()) throw std::out_of_range("bias list index");
  phrases_.erase(phrases_.begin() + static_cast<std::ptrdiff_t>(pos));
}

BiasList BiasList::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open bias list: " + path.string());
  BiasList out;
  std::string line;
  while (std::getline(in, line)) {
    std::string normalized = normalize(line);
    if (!normalized.empty()) out.phrases_.push_back(std::move(normalized));
  }
  return out;
}

void BiasList::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write bias list: " + path.string());
  for (const auto& p : phrases_) out << p << '\n';
}

namespace {

// Hypothesis segments grouped by word count, decoded once per ranking call.
class SegmentTable {
 public:
  explicit SegmentTable(std::string_view hypothesis) : words_(split_words(hypothesis)) {}

  const std::vector<std::u32string>& segments(std::size_t m) {
    auto it = by_count_.find(m);
    if (it != by_count_.end()) return it->second;
    std::vector<std::u32string> segs;
    if (words_.size() < m) {
      segs.push_back(utf8_decode(join_words(words_)));
    } else {
      for (std::size_t i = 0; i + m <= words_.size(); ++i) segs.push_back(utf8_decode(join_words(words_, i, i + m)));
    }
    return by_count_.emplace(m, std::move(segs)).first->second;
  }

 private:
  std::vector<std::string> words_;
  std::map<std::size_t, std::vector<std::u32string>> by_count_;
};

int levenshtein32(const std::u32string& a, const std::u32string& b, std::vector<int>& prev, std::vector<int>& cur) {
  prev.resize(b.size() + 1);
  cur.resize(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = static_cast<int>(j);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = static_cast<int>(i);
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = std::min({prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1), prev[j] + 1, cur[j - 1] + 1});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double weight_against(const std::string& normalized_phrase, SegmentTable& table) {
  if (normalized_phrase.empty()) throw std::invalid_argument("empty phrase");
  const std::u32string c = utf8_decode(normalized_phrase);
  std::size_t m = 1;
  for (char ch : normalized_phrase) m += ch == ' ' ? 1 : 0;
  std::vector<int> prev, cur;
  int best = std::numeric_limits<int>::max();
  for (const auto& seg : table.segments(m)) {
    best = std::min(best, levenshtein32(c, seg, prev, cur));
    if (best == 0) break;
  }
  return -static_cast<double>(best) / static_cast<double>(c.size());
}

}  // namespace

double relevance_weight(std::string_view phrase, std::string_view hypothesis) {
  SegmentTable table(hypothesis);
  return weight_against(normalize(phrase), table);
}

std::vector<RankedPhrase> preselect(const BiasList& bias_list, std::string_view hypothesis, int k) {
  if (bias_list.empty()) throw std::invalid_argument("empty bias list");
  if (k < 1) throw std::invalid_argument("preselect k must be >= 1");
  SegmentTable table(hypothesis);
  std::vector<RankedPhrase> scored;
  scored.reserve(bias_list.size());
  for (std::size_t j = 0; j < bias_list.size(); ++j) {
    scored.push_back({bias_list[j], static_cast<int>(j), weight_against(bias_list[j], table)});
  }
  const auto keep = std::min<std::size_t>(static_cast<std::size_t>(k), scored.size());
  auto better = [](const RankedPhrase& a, const RankedPhrase& b) {
    if (a.weight != b.weight) return a.weight > b.weight;
    return a.original_index < b.original_index;
  };
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(keep), scored.end(),
                    better);
  scored.resize(keep);
  return scored;
}

BiasList to_bias_list(const std::vector<RankedPhrase>& ranked) {
  std::vector<std::string> phrases;
  phrases.reserve(ranked.size());
  for (const auto& r : ranked) phrases.push_back(r.phrase);
  return BiasList(std::move(phrases));
}

}  // namespace ctxspell
