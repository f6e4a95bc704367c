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

#ifndef CTXSPELL_RANKER_HPP_
#define CTXSPELL_RANKER_HPP_

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace ctxspell {

// Ordered list of normalized context phrases. Position in `phrases` is the
// phrase's original index.
class BiasList {
 public:
  BiasList() = default;
  // Normalizes every entry; throws std::invalid_argument on an empty phrase.
  explicit BiasList(std::vector<std::string> phrases);

  const std::vector<std::string>& phrases() const { return phrases_; }
  const std::string& operator[](std::size_t i) const { return phrases_[i]; }
  std::size_t size() const { return phrases_.size(); }
  bool empty() const { return phrases_.empty(); }

  // Index of the first entry equal to `phrase` (normalized), or -1.
  int find(std::string_view phrase) const;
  // Original indices of entries that repeat an earlier entry.
  std::vector<int> duplicates() const;

  void push_back(std::string phrase);
  void insert(std::size_t pos, std::string phrase);
  void erase(std::size_t pos);

  // One phrase per line; blank lines skipped.
  static BiasList load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

 private:
  std::vector<std::string> phrases_;
};

struct RankedPhrase {
  std::string phrase;
  int original_index = 0;
  double weight = 0.0;
};

// Negated minimum character edit distance between `phrase` and every
// equal-word-count segment of `hypothesis`, normalized by the phrase's
// character length. Throws std::invalid_argument for an empty phrase.
double relevance_weight(std::string_view phrase, std::string_view hypothesis);

// Top-k phrases by weight (descending), ties by smaller original index.
std::vector<RankedPhrase> preselect(const BiasList& bias_list, std::string_view hypothesis, int k);

BiasList to_bias_list(const std::vector<RankedPhrase>& ranked);

}  // namespace ctxspell

#endif  // CTXSPELL_RANKER_HPP_
