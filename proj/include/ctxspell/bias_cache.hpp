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

#ifndef CTXSPELL_BIAS_CACHE_HPP_
#define CTXSPELL_BIAS_CACHE_HPP_

#include <cstddef>
#include <cstdint>
#include <list>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>

#include "ctxspell/graph.hpp"

namespace ctxspell {

// LRU map from phrase text to its bias-encoder embedding row. Lookups
// reorder recency, so every access takes the lock.
template <typename T>
class BiasEmbeddingCache {
 public:
  explicit BiasEmbeddingCache(std::size_t capacity) : capacity_(capacity) {}

  std::optional<Matrix<T>> get(const std::string& phrase) {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = index_.find(phrase);
    if (it == index_.end()) {
      ++misses_;
      return std::nullopt;
    }
    ++hits_;
    entries_.splice(entries_.begin(), entries_, it->second);
    return it->second->second;
  }

  void put(const std::string& phrase, Matrix<T> row) {
    std::lock_guard<std::mutex> lock(mu_);
    if (capacity_ == 0) return;
    auto it = index_.find(phrase);
    if (it != index_.end()) {
      it->second->second = std::move(row);
      entries_.splice(entries_.begin(), entries_, it->second);
      return;
    }
    entries_.emplace_front(phrase, std::move(row));
    index_[phrase] = entries_.begin();
    if (entries_.size() > capacity_) {
      index_.erase(entries_.back().first);
      entries_.pop_back();
      ++evictions_;
    }
  }

  // Presence probe that does not touch recency or counters.
  bool contains(const std::string& phrase) const {
    std::lock_guard<std::mutex> lock(mu_);
    return index_.count(phrase) > 0;
  }

  std::size_t size() const {
    std::lock_guard<std::mutex> lock(mu_);
    return entries_.size();
  }
  std::size_t capacity() const { return capacity_; }
  std::uint64_t hits() const { return hits_; }
  std::uint64_t misses() const { return misses_; }
  std::uint64_t evictions() const { return evictions_; }
  double hit_rate() const {
    const auto total = hits_ + misses_;
    return total == 0 ? 0.0 : static_cast<double>(hits_) / static_cast<double>(total);
  }

  void clear() {
    std::lock_guard<std::mutex> lock(mu_);
    entries_.clear();
    index_.clear();
    hits_ = misses_ = evictions_ = 0;
  }

 private:
  using Entry = std::pair<std::string, Matrix<T>>;

  std::size_t capacity_;
  mutable std::mutex mu_;
  std::list<Entry> entries_;
  std::unordered_map<std::string, typename std::list<Entry>::iterator> index_;
  std::uint64_t hits_ = 0;
  std::uint64_t misses_ = 0;
  std::uint64_t evictions_ = 0;
};

}  // namespace ctxspell

#endif  // CTXSPELL_BIAS_CACHE_HPP_
