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

#ifndef CTXSPELL_AUGMENT_HPP_
#define CTXSPELL_AUGMENT_HPP_

// Training-pair construction: bias-list sampling around the ground-truth
// name, hypothesis replacement from reference/hypothesis pairs, and the two
// anti-context augmentations (ground truth removed; ground truth removed and
// similar-sounding variants added).

#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "ctxspell/model.hpp"
#include "ctxspell/ranker.hpp"
#include "ctxspell/simdata.hpp"
#include "ctxspell/tagging.hpp"

namespace ctxspell {

struct AugmentConfig {
  int n_bmax = 20;          // distractors per example ~ U[1, n_bmax]
  double p_anti = 0.3;      // probability of an anti-context example
  double p_replace = 0.5;   // probability of hypothesis replacement
  int n_similar = 2;        // variants injected by remove-and-confuse
  double p_confuse = 0.5;   // share of anti-context examples that also confuse
  // Ranker top-k applied to the sampled list so training sees the same
  // hard negatives as inference; 0 keeps the whole sampled list.
  int preselect_k = 10;

  void validate() const;
  nlohmann::json to_json() const;
  static AugmentConfig from_json(const nlohmann::json& j);
};

struct SampledBiasList {
  BiasList list;
  int gt_index = -1;  // 0-based position of the ground-truth phrase
};

// Draws N_b ~ U[1, n_bmax] distinct pool entries other than `gt_phrase` and
// inserts the ground truth at a uniform position. A pool with fewer
// candidates contributes all of them.
SampledBiasList sample_bias_list(std::string_view gt_phrase, const BiasList& pool, const AugmentConfig& cfg,
                                 Rng& rng);

enum class AntiMode { kRemove, kRemoveAndConfuse };

struct TrainingExample {
  std::string reference;  // text the corrector should produce
  std::string hypothesis;
  std::string name;
  Range name_word_span;
  BiasList bias_list;
  bool anti_context = false;
  bool replaced = false;
  // Borrowed from the source utterance; null for text-only data.
  const Matrix<float>* frames = nullptr;
  std::vector<Range> word_frame_spans;  // per hypothesis word
  TagTarget target;
  int s_k = 1;
};

// Seeds an example from an utterance and a sampled list; target not built.
TrainingExample make_example(const Utterance& utt, SampledBiasList sampled);

// With probability cfg.p_replace swaps the hypothesis words aligned to the
// name for a uniformly drawn variant from `pairs`. Frames stay untouched;
// frame spans of the swapped words are redistributed over the new words.
// Targets are rebuilt. Examples without a pair entry or whose name was
// deleted come back unchanged.
TrainingExample replace_hypothesis(TrainingExample example, const RefHypPairs& pairs, const AugmentConfig& cfg,
                                   Rng& rng, int chunk_size = kDefaultChunkSize);

// Removes every copy of the ground truth from the list; in confuse mode
// also inserts up to n_similar variants of it. The expected output becomes
// the hypothesis itself and the target is all outside.
TrainingExample make_anti_example(TrainingExample example, const RefHypPairs& pairs, AntiMode mode,
                                  const AugmentConfig& cfg, Rng& rng, int chunk_size = kDefaultChunkSize);

// sample_bias_list -> replace_hypothesis -> ranker top-k -> (p_anti)
// make_anti_example -> build_targets -> S_k ~ U[1, s_kmax]. When the
// ranker drops the ground truth the example is anti-context by
// construction: the list lacks the name, so the hypothesis is kept.
TrainingExample build_training_example(const Utterance& utt, const BiasList& pool, const RefHypPairs& pairs,
                                       const AugmentConfig& cfg, int s_kmax, Rng& rng,
                                       int chunk_size = kDefaultChunkSize);

// Splits `span` into `count` consecutive non-empty pieces when wide enough;
// narrower spans are repeated.
std::vector<Range> split_span(Range span, int count);

}  // namespace ctxspell

#endif  // CTXSPELL_AUGMENT_HPP_
