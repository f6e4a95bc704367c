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

#ifndef CTXSPELL_SIMDATA_HPP_
#define CTXSPELL_SIMDATA_HPP_

// Deterministic stand-in for decoded ASR training data: templated
// utterances with person names, ASR-like corrupted hypotheses, pseudo
// acoustic frames carrying the reference phonemes, and rough alignments.

#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "ctxspell/graph.hpp"
#include "ctxspell/ranker.hpp"
#include "ctxspell/textcore.hpp"

namespace ctxspell {

using Rng = std::mt19937_64;

// Stateless 64-bit mixer for deriving per-item seeds.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

struct SimConfig {
  int n_names = 200;
  int n_train = 2000;
  int n_test = 300;
  double p_name_corrupt = 0.06;
  double p_carrier_noise = 0.02;
  double p_full_name = 0.2;  // inventory share of "given surname" names
  int frames_per_phoneme = 2;
  double frame_noise_sigma = 0.3;
  int d_acoustic_in = 32;
  int max_jitter = 2;
  int distractor_pool_size = 500;
  std::uint64_t seed = 1;

  void validate() const;
  nlohmann::json to_json() const;
  static SimConfig from_json(const nlohmann::json& j);
};

inline constexpr int kNumPhonemes = 40;
inline constexpr int kSilencePhoneme = 39;
using PhonemeSeq = std::vector<int>;

// Rule-table grapheme-to-symbol mapping. Non-letters are dropped.
PhonemeSeq pseudo_phonemes(std::string_view word);
// Concatenation over the words of `phrase`.
PhonemeSeq phrase_phonemes(std::string_view phrase);
std::string_view phoneme_symbol(int id);
int phoneme_edit_distance(const PhonemeSeq& a, const PhonemeSeq& b);

const std::vector<std::string>& base_given_names();
const std::vector<std::string>& base_surnames();

std::vector<std::string> build_name_inventory(const SimConfig& cfg);
// Name-like phrases disjoint from `inventory`.
std::vector<std::string> build_distractor_pool(const std::vector<std::string>& inventory, const SimConfig& cfg);

// One random character substitution, insertion, or deletion that changes
// the string and keeps it non-empty.
std::string random_char_edit(std::string_view phrase, Rng& rng);

enum class CorruptionMode {
  kNatural,  // replace with prob p, else char edit with prob 0.5, else unchanged
  kForced,   // always changed: replacement or char edit, 50/50
};

// Replacement names are drawn with probability proportional to
// exp(-phoneme_edit_distance).
std::string corrupt_name(std::string_view name, const std::vector<std::string>& inventory,
                         double p_name_corrupt, Rng& rng, CorruptionMode mode = CorruptionMode::kNatural);

// Codebook rows are N(0, 1), one per phoneme symbol, from the global seed.
Matrix<float> phoneme_codebook(const SimConfig& cfg);

struct FrameSynthesis {
  Matrix<float> frames;
  std::vector<Range> word_spans;
};

// Words without letters emit one silence phoneme so every word owns frames.
FrameSynthesis synth_frames(std::string_view reference, const SimConfig& cfg, const Matrix<float>& codebook,
                            Rng& rng);

// Projects reference-word frame spans onto hypothesis words and perturbs
// boundaries by up to `max_jitter` frames, keeping spans ordered and inside
// [0, n_frames).
std::vector<Range> jitter_alignment(const std::vector<Range>& exact_spans, const std::vector<std::string>& ref_words,
                                    const std::vector<std::string>& hyp_words, int n_frames, int max_jitter,
                                    Rng& rng);

using RefHypPairs = std::map<std::string, std::vector<std::string>>;

RefHypPairs build_refhyp_pairs(const std::vector<std::string>& inventory, Rng& rng, int attempts = 8);

struct Utterance {
  std::string id;
  std::string reference;
  std::string hypothesis;
  std::string name;
  Range name_word_span;
  Matrix<float> frames;
  std::vector<Range> word_frame_spans;  // per hypothesis word
  std::vector<Range> exact_spans;       // per reference word

  // Empty when valid.
  std::string check() const;
  nlohmann::json to_json() const;
  static Utterance from_json(const nlohmann::json& j);
};

const std::vector<std::string>& carrier_templates();

struct Corpus {
  std::vector<std::string> names;
  std::vector<std::string> distractors;
  RefHypPairs pairs;
  std::vector<Utterance> train;
  std::vector<Utterance> test;

  // Inventory plus distractors: the large phrase list training samples from.
  BiasList phrase_pool() const;
  // Distinct names spoken in the test split, in first-seen order.
  std::vector<std::string> test_names() const;
  // Distractors followed by the whole inventory: filler for evaluation lists
  // (test names are excluded from it by the list builders).
  std::vector<std::string> eval_distractors() const;
};

Corpus gen_corpus(const SimConfig& cfg);

inline constexpr int kCoverageLevels[] = {25, 50, 75, 100};

// Nested across coverage levels for a given seed: floor(coverage * n)
// covered names plus distractors up to list_size, shuffled. Throws
// std::invalid_argument for a coverage outside {25, 50, 75, 100}.
BiasList build_eval_biaslist(const std::vector<std::string>& test_names, int coverage_percent, int list_size,
                             const std::vector<std::string>& distractors, std::uint64_t seed);
std::map<int, BiasList> build_eval_biaslists(const std::vector<std::string>& test_names, int list_size,
                                             const std::vector<std::string>& distractors, std::uint64_t seed);
// No ground-truth names at all; used to count false corrections.
BiasList build_anti_context_biaslist(const std::vector<std::string>& test_names, int list_size,
                                     const std::vector<std::string>& distractors, std::uint64_t seed);

class CorpusParseError : public std::runtime_error {
 public:
  CorpusParseError(int line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

void write_corpus(const std::filesystem::path& path, const std::vector<Utterance>& utterances);
std::vector<Utterance> read_corpus(const std::filesystem::path& path);
std::string utterance_line(const Utterance& u);

}  // namespace ctxspell

#endif  // CTXSPELL_SIMDATA_HPP_
