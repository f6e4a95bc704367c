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

#include "ctxspell/augment.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace ctxspell {

void AugmentConfig::validate() const {
  auto prob = [](double p, const char* what) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument(std::string(what) + " must be in [0, 1]");
  };
  prob(p_anti, "p_anti");
  prob(p_replace, "p_replace");
  prob(p_confuse, "p_confuse");
  if (n_bmax < 1) throw std::invalid_argument("n_bmax must be >= 1");
  if (n_similar < 0) throw std::invalid_argument("n_similar must be >= 0");
  if (preselect_k < 0) throw std::invalid_argument("preselect_k must be >= 0");
}

nlohmann::json AugmentConfig::to_json() const {
  return {{"n_bmax", n_bmax},
          {"p_anti", p_anti},
          {"p_replace", p_replace},
          {"n_similar", n_similar},
          {"p_confuse", p_confuse},
          {"preselect_k", preselect_k}};
}

AugmentConfig AugmentConfig::from_json(const nlohmann::json& j) {
  AugmentConfig c;
  if (!j.is_object()) throw std::invalid_argument("augment config must be an object");
  const nlohmann::json defaults = c.to_json();
  for (const auto& [key, _] : j.items()) {
    if (!defaults.contains(key)) throw std::invalid_argument("unknown augment config key: " + key);
  }
  if (j.contains("n_bmax")) c.n_bmax = j.at("n_bmax").get<int>();
  if (j.contains("p_anti")) c.p_anti = j.at("p_anti").get<double>();
  if (j.contains("p_replace")) c.p_replace = j.at("p_replace").get<double>();
  if (j.contains("n_similar")) c.n_similar = j.at("n_similar").get<int>();
  if (j.contains("p_confuse")) c.p_confuse = j.at("p_confuse").get<double>();
  if (j.contains("preselect_k")) c.preselect_k = j.at("preselect_k").get<int>();
  c.validate();
  return c;
}

SampledBiasList sample_bias_list(std::string_view gt_phrase, const BiasList& pool, const AugmentConfig& cfg,
                                 Rng& rng) {
  cfg.validate();
  const std::string gt = normalize(gt_phrase);
  if (gt.empty()) throw std::invalid_argument("empty ground-truth phrase");
  std::vector<int> candidates;
  candidates.reserve(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) {
    if (pool[i] != gt) candidates.push_back(static_cast<int>(i));
  }
  const int n_b = std::uniform_int_distribution<int>(1, cfg.n_bmax)(rng);
  const auto take = std::min<std::size_t>(static_cast<std::size_t>(n_b), candidates.size());
  // Partial Fisher-Yates: the first `take` slots become a uniform sample.
  for (std::size_t i = 0; i < take; ++i) {
    const std::size_t j = std::uniform_int_distribution<std::size_t>(i, candidates.size() - 1)(rng);
    std::swap(candidates[i], candidates[j]);
  }
  std::vector<std::string> phrases;
  phrases.reserve(take + 1);
  for (std::size_t i = 0; i < take; ++i) phrases.push_back(pool[static_cast<std::size_t>(candidates[i])]);
  const auto pos = std::uniform_int_distribution<std::size_t>(0, phrases.size())(rng);
  phrases.insert(phrases.begin() + static_cast<std::ptrdiff_t>(pos), gt);
  return {BiasList(std::move(phrases)), static_cast<int>(pos)};
}

std::vector<Range> split_span(Range span, int count) {
  std::vector<Range> out;
  if (count <= 0) return out;
  const int width = span.size();
  if (width < count) {
    out.assign(static_cast<std::size_t>(count), span);
    return out;
  }
  for (int k = 0; k < count; ++k) {
    out.push_back({span.begin + width * k / count, span.begin + width * (k + 1) / count});
  }
  return out;
}

TrainingExample make_example(const Utterance& utt, SampledBiasList sampled) {
  TrainingExample ex;
  ex.reference = normalize(utt.reference);
  ex.hypothesis = normalize(utt.hypothesis);
  ex.name = normalize(utt.name);
  ex.name_word_span = utt.name_word_span;
  ex.bias_list = std::move(sampled.list);
  if (utt.frames.rows() > 0) ex.frames = &utt.frames;
  ex.word_frame_spans = utt.word_frame_spans;
  return ex;
}

TrainingExample replace_hypothesis(TrainingExample example, const RefHypPairs& pairs, const AugmentConfig& cfg,
                                   Rng& rng, int chunk_size) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  if (!(u01(rng) < cfg.p_replace)) return example;
  const auto it = pairs.find(example.name);
  if (it == pairs.end() || it->second.empty()) return example;

  std::vector<std::string> ref_words = split_words(example.reference);
  std::vector<std::string> hyp_words = split_words(example.hypothesis);
  const Range hyp_name = aligned_name_words(word_align(ref_words, hyp_words), example.name_word_span);
  if (hyp_name.empty()) return example;

  const std::string& variant = it->second[std::uniform_int_distribution<std::size_t>(0, it->second.size() - 1)(rng)];
  const std::vector<std::string> variant_words = split_words(variant);

  std::vector<std::string> new_words(hyp_words.begin(), hyp_words.begin() + hyp_name.begin);
  new_words.insert(new_words.end(), variant_words.begin(), variant_words.end());
  new_words.insert(new_words.end(), hyp_words.begin() + hyp_name.end, hyp_words.end());

  if (example.word_frame_spans.size() == hyp_words.size()) {
    const auto& old = example.word_frame_spans;
    const Range merged{old[static_cast<std::size_t>(hyp_name.begin)].begin,
                       old[static_cast<std::size_t>(hyp_name.end - 1)].end};
    std::vector<Range> spans(old.begin(), old.begin() + hyp_name.begin);
    for (const Range& r : split_span(merged, static_cast<int>(variant_words.size()))) spans.push_back(r);
    spans.insert(spans.end(), old.begin() + hyp_name.end, old.end());
    example.word_frame_spans = std::move(spans);
  }
  example.hypothesis = join_words(new_words);
  example.replaced = true;
  example.target = build_targets(example.reference, example.hypothesis, example.name_word_span, example.bias_list,
                                 example.anti_context, chunk_size);
  return example;
}

TrainingExample make_anti_example(TrainingExample example, const RefHypPairs& pairs, AntiMode mode,
                                  const AugmentConfig& cfg, Rng& rng, int chunk_size) {
  std::vector<std::string> phrases;
  for (const auto& p : example.bias_list.phrases()) {
    if (p != example.name) phrases.push_back(p);
  }
  if (mode == AntiMode::kRemoveAndConfuse) {
    const auto it = pairs.find(example.name);
    if (it != pairs.end()) {
      std::vector<std::string> variants;
      for (const auto& v : it->second) {
        if (v != example.name && std::find(phrases.begin(), phrases.end(), v) == phrases.end()) variants.push_back(v);
      }
      const auto take = std::min<std::size_t>(static_cast<std::size_t>(cfg.n_similar), variants.size());
      for (std::size_t i = 0; i < take; ++i) {
        const std::size_t j = std::uniform_int_distribution<std::size_t>(i, variants.size() - 1)(rng);
        std::swap(variants[i], variants[j]);
        const auto pos = std::uniform_int_distribution<std::size_t>(0, phrases.size())(rng);
        phrases.insert(phrases.begin() + static_cast<std::ptrdiff_t>(pos), variants[i]);
      }
    }
  }
  if (phrases.empty()) throw std::invalid_argument("anti-context example would have an empty bias list");
  example.bias_list = BiasList(std::move(phrases));
  example.anti_context = true;
  example.reference = example.hypothesis;
  example.target = build_targets(example.reference, example.hypothesis, example.name_word_span, example.bias_list,
                                 /*anti_context=*/true, chunk_size);
  return example;
}

TrainingExample build_training_example(const Utterance& utt, const BiasList& pool, const RefHypPairs& pairs,
                                       const AugmentConfig& cfg, int s_kmax, Rng& rng, int chunk_size) {
  if (s_kmax < 1) throw std::invalid_argument("s_kmax must be >= 1");
  TrainingExample ex = make_example(utt, sample_bias_list(utt.name, pool, cfg, rng));
  ex = replace_hypothesis(std::move(ex), pairs, cfg, rng, chunk_size);
  if (cfg.preselect_k > 0) ex.bias_list = to_bias_list(preselect(ex.bias_list, ex.hypothesis, cfg.preselect_k));
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  if (ex.bias_list.find(ex.name) < 0) {
    ex.anti_context = true;
    ex.reference = ex.hypothesis;
    ex.target = build_targets(ex.reference, ex.hypothesis, ex.name_word_span, ex.bias_list, true, chunk_size);
  } else if (u01(rng) < cfg.p_anti) {
    const AntiMode mode = u01(rng) < cfg.p_confuse ? AntiMode::kRemoveAndConfuse : AntiMode::kRemove;
    ex = make_anti_example(std::move(ex), pairs, mode, cfg, rng, chunk_size);
  } else {
    ex.target = build_targets(ex.reference, ex.hypothesis, ex.name_word_span, ex.bias_list, false, chunk_size);
  }
  ex.s_k = std::uniform_int_distribution<int>(1, s_kmax)(rng);
  return ex;
}

}  // namespace ctxspell
