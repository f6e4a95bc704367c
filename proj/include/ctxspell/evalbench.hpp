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

#ifndef CTXSPELL_EVALBENCH_HPP_
#define CTXSPELL_EVALBENCH_HPP_

// Metrics, coverage sweeps over bias lists, the end-to-end corrector, and
// per-component latency measurement with and without the embedding cache.

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "ctxspell/bias_cache.hpp"
#include "ctxspell/model.hpp"
#include "ctxspell/ranker.hpp"
#include "ctxspell/simdata.hpp"

namespace ctxspell {

// True when `phrase` occurs in `text` as whole words (both normalized).
bool contains_phrase(std::string_view text, std::string_view phrase);

// Percent of outputs containing their utterance's name as whole words.
// Throws std::invalid_argument on a length mismatch.
double name_recall(const std::vector<std::string>& outputs, const std::vector<std::string>& names);
double name_recall(const std::vector<std::string>& outputs, const std::vector<Utterance>& utterances);

// Total word edit distance over total reference words, as a percent.
// Throws std::invalid_argument on a length mismatch or zero reference words.
double wer(const std::vector<std::string>& outputs, const std::vector<std::string>& references);

struct CorrectOptions {
  int k = 3;       // preselected phrases; <= 0 passes the whole list
  double r = 1.0;  // incorporation ratio
  BiasEmbeddingCache<float>* cache = nullptr;
  ComponentTimes* times = nullptr;
  double* ranker_ms = nullptr;
};

// ranker -> forward -> span decoding -> rewrite. Empty hypotheses come back
// unchanged.
std::string correct(const Model<float>& model, const InferenceInput& input, const BiasList& bias_list,
                    const CorrectOptions& options = {});
std::string correct(const Model<float>& model, const Utterance& utt, const BiasList& bias_list,
                    const CorrectOptions& options = {});

std::vector<std::string> correct_all(const Model<float>& model, const std::vector<Utterance>& utts,
                                     const BiasList& bias_list, const CorrectOptions& options = {});

struct SystemUnderTest {
  std::string name;
  const Model<float>* model = nullptr;  // null = raw hypothesis baseline
};

struct ReportRow {
  std::string system;
  int coverage = 0;
  double name_recall = 0.0;
  double wer = 0.0;
  int n_utts = 0;
  int n_names = 0;
};

struct EvalReport {
  std::vector<ReportRow> rows;
  // Percent of utterances changed when no listed phrase is spoken, per
  // system; only filled when an anti-context list is given.
  std::map<std::string, double> false_correction_rate;

  const ReportRow& row(std::string_view system, int coverage) const;
  nlohmann::json to_json() const;
  // Systems as rows, coverage levels as recall/WER column pairs.
  std::string render_table() const;
};

// The baseline row is always included first under the name "baseline".
EvalReport coverage_sweep(const std::vector<SystemUnderTest>& systems, const std::vector<Utterance>& test,
                          const std::map<int, BiasList>& lists, int k, double r,
                          const BiasList* anti_context_list = nullptr);

// Percent of utterances whose output differs from the hypothesis.
double false_correction_rate(const Model<float>& model, const std::vector<Utterance>& test,
                             const BiasList& anti_context_list, int k, double r);

struct LatencyBreakdown {
  ComponentTimes mean_ms;       // per utterance, cache off
  ComponentTimes cached_mean_ms;  // per utterance, cache warm
  double ranker_mean_ms = 0.0;
  int n_utts = 0;
  int list_size = 0;
  int k = 0;
  // Bias-encoder time of the first request of a session (cold cache) and
  // of the same request repeated (warm cache).
  double first_pass_bias_ms = 0.0;
  double second_pass_bias_ms = 0.0;
  double cache_hit_rate = 0.0;
  std::size_t cache_capacity = 0;
  bool outputs_identical = true;

  static double proportion(const ComponentTimes& t, double part) { return t.total_ms() > 0 ? part / t.total_ms() : 0; }
  nlohmann::json to_json() const;
  std::string render_table() const;
};

struct BenchOptions {
  int k = 0;                    // <= 0 sends the whole list through the bias encoder
  double r = 1.0;
  std::size_t cache_capacity = 1000;
  int warmup = 10;              // utterances excluded from timing
  int repeats = 3;              // median over repeats
  int max_utts = 50;            // timed utterances
};

LatencyBreakdown bench_latency(const Model<float>& model, const std::vector<Utterance>& test,
                               const BiasList& bias_list, const BenchOptions& options = {});

}  // namespace ctxspell

#endif  // CTXSPELL_EVALBENCH_HPP_
