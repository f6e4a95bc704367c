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

#ifndef CTXSPELL_TRAIN_HPP_
#define CTXSPELL_TRAIN_HPP_

// Tagging loss, the Adam training loop, partial adaptation of acoustic
// components on top of a frozen text-only model, and teacher-student
// distillation.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "ctxspell/augment.hpp"
#include "ctxspell/model.hpp"

namespace ctxspell {

// Cross-entropy of the class head plus cross-entropy of the context-index
// head, each averaged over unmasked positions. Inputs are probability rows.
// `mask[t] == false` excludes position t. With every position masked the
// loss is 0 and `*all_masked` (if given) is set. Throws std::domain_error on
// non-finite input and std::invalid_argument on shape or index errors.
double tagging_loss(const Matrix<double>& p_cls, const Matrix<double>& p_cind, std::span<const int> y_cls,
                    std::span<const int> y_cind, std::span<const bool> mask = {}, bool* all_masked = nullptr);

// Graph form of the same loss over logits; returns the scalar node.
template <typename T>
Var tagging_loss(Graph<T>& graph, const DecoderOutput& out, const TagTarget& target);

struct DistillConfig {
  double temperature = 2.0;
  double weight_hard = 0.5;
  double weight_soft = 0.5;
};

enum class RSampling { kFixed, kUniform };

struct TrainConfig {
  int steps = 12000;
  int batch_size = 8;
  double peak_lr = 3e-3;
  int warmup_steps = 400;
  double beta1 = 0.9;
  double beta2 = 0.98;
  double adam_eps = 1e-9;
  double clip_norm = 1.0;
  std::uint64_t seed = 1;
  bool partial = false;
  RSampling r_sampling = RSampling::kUniform;
  double r_fixed = 1.0;
  int log_every = 10;
  std::optional<DistillConfig> distill;

  void validate() const;
  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
};

// peak * min(step / warmup, sqrt(warmup / step)) for step >= 1.
double learning_rate(const TrainConfig& cfg, int step);

struct LogEntry {
  int step = 0;
  double loss = 0.0;
  double lr = 0.0;
  double r = 0.0;
};

struct FitResult {
  std::vector<LogEntry> log;
  std::vector<double> step_loss;  // mean batch loss for every step
};

nlohmann::json log_to_json(const std::vector<LogEntry>& log);

// Example for (step, slot) of a batch. Must be a pure function of its
// arguments so training is reproducible.
using ExampleSource = std::function<TrainingExample(int step, int slot)>;

// Streams augmented examples from `utterances`; the returned source borrows
// every argument.
ExampleSource augmented_source(const std::vector<Utterance>& utterances, const BiasList& pool,
                               const RefHypPairs& pairs, const AugmentConfig& cfg, int s_kmax, std::uint64_t seed,
                               int chunk_size = kDefaultChunkSize);
// Cycles over fixed examples.
ExampleSource fixed_source(std::vector<TrainingExample> examples);

// Adam with warmup + inverse-sqrt decay and global-norm clipping. With
// cfg.partial only new components are updated. Throws std::runtime_error
// when the loss turns non-finite.
FitResult fit(Model<float>& model, const ExampleSource& source, const TrainConfig& cfg);

// New model of `variant` sharing every tensor of a text-only base; acoustic
// tensors freshly initialized (output projections zero).
Model<float> extend_with_acoustics(const Model<float>& base, Variant variant, std::uint64_t seed);

// extend_with_acoustics + fit with the freeze mask. Throws
// std::invalid_argument when `base` is not text-only or `variant` is.
Model<float> partial_adapt(const Model<float>& base, Variant variant, const ExampleSource& source,
                           TrainConfig cfg, FitResult* result = nullptr);

// Trains a fresh student of `student_config` against the teacher's softened
// distributions on the same examples. Throws std::invalid_argument when the
// student is not smaller than the teacher and std::runtime_error on a
// teacher/student output mismatch.
Model<float> distill(const Model<float>& teacher, const ModelConfig& student_config, const ExampleSource& source,
                     const TrainConfig& cfg, FitResult* result = nullptr);

// Inputs the network needs for one example.
struct ExampleInputs {
  TokenizedText tokens;
  std::vector<TokenizedText> phrases;
  AudioFeatureMask mask;
};

ExampleInputs prepare_inputs(const TrainingExample& ex, const ModelConfig& config);

// Runs the network on one example inside `fp`'s graph.
template <typename T>
DecoderOutput run_example(ForwardPass<T>& fp, const ExampleInputs& in, const TrainingExample& ex,
                          const ModelConfig& config, T r);

// Largest relative rise of the `smooth`-step moving average of `step_loss`
// between the start and end of any `window`-step span.
double max_smoothed_rise(const std::vector<double>& step_loss, int smooth = 50, int window = 500);

}  // namespace ctxspell

#endif  // CTXSPELL_TRAIN_HPP_
