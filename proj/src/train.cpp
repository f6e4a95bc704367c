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

#include "ctxspell/train.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <stdexcept>

namespace ctxspell {

namespace {

void require_known_keys(const nlohmann::json& j, const nlohmann::json& defaults, const char* what) {
  if (!j.is_object()) throw std::invalid_argument(std::string(what) + " must be an object");
  for (const auto& [key, _] : j.items()) {
    if (!defaults.contains(key)) throw std::invalid_argument(std::string("unknown ") + what + " key: " + key);
  }
}

nlohmann::json distill_to_json(const DistillConfig& d) {
  return {{"temperature", d.temperature}, {"weight_hard", d.weight_hard}, {"weight_soft", d.weight_soft}};
}

DistillConfig distill_from_json(const nlohmann::json& j) {
  DistillConfig d;
  require_known_keys(j, distill_to_json(d), "distill config");
  if (j.contains("temperature")) d.temperature = j.at("temperature").get<double>();
  if (j.contains("weight_hard")) d.weight_hard = j.at("weight_hard").get<double>();
  if (j.contains("weight_soft")) d.weight_soft = j.at("weight_soft").get<double>();
  return d;
}

std::vector<int> class_targets(const TagTarget& target) {
  std::vector<int> out;
  out.reserve(target.cls.size());
  for (Tag t : target.cls) out.push_back(static_cast<int>(t));
  return out;
}

}  // namespace

double tagging_loss(const Matrix<double>& p_cls, const Matrix<double>& p_cind, std::span<const int> y_cls,
                    std::span<const int> y_cind, std::span<const bool> mask, bool* all_masked) {
  const auto n = static_cast<std::size_t>(p_cls.rows());
  if (p_cind.rows() != p_cls.rows() || y_cls.size() != n || y_cind.size() != n ||
      (!mask.empty() && mask.size() != n)) {
    throw std::invalid_argument("loss inputs disagree on the number of positions");
  }
  if (p_cls.cols() != kNumTags) throw std::invalid_argument("class distribution must have 4 columns");
  if (!p_cls.allFinite() || !p_cind.allFinite()) throw std::domain_error("non-finite prediction");
  double cls_sum = 0.0;
  double cind_sum = 0.0;
  int count = 0;
  for (std::size_t t = 0; t < n; ++t) {
    if (!mask.empty() && !mask[t]) continue;
    const int yc = y_cls[t];
    const int yi = y_cind[t];
    if (yc < 0 || yc >= p_cls.cols() || yi < 0 || yi >= p_cind.cols()) {
      throw std::invalid_argument("target index out of range at position " + std::to_string(t));
    }
    cls_sum -= std::log(p_cls(static_cast<Eigen::Index>(t), yc));
    cind_sum -= std::log(p_cind(static_cast<Eigen::Index>(t), yi));
    ++count;
  }
  if (all_masked) *all_masked = count == 0;
  if (count == 0) {
    std::cerr << "warning: every position is masked; loss defined as 0\n";
    return 0.0;
  }
  return cls_sum / count + cind_sum / count;
}

template <typename T>
Var tagging_loss(Graph<T>& graph, const DecoderOutput& out, const TagTarget& target) {
  const std::vector<int> cls = class_targets(target);
  return graph.add(graph.cross_entropy(out.cls_logits, cls), graph.cross_entropy(out.cind_logits, target.cind));
}

template Var tagging_loss<float>(Graph<float>&, const DecoderOutput&, const TagTarget&);
template Var tagging_loss<double>(Graph<double>&, const DecoderOutput&, const TagTarget&);

void TrainConfig::validate() const {
  if (steps < 0) throw std::invalid_argument("steps must be >= 0");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (!(peak_lr >= 0.0)) throw std::invalid_argument("peak_lr must be >= 0");
  if (warmup_steps < 1) throw std::invalid_argument("warmup_steps must be >= 1");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw std::invalid_argument("Adam betas must be in [0, 1)");
  }
  if (!(adam_eps > 0.0)) throw std::invalid_argument("adam_eps must be positive");
  if (!(clip_norm >= 0.0)) throw std::invalid_argument("clip_norm must be >= 0 (0 disables)");
  if (!(r_fixed >= 0.0 && r_fixed <= 1.0)) throw std::invalid_argument("r_fixed must be in [0, 1]");
  if (log_every < 1) throw std::invalid_argument("log_every must be >= 1");
  if (distill) {
    if (!(distill->temperature > 0.0)) throw std::invalid_argument("temperature must be positive");
    if (distill->weight_hard < 0.0 || distill->weight_soft < 0.0) {
      throw std::invalid_argument("distillation weights must be >= 0");
    }
  }
}

nlohmann::json TrainConfig::to_json() const {
  return {{"steps", steps},
          {"batch_size", batch_size},
          {"peak_lr", peak_lr},
          {"warmup_steps", warmup_steps},
          {"beta1", beta1},
          {"beta2", beta2},
          {"adam_eps", adam_eps},
          {"clip_norm", clip_norm},
          {"seed", seed},
          {"partial", partial},
          {"r_sampling", r_sampling == RSampling::kFixed ? "fixed" : "uniform"},
          {"r_fixed", r_fixed},
          {"log_every", log_every},
          {"distill", distill ? distill_to_json(*distill) : nlohmann::json(nullptr)}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  TrainConfig c;
  require_known_keys(j, c.to_json(), "train config");
  auto get = [&j](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  get("steps", c.steps);
  get("batch_size", c.batch_size);
  get("peak_lr", c.peak_lr);
  get("warmup_steps", c.warmup_steps);
  get("beta1", c.beta1);
  get("beta2", c.beta2);
  get("adam_eps", c.adam_eps);
  get("clip_norm", c.clip_norm);
  get("seed", c.seed);
  get("partial", c.partial);
  get("r_fixed", c.r_fixed);
  get("log_every", c.log_every);
  if (j.contains("r_sampling")) {
    const auto s = j.at("r_sampling").get<std::string>();
    if (s == "fixed") {
      c.r_sampling = RSampling::kFixed;
    } else if (s == "uniform") {
      c.r_sampling = RSampling::kUniform;
    } else {
      throw std::invalid_argument("r_sampling must be \"fixed\" or \"uniform\"");
    }
  }
  if (j.contains("distill") && !j.at("distill").is_null()) c.distill = distill_from_json(j.at("distill"));
  c.validate();
  return c;
}

double learning_rate(const TrainConfig& cfg, int step) {
  const double s = std::max(step, 1);
  const double w = cfg.warmup_steps;
  return cfg.peak_lr * std::min(s / w, std::sqrt(w / s));
}

nlohmann::json log_to_json(const std::vector<LogEntry>& log) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& e : log) out.push_back({{"step", e.step}, {"loss", e.loss}, {"lr", e.lr}, {"r", e.r}});
  return out;
}

ExampleSource augmented_source(const std::vector<Utterance>& utterances, const BiasList& pool,
                               const RefHypPairs& pairs, const AugmentConfig& cfg, int s_kmax, std::uint64_t seed,
                               int chunk_size) {
  if (utterances.empty()) throw std::invalid_argument("no training utterances");
  cfg.validate();
  return [&utterances, &pool, &pairs, cfg, s_kmax, seed, chunk_size](int step, int slot) {
    Rng rng(mix_seed(mix_seed(seed, static_cast<std::uint64_t>(step)), static_cast<std::uint64_t>(slot)));
    const Utterance& utt = utterances[std::uniform_int_distribution<std::size_t>(0, utterances.size() - 1)(rng)];
    return build_training_example(utt, pool, pairs, cfg, s_kmax, rng, chunk_size);
  };
}

ExampleSource fixed_source(std::vector<TrainingExample> examples) {
  if (examples.empty()) throw std::invalid_argument("no examples");
  return [examples = std::move(examples)](int step, int slot) {
    const auto n = static_cast<long long>(examples.size());
    const long long i = (static_cast<long long>(step) * 7919 + slot) % n;
    return examples[static_cast<std::size_t>(i)];
  };
}

ExampleInputs prepare_inputs(const TrainingExample& ex, const ModelConfig& config) {
  ExampleInputs in;
  in.tokens = tokenize(ex.hypothesis, config.chunk_size);
  for (const auto& p : ex.bias_list.phrases()) in.phrases.push_back(tokenize(p, config.chunk_size));
  if (config.uses_acoustics()) {
    if (ex.frames == nullptr || ex.frames->rows() == 0) {
      throw std::invalid_argument("acoustic variant requires frames");
    }
    if (ex.word_frame_spans.size() != static_cast<std::size_t>(in.tokens.num_words())) {
      throw std::invalid_argument("acoustic variant requires one frame span per hypothesis word");
    }
    const int s_k = std::clamp(ex.s_k, 1, config.s_kmax);
    in.mask = build_audio_mask(ex.word_frame_spans, in.tokens.word_of_token, static_cast<int>(ex.frames->rows()),
                               s_k);
  }
  return in;
}

template <typename T>
DecoderOutput run_example(ForwardPass<T>& fp, const ExampleInputs& in, const TrainingExample& ex,
                          const ModelConfig& config, T r) {
  Var adapted;
  if (config.uses_acoustics()) adapted = fp.adapt_acoustics(ex.frames->template cast<T>());
  const Var text = fp.encode_text(in.tokens, adapted, &in.mask, r);
  const Var bias = fp.encode_bias(in.phrases);
  return fp.decode(text, bias, adapted, &in.mask, r);
}

template DecoderOutput run_example<float>(ForwardPass<float>&, const ExampleInputs&, const TrainingExample&,
                                          const ModelConfig&, float);
template DecoderOutput run_example<double>(ForwardPass<double>&, const ExampleInputs&, const TrainingExample&,
                                           const ModelConfig&, double);

namespace {

FitResult fit_impl(Model<float>& model, const ExampleSource& source, const TrainConfig& cfg,
                   const Model<float>* teacher) {
  cfg.validate();
  const ModelConfig& mc = model.config();
  Parameters<float>& params = model.params();
  const int n_tensors = params.size();

  std::vector<bool> trainable(static_cast<std::size_t>(n_tensors), true);
  if (cfg.partial) {
    int n_new = 0;
    for (int i = 0; i < n_tensors; ++i) {
      trainable[static_cast<std::size_t>(i)] = is_new_component(params.names()[static_cast<std::size_t>(i)]);
      n_new += trainable[static_cast<std::size_t>(i)] ? 1 : 0;
    }
    if (n_new == 0) throw std::invalid_argument("partial training but the model has no new components");
  }

  Parameters<float> grads = params.zeros_like();
  Parameters<float> m1 = params.zeros_like();
  Parameters<float> m2 = params.zeros_like();
  FitResult result;
  result.step_loss.reserve(static_cast<std::size_t>(cfg.steps));
  const DistillConfig dc = cfg.distill.value_or(DistillConfig{});
  const bool use_teacher = teacher != nullptr;
  const float w_hard = use_teacher ? static_cast<float>(dc.weight_hard) : 1.0f;
  const float w_soft = static_cast<float>(dc.weight_soft);

  for (int step = 1; step <= cfg.steps; ++step) {
    const double lr = learning_rate(cfg, step);
    Rng step_rng(mix_seed(cfg.seed ^ 0x5EEDULL, static_cast<std::uint64_t>(step)));
    const double r = cfg.r_sampling == RSampling::kFixed ? cfg.r_fixed
                                                         : std::uniform_real_distribution<double>(0.0, 1.0)(step_rng);
    grads.set_zero();
    double batch_loss = 0.0;
    for (int slot = 0; slot < cfg.batch_size; ++slot) {
      const TrainingExample ex = source(step, slot);
      if (!ex.target.usable || ex.target.size() == 0) continue;
      const ExampleInputs in = prepare_inputs(ex, mc);
      if (static_cast<std::size_t>(in.tokens.num_tokens()) != ex.target.size()) {
        throw std::invalid_argument("target length does not match the tokenized hypothesis");
      }
      Graph<float> g(/*record=*/true, /*training=*/true,
                     mix_seed(mix_seed(cfg.seed, static_cast<std::uint64_t>(step)), static_cast<std::uint64_t>(slot)));
      ForwardPass<float> fp(model, g, &grads, &trainable);
      const DecoderOutput out = run_example(fp, in, ex, mc, static_cast<float>(r));
      Var loss = g.scale(tagging_loss(g, out, ex.target), w_hard);
      if (use_teacher && w_soft > 0.0f) {
        const ExampleInputs tin = prepare_inputs(ex, teacher->config());
        Graph<float> tg;
        ForwardPass<float> tfp(*teacher, tg);
        const DecoderOutput tout = run_example(tfp, tin, ex, teacher->config(), static_cast<float>(r));
        const Matrix<float>& t_cls = tg.value(tout.cls_logits);
        const Matrix<float>& t_cind = tg.value(tout.cind_logits);
        if (t_cls.rows() != g.value(out.cls_logits).rows() || t_cind.rows() != g.value(out.cind_logits).rows() ||
            t_cind.cols() != g.value(out.cind_logits).cols()) {
          throw std::runtime_error("teacher and student outputs differ in shape");
        }
        const auto temp = static_cast<float>(dc.temperature);
        const Var soft =
            g.add(g.soft_cross_entropy(out.cls_logits, Graph<float>::softmax_rows(t_cls, temp), temp),
                  g.soft_cross_entropy(out.cind_logits, Graph<float>::softmax_rows(t_cind, temp), temp));
        loss = g.axpby(loss, 1.0f, soft, w_soft);
      }
      loss = g.scale(loss, 1.0f / static_cast<float>(cfg.batch_size));
      batch_loss += g.value(loss)(0, 0);
      g.backward(loss);
    }
    if (!std::isfinite(batch_loss)) {
      throw std::runtime_error("loss diverged at step " + std::to_string(step) + " (lr " + std::to_string(lr) +
                               ", r " + std::to_string(r) + ")");
    }

    double norm_sq = 0.0;
    for (int i = 0; i < n_tensors; ++i) {
      if (trainable[static_cast<std::size_t>(i)]) norm_sq += static_cast<double>(grads[i].squaredNorm());
    }
    const double norm = std::sqrt(norm_sq);
    if (!std::isfinite(norm)) throw std::runtime_error("non-finite gradient at step " + std::to_string(step));
    const float clip = (cfg.clip_norm > 0.0 && norm > cfg.clip_norm) ? static_cast<float>(cfg.clip_norm / norm) : 1.0f;

    const auto b1 = static_cast<float>(cfg.beta1);
    const auto b2 = static_cast<float>(cfg.beta2);
    const double c1 = 1.0 - std::pow(cfg.beta1, step);
    const double c2 = 1.0 - std::pow(cfg.beta2, step);
    const auto step_size = static_cast<float>(lr * std::sqrt(c2) / c1);
    const auto eps = static_cast<float>(cfg.adam_eps * std::sqrt(c2));
    for (int i = 0; i < n_tensors; ++i) {
      if (!trainable[static_cast<std::size_t>(i)]) continue;
      Matrix<float>& g = grads[i];
      g *= clip;
      m1[i] = b1 * m1[i] + (1.0f - b1) * g;
      m2[i] = b2 * m2[i] + (1.0f - b2) * g.cwiseProduct(g);
      params[i].array() -= step_size * m1[i].array() / (m2[i].array().sqrt() + eps);
    }

    result.step_loss.push_back(batch_loss);
    if (step % cfg.log_every == 0 || step == 1 || step == cfg.steps) {
      result.log.push_back({step, batch_loss, lr, r});
    }
  }
  return result;
}

}  // namespace

FitResult fit(Model<float>& model, const ExampleSource& source, const TrainConfig& cfg) {
  return fit_impl(model, source, cfg, nullptr);
}

Model<float> extend_with_acoustics(const Model<float>& base, Variant variant, std::uint64_t seed) {
  if (base.config().variant != Variant::kTextOnly) {
    throw std::invalid_argument("base model must be text-only");
  }
  if (variant == Variant::kTextOnly) throw std::invalid_argument("target variant must use acoustics");
  ModelConfig config = base.config();
  config.variant = variant;
  Model<float> fresh(config, seed);
  Parameters<float>& params = fresh.params();
  for (int i = 0; i < params.size(); ++i) {
    const std::string& name = params.names()[static_cast<std::size_t>(i)];
    const int b = base.params().index_of(name);
    if (b >= 0) {
      if (is_new_component(name)) throw std::invalid_argument("base model already has tensor " + name);
      params[i] = base.params()[b];
    } else if (!is_new_component(name)) {
      throw std::invalid_argument("freeze mask does not cover tensor " + name);
    }
  }
  return fresh;
}

Model<float> partial_adapt(const Model<float>& base, Variant variant, const ExampleSource& source,
                           TrainConfig cfg, FitResult* result) {
  Model<float> model = extend_with_acoustics(base, variant, mix_seed(cfg.seed, 0xADA));
  cfg.partial = true;
  FitResult r = fit_impl(model, source, cfg, nullptr);
  if (result) *result = std::move(r);
  return model;
}

Model<float> distill(const Model<float>& teacher, const ModelConfig& student_config, const ExampleSource& source,
                     const TrainConfig& cfg, FitResult* result) {
  Model<float> student(student_config, mix_seed(cfg.seed, 0xD15));
  if (student.params().scalar_count() >= teacher.params().scalar_count()) {
    throw std::invalid_argument("student must have fewer parameters than the teacher");
  }
  TrainConfig c = cfg;
  if (!c.distill) c.distill = DistillConfig{};
  FitResult r = fit_impl(student, source, c, &teacher);
  if (result) *result = std::move(r);
  return student;
}

double max_smoothed_rise(const std::vector<double>& step_loss, int smooth, int window) {
  if (smooth < 1 || window < 1) throw std::invalid_argument("smooth and window must be >= 1");
  const int n = static_cast<int>(step_loss.size());
  if (n < smooth + 1) return 0.0;
  std::vector<double> ma;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    sum += step_loss[static_cast<std::size_t>(i)];
    if (i >= smooth) sum -= step_loss[static_cast<std::size_t>(i - smooth)];
    if (i >= smooth - 1) ma.push_back(sum / smooth);
  }
  const int m = static_cast<int>(ma.size());
  const int w = std::min(window, m - 1);
  double worst = 0.0;
  for (int i = 0; i + w < m; ++i) {
    const double start = ma[static_cast<std::size_t>(i)];
    if (start > 0.0) worst = std::max(worst, (ma[static_cast<std::size_t>(i + w)] - start) / start);
  }
  return worst;
}

}  // namespace ctxspell
