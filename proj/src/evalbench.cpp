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

#include "ctxspell/evalbench.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <set>
#include <sstream>
#include <stdexcept>

#include "ctxspell/tagging.hpp"

namespace ctxspell {

namespace {

using Clock = std::chrono::steady_clock;

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

ComponentTimes median_times(const std::vector<ComponentTimes>& runs) {
  std::vector<double> a, t, b, d;
  for (const auto& r : runs) {
    a.push_back(r.adapter_ms);
    t.push_back(r.text_encoder_ms);
    b.push_back(r.bias_encoder_ms);
    d.push_back(r.decoder_ms);
  }
  ComponentTimes out;
  out.adapter_ms = median(a);
  out.text_encoder_ms = median(t);
  out.bias_encoder_ms = median(b);
  out.decoder_ms = median(d);
  return out;
}

ComponentTimes scaled(ComponentTimes t, double s) {
  t.adapter_ms *= s;
  t.text_encoder_ms *= s;
  t.bias_encoder_ms *= s;
  t.decoder_ms *= s;
  return t;
}

nlohmann::json times_json(const ComponentTimes& t) {
  return {{"adapter_ms", t.adapter_ms},
          {"text_encoder_ms", t.text_encoder_ms},
          {"bias_encoder_ms", t.bias_encoder_ms},
          {"decoder_ms", t.decoder_ms},
          {"total_ms", t.total_ms()}};
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

}  // namespace

bool contains_phrase(std::string_view text, std::string_view phrase) {
  const std::vector<std::string> words = split_words(text);
  const std::vector<std::string> target = split_words(phrase);
  if (target.empty() || target.size() > words.size()) return false;
  for (std::size_t i = 0; i + target.size() <= words.size(); ++i) {
    if (std::equal(target.begin(), target.end(), words.begin() + static_cast<std::ptrdiff_t>(i))) return true;
  }
  return false;
}

double name_recall(const std::vector<std::string>& outputs, const std::vector<std::string>& names) {
  if (outputs.size() != names.size()) throw std::invalid_argument("outputs and names differ in length");
  if (outputs.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < outputs.size(); ++i) hits += contains_phrase(outputs[i], names[i]) ? 1 : 0;
  return 100.0 * static_cast<double>(hits) / static_cast<double>(outputs.size());
}

double name_recall(const std::vector<std::string>& outputs, const std::vector<Utterance>& utterances) {
  std::vector<std::string> names;
  names.reserve(utterances.size());
  for (const auto& u : utterances) names.push_back(u.name);
  return name_recall(outputs, names);
}

double wer(const std::vector<std::string>& outputs, const std::vector<std::string>& references) {
  if (outputs.size() != references.size()) throw std::invalid_argument("outputs and references differ in length");
  long long errors = 0;
  long long words = 0;
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    const auto ref = split_words(references[i]);
    errors += word_edit_distance(ref, split_words(outputs[i]));
    words += static_cast<long long>(ref.size());
  }
  if (words == 0) throw std::invalid_argument("reference corpus has no words");
  return 100.0 * static_cast<double>(errors) / static_cast<double>(words);
}

std::string correct(const Model<float>& model, const InferenceInput& input, const BiasList& bias_list,
                    const CorrectOptions& options) {
  if (bias_list.empty()) throw std::invalid_argument("bias list must not be empty");
  const std::string hyp = normalize(input.hypothesis);
  if (hyp.empty()) return hyp;
  BiasList selected;
  const BiasList* used = &bias_list;
  if (options.k > 0) {
    const auto t0 = Clock::now();
    selected = to_bias_list(preselect(bias_list, hyp, options.k));
    if (options.ranker_ms) {
      *options.ranker_ms += std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
    }
    used = &selected;
  }
  InferenceOptions io;
  io.r = options.r;
  io.cache = options.cache;
  io.times = options.times;
  const Prediction<float> pred = model.forward(input, *used, io);
  return apply_correction(hyp, extract_spans(pred.tags.cls, pred.tags.cind), *used, model.config().chunk_size);
}

std::string correct(const Model<float>& model, const Utterance& utt, const BiasList& bias_list,
                    const CorrectOptions& options) {
  InferenceInput input;
  input.hypothesis = utt.hypothesis;
  if (model.config().uses_acoustics()) {
    input.frames = &utt.frames;
    input.word_frame_spans = utt.word_frame_spans;
  }
  return correct(model, input, bias_list, options);
}

std::vector<std::string> correct_all(const Model<float>& model, const std::vector<Utterance>& utts,
                                     const BiasList& bias_list, const CorrectOptions& options) {
  std::vector<std::string> out;
  out.reserve(utts.size());
  for (const auto& u : utts) out.push_back(correct(model, u, bias_list, options));
  return out;
}

const ReportRow& EvalReport::row(std::string_view system, int coverage) const {
  for (const auto& r : rows) {
    if (r.system == system && r.coverage == coverage) return r;
  }
  throw std::out_of_range("no report row for " + std::string(system) + " at " + std::to_string(coverage) + "%");
}

nlohmann::json EvalReport::to_json() const {
  nlohmann::json rs = nlohmann::json::array();
  for (const auto& r : rows) {
    rs.push_back({{"system", r.system},
                  {"coverage", r.coverage},
                  {"name_recall", r.name_recall},
                  {"wer", r.wer},
                  {"n_utts", r.n_utts},
                  {"n_names", r.n_names}});
  }
  nlohmann::json out = {{"rows", rs}};
  if (!false_correction_rate.empty()) out["false_correction_rate"] = false_correction_rate;
  return out;
}

std::string EvalReport::render_table() const {
  std::vector<std::string> systems;
  std::set<int> coverages;
  for (const auto& r : rows) {
    if (std::find(systems.begin(), systems.end(), r.system) == systems.end()) systems.push_back(r.system);
    coverages.insert(r.coverage);
  }
  std::ostringstream os;
  char buf[128];
  std::snprintf(buf, sizeof(buf), "%-14s", "system");
  os << buf;
  for (int c : coverages) {
    std::snprintf(buf, sizeof(buf), " | %3d%% recall    wer", c);
    os << buf;
  }
  if (!false_correction_rate.empty()) os << " | false-corr";
  os << '\n';
  for (const auto& s : systems) {
    std::snprintf(buf, sizeof(buf), "%-14s", s.c_str());
    os << buf;
    for (int c : coverages) {
      const ReportRow& r = row(s, c);
      std::snprintf(buf, sizeof(buf), " | %11.2f %6.2f", r.name_recall, r.wer);
      os << buf;
    }
    if (!false_correction_rate.empty()) {
      const auto it = false_correction_rate.find(s);
      os << " | " << (it == false_correction_rate.end() ? std::string("       -") : fmt("%9.2f", it->second));
    }
    os << '\n';
  }
  return os.str();
}

EvalReport coverage_sweep(const std::vector<SystemUnderTest>& systems, const std::vector<Utterance>& test,
                          const std::map<int, BiasList>& lists, int k, double r,
                          const BiasList* anti_context_list) {
  if (test.empty()) throw std::invalid_argument("empty test set");
  std::vector<std::string> hyps, refs, names;
  std::set<std::string> distinct;
  for (const auto& u : test) {
    hyps.push_back(normalize(u.hypothesis));
    refs.push_back(normalize(u.reference));
    names.push_back(u.name);
    distinct.insert(u.name);
  }
  const int n_utts = static_cast<int>(test.size());
  const int n_names = static_cast<int>(distinct.size());
  EvalReport report;
  const double base_recall = name_recall(hyps, names);
  const double base_wer = wer(hyps, refs);
  for (const auto& [coverage, _] : lists) {
    report.rows.push_back({"baseline", coverage, base_recall, base_wer, n_utts, n_names});
  }
  if (anti_context_list) report.false_correction_rate["baseline"] = 0.0;
  CorrectOptions opt;
  opt.k = k;
  opt.r = r;
  for (const auto& sys : systems) {
    if (sys.model == nullptr) continue;
    for (const auto& [coverage, list] : lists) {
      const auto outputs = correct_all(*sys.model, test, list, opt);
      report.rows.push_back({sys.name, coverage, name_recall(outputs, names), wer(outputs, refs), n_utts, n_names});
    }
    if (anti_context_list) {
      report.false_correction_rate[sys.name] = false_correction_rate(*sys.model, test, *anti_context_list, k, r);
    }
  }
  return report;
}

double false_correction_rate(const Model<float>& model, const std::vector<Utterance>& test,
                             const BiasList& anti_context_list, int k, double r) {
  if (test.empty()) throw std::invalid_argument("empty test set");
  CorrectOptions opt;
  opt.k = k;
  opt.r = r;
  int changed = 0;
  for (const auto& u : test) changed += correct(model, u, anti_context_list, opt) != normalize(u.hypothesis) ? 1 : 0;
  return 100.0 * changed / static_cast<double>(test.size());
}

nlohmann::json LatencyBreakdown::to_json() const {
  auto props = [](const ComponentTimes& t) {
    return nlohmann::json{{"adapter", proportion(t, t.adapter_ms)},
                          {"text_encoder", proportion(t, t.text_encoder_ms)},
                          {"bias_encoder", proportion(t, t.bias_encoder_ms)},
                          {"decoder", proportion(t, t.decoder_ms)}};
  };
  return {{"n_utts", n_utts},
          {"list_size", list_size},
          {"k", k},
          {"no_cache", {{"mean_ms", times_json(mean_ms)}, {"proportion", props(mean_ms)}}},
          {"cache", {{"mean_ms", times_json(cached_mean_ms)}, {"proportion", props(cached_mean_ms)}}},
          {"ranker_mean_ms", ranker_mean_ms},
          {"first_pass_bias_ms", first_pass_bias_ms},
          {"second_pass_bias_ms", second_pass_bias_ms},
          {"cache_hit_rate", cache_hit_rate},
          {"cache_capacity", cache_capacity},
          {"outputs_identical", outputs_identical}};
}

std::string LatencyBreakdown::render_table() const {
  std::ostringstream os;
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%-16s | %10s %7s | %10s %7s\n", "component", "no cache", "share", "cache",
                "share");
  os << buf;
  auto line = [&](const char* name, double a, double b) {
    std::snprintf(buf, sizeof(buf), "%-16s | %8.3fms %6.1f%% | %8.3fms %6.1f%%\n", name, a,
                  100.0 * proportion(mean_ms, a), b, 100.0 * proportion(cached_mean_ms, b));
    os << buf;
  };
  line("acoustic adapter", mean_ms.adapter_ms, cached_mean_ms.adapter_ms);
  line("text encoder", mean_ms.text_encoder_ms, cached_mean_ms.text_encoder_ms);
  line("bias encoder", mean_ms.bias_encoder_ms, cached_mean_ms.bias_encoder_ms);
  line("decoder", mean_ms.decoder_ms, cached_mean_ms.decoder_ms);
  line("total", mean_ms.total_ms(), cached_mean_ms.total_ms());
  std::snprintf(buf, sizeof(buf),
                "bias encoder, first request %.3fms, repeated request %.3fms; cache hit rate %.1f%%; outputs %s\n",
                first_pass_bias_ms, second_pass_bias_ms, 100.0 * cache_hit_rate,
                outputs_identical ? "identical" : "DIFFER");
  os << buf;
  return os.str();
}

LatencyBreakdown bench_latency(const Model<float>& model, const std::vector<Utterance>& test,
                               const BiasList& bias_list, const BenchOptions& options) {
  if (test.empty()) throw std::invalid_argument("empty test set");
  if (bias_list.empty()) throw std::invalid_argument("bias list must not be empty");
  const int repeats = std::max(1, options.repeats);
  const int n_timed = std::max(1, options.max_utts);
  auto utt_at = [&](int i) -> const Utterance& { return test[static_cast<std::size_t>(i) % test.size()]; };

  LatencyBreakdown out;
  out.list_size = static_cast<int>(bias_list.size());
  out.k = options.k;
  out.n_utts = n_timed;
  out.cache_capacity = options.cache_capacity;

  CorrectOptions base;
  base.k = options.k;
  base.r = options.r;
  for (int i = 0; i < options.warmup; ++i) correct(model, utt_at(i), bias_list, base);

  std::vector<std::string> reference_outputs;
  std::vector<ComponentTimes> runs;
  std::vector<double> ranker_runs;
  for (int rep = 0; rep < repeats; ++rep) {
    ComponentTimes total;
    double ranker = 0.0;
    CorrectOptions opt = base;
    opt.times = &total;
    opt.ranker_ms = &ranker;
    std::vector<std::string> outputs;
    for (int i = 0; i < n_timed; ++i) outputs.push_back(correct(model, utt_at(options.warmup + i), bias_list, opt));
    if (rep == 0) reference_outputs = std::move(outputs);
    runs.push_back(scaled(total, 1.0 / n_timed));
    ranker_runs.push_back(ranker / n_timed);
  }
  out.mean_ms = median_times(runs);
  out.ranker_mean_ms = median(ranker_runs);

  BiasEmbeddingCache<float> cache(options.cache_capacity);
  CorrectOptions cached = base;
  cached.cache = &cache;
  for (int i = 0; i < n_timed; ++i) {
    out.outputs_identical &=
        correct(model, utt_at(options.warmup + i), bias_list, cached) == reference_outputs[static_cast<std::size_t>(i)];
  }
  runs.clear();
  for (int rep = 0; rep < repeats; ++rep) {
    ComponentTimes total;
    cached.times = &total;
    for (int i = 0; i < n_timed; ++i) {
      out.outputs_identical &= correct(model, utt_at(options.warmup + i), bias_list, cached) ==
                               reference_outputs[static_cast<std::size_t>(i)];
    }
    runs.push_back(scaled(total, 1.0 / n_timed));
  }
  out.cached_mean_ms = median_times(runs);
  out.cache_hit_rate = cache.hit_rate();

  std::vector<double> first, second;
  for (int rep = 0; rep < repeats; ++rep) {
    BiasEmbeddingCache<float> session(options.cache_capacity);
    CorrectOptions opt = base;
    opt.cache = &session;
    ComponentTimes t1, t2;
    opt.times = &t1;
    correct(model, utt_at(options.warmup), bias_list, opt);
    opt.times = &t2;
    correct(model, utt_at(options.warmup), bias_list, opt);
    first.push_back(t1.bias_encoder_ms);
    second.push_back(t2.bias_encoder_ms);
  }
  out.first_pass_bias_ms = median(first);
  out.second_pass_bias_ms = median(second);
  return out;
}

}  // namespace ctxspell
