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

// Acceptance suite: one PASS/FAIL line per criterion, exit code 1 when any
// criterion fails. Pass criterion numbers as arguments to run a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "ctxspell/augment.hpp"
#include "ctxspell/bias_cache.hpp"
#include "ctxspell/commands.hpp"
#include "ctxspell/evalbench.hpp"
#include "ctxspell/model.hpp"
#include "ctxspell/ranker.hpp"
#include "ctxspell/run_config.hpp"
#include "ctxspell/simdata.hpp"
#include "ctxspell/tagging.hpp"
#include "ctxspell/train.hpp"
#include "support.hpp"

namespace ctxspell {
namespace {

// ---- pinned limits ----------------------------------------------------------

constexpr int kRankerPairs = 1000;
constexpr double kRankerSeconds = 10.0;
constexpr int kRoundTripExamples = 1000;
constexpr int kIdentityInputs = 100;
constexpr double kIdentityTol = 1e-12;
constexpr double kGradRelTol = 1e-3;
constexpr double kGradSeconds = 60.0;
constexpr int kFreezeSteps = 500;
constexpr int kPropertyInstances = 50;
constexpr double kPermutationTol = 1e-12;
constexpr int kLearningSeeds = 3;
constexpr double kRecallGainPoints = 15.0;
constexpr double kBaselineLow = 45.0;
constexpr double kBaselineHigh = 55.0;
constexpr double kLearningSeconds = 30.0 * 60.0;
constexpr double kMaxSmoothedRise = 0.10;
constexpr double kLossTol = 1e-9;
constexpr int kSessionListSize = 600;
constexpr double kSecondPassRatio = 0.10;

// Evaluation and adaptation recipe of the learning criterion.
constexpr int kEvalK = 3;
constexpr double kEvalR = 1.0;
constexpr int kAdaptSteps = 8000;
constexpr double kAdaptAnti = 0.4;
constexpr double kAdaptConfuse = 1.0;
constexpr int kAdaptSimilar = 3;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

RunConfig seeded(std::uint64_t seed) {
  RunConfig cfg;
  cfg.seed = seed;
  cfg.sim.seed = seed;
  cfg.train.seed = seed;
  return cfg;
}

const Corpus& default_corpus() {
  static const Corpus corpus = gen_corpus(seeded(1).sim);
  return corpus;
}

// ---- 1 ----------------------------------------------------------------------

Outcome ranker_oracle() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(101);
  const Corpus& corpus = default_corpus();
  std::vector<std::string> phrases = corpus.names;
  phrases.insert(phrases.end(), corpus.distractors.begin(), corpus.distractors.end());
  auto pick = [&](const std::vector<std::string>& v) {
    return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng)];
  };
  int weight_mismatch = 0;
  int order_mismatch = 0;
  for (int i = 0; i < kRankerPairs; ++i) {
    const std::string phrase = pick(phrases);
    const Utterance& u = corpus.test[static_cast<std::size_t>(i) % corpus.test.size()];
    const std::string hyp = i % 4 == 3 ? pick(corpus.names) : u.hypothesis;
    weight_mismatch += relevance_weight(phrase, hyp) != testing::oracle_relevance(phrase, hyp) ? 1 : 0;

    if (i % 10 == 0) {
      std::vector<std::string> list;
      for (int j = 0; j < 100; ++j) list.push_back(pick(phrases));
      const BiasList bl(list);
      std::vector<std::pair<double, int>> oracle;
      for (int j = 0; j < static_cast<int>(bl.size()); ++j) {
        oracle.push_back({testing::oracle_relevance(bl[static_cast<std::size_t>(j)], hyp), j});
      }
      std::stable_sort(oracle.begin(), oracle.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
      const auto got = preselect(bl, hyp, 10);
      for (std::size_t j = 0; j < got.size(); ++j) {
        order_mismatch += (got[j].original_index != oracle[j].second || got[j].weight != oracle[j].first) ? 1 : 0;
      }
      order_mismatch += got.size() != 10 ? 1 : 0;
    }
  }
  const double secs = seconds_since(t0);
  return {weight_mismatch == 0 && order_mismatch == 0 && secs < kRankerSeconds,
          std::to_string(kRankerPairs) + " pairs, " + std::to_string(weight_mismatch) + " weight and " +
              std::to_string(order_mismatch) + " top-k mismatches, " + fmt("%.2f", secs) + " s (limit " +
              fmt("%.0f", kRankerSeconds) + " s)"};
}

// ---- 2 ----------------------------------------------------------------------

Outcome tagging_round_trip() {
  const Corpus& corpus = default_corpus();
  Rng rng(202);
  int usable = 0, ok = 0, deleted = 0;
  for (int i = 0; i < kRoundTripExamples; ++i) {
    const Utterance& u = corpus.train[static_cast<std::size_t>(i) % corpus.train.size()];
    const std::vector<std::string> words = split_words(u.reference);
    const std::string wrong = corrupt_name(u.name, corpus.names, 1.0, rng, CorruptionMode::kForced);
    std::vector<std::string> hyp(words.begin(), words.begin() + u.name_word_span.begin);
    for (const auto& w : split_words(wrong)) hyp.push_back(w);
    hyp.insert(hyp.end(), words.begin() + u.name_word_span.end, words.end());
    const std::string hypothesis = join_words(hyp);

    AugmentConfig ac;
    ac.n_bmax = 20;
    BiasList list = sample_bias_list(u.name, corpus.phrase_pool(), ac, rng).list;
    const TagTarget t = build_targets(u.reference, hypothesis, u.name_word_span, list);
    if (!t.usable) {
      ++deleted;
      continue;
    }
    ++usable;
    ok += (check_well_formed(t).empty() &&
           apply_correction(hypothesis, extract_spans(t.cls, t.cind), list) == normalize(u.reference))
              ? 1
              : 0;
  }
  return {usable > 0 && ok == usable, std::to_string(ok) + "/" + std::to_string(usable) +
                                          " substituted examples reproduce the reference (" +
                                          std::to_string(deleted) + " deletions skipped)"};
}

// ---- 3 ----------------------------------------------------------------------

Outcome zero_ratio_identity() {
  const Corpus& corpus = default_corpus();
  ModelConfig mc;
  Model<float> text(mc, 303);
  testing::randomize(text.params(), 304, 0.2);
  const Model<double> text64 = text.cast<double>();
  double worst = 0.0;
  int compared = 0;
  std::mt19937_64 rng(305);
  for (Variant v : {Variant::kEncoderAcoustic, Variant::kDecoderAcoustic}) {
    Model<float> twin = extend_with_acoustics(text, v, 306);
    for (int i = 0; i < twin.params().size(); ++i) {
      // Non-zero acoustic weights so the branch is live at r > 0.
      if (is_new_component(twin.params().names()[static_cast<std::size_t>(i)])) {
        twin.params()[i].setRandom();
        twin.params()[i] *= 0.2f;
      }
    }
    const Model<double> twin64 = twin.cast<double>();
    for (int n = 0; n < kIdentityInputs; ++n) {
      const Utterance& u = corpus.test[static_cast<std::size_t>(rng() % corpus.test.size())];
      std::vector<std::string> phrases{u.name};
      const int extra = std::uniform_int_distribution<int>(0, 9)(rng);
      for (int j = 0; j < extra; ++j) phrases.push_back(corpus.distractors[rng() % corpus.distractors.size()]);
      std::shuffle(phrases.begin(), phrases.end(), rng);
      const BiasList list(phrases);
      const InferenceInput in{u.hypothesis, &u.frames, u.word_frame_spans};
      const auto a = text64.forward(in, list);
      InferenceOptions opt;
      opt.r = 0.0;
      opt.s_k = std::uniform_int_distribution<int>(1, mc.s_kmax)(rng);
      const auto b = twin64.forward(in, list, opt);
      worst = std::max({worst, (a.cls_logits - b.cls_logits).cwiseAbs().maxCoeff(),
                        (a.cind_logits - b.cind_logits).cwiseAbs().maxCoeff()});
      ++compared;
    }
  }
  return {worst <= kIdentityTol, std::to_string(compared) + " EA/DA forwards at r=0, max |diff| " +
                                     fmt("%.3g", worst) + " (limit " + fmt("%.0e", kIdentityTol) + ")"};
}

// ---- 4 ----------------------------------------------------------------------

Outcome gradient_checks() {
  const auto t0 = Clock::now();
  const Corpus corpus = gen_corpus(testing::tiny_sim(404));
  const auto examples = testing::sample_examples(corpus, 3, 405);
  double worst = 0.0;
  std::string worst_name;
  int groups = 0, entries = 0, zero_grad = 0, failed = 0;
  for (Variant v : {Variant::kTextOnly, Variant::kEncoderAcoustic, Variant::kDecoderAcoustic}) {
    Model<double> model(testing::tiny_model(v), 406);
    testing::randomize(model.params(), 407);
    for (const auto& ex : examples) {
      for (const auto& r : testing::grad_check(model, ex, 0.6)) {
        ++groups;
        entries += r.checked;
        failed += testing::grad_ok(r, kGradRelTol) ? 0 : 1;
        if (testing::zero_gradient(r)) {
          ++zero_grad;
        } else if (r.rel_error > worst) {
          worst = r.rel_error;
          worst_name = to_string(v) + ":" + r.tensor;
        }
      }
    }
  }
  const double secs = seconds_since(t0);
  return {failed == 0 && secs < kGradSeconds,
          std::to_string(groups) + " tensor checks over " + std::to_string(entries) + " entries, worst rel. error " +
              fmt("%.2e", worst) + " (" + worst_name + "); " + std::to_string(zero_grad) +
              " zero-gradient checks within round-off " + fmt("%.0e", testing::kFdRoundoffNorm) + "; " +
              std::to_string(failed) + " failures, " + fmt("%.1f", secs) + " s (limits " + fmt("%.0e", kGradRelTol) +
              ", " + fmt("%.0f", kGradSeconds) + " s)"};
}

// ---- 5 ----------------------------------------------------------------------

Outcome freeze_contract() {
  const Corpus& corpus = default_corpus();
  const RunConfig cfg = seeded(1);
  const BiasList pool = corpus.phrase_pool();
  Model<float> base(cfg.model, 501);
  TrainConfig pre = cfg.train;
  pre.steps = 50;
  fit(base, augmented_source(corpus.train, pool, corpus.pairs, cfg.augment, cfg.model.s_kmax, 502), pre);
  TrainConfig adapt = cfg.train;
  adapt.steps = kFreezeSteps;
  int changed_frozen = 0, moved_new = 0, n_new = 0;
  for (Variant v : {Variant::kEncoderAcoustic, Variant::kDecoderAcoustic}) {
    const Model<float> fresh = extend_with_acoustics(base, v, mix_seed(adapt.seed, 0xADA));
    const Model<float> adapted = partial_adapt(
        base, v, augmented_source(corpus.train, pool, corpus.pairs, cfg.augment, cfg.model.s_kmax, 503), adapt);
    for (int i = 0; i < adapted.params().size(); ++i) {
      const std::string& name = adapted.params().names()[static_cast<std::size_t>(i)];
      const Matrix<float>& after = adapted.params()[i];
      if (is_new_component(name)) {
        ++n_new;
        moved_new += after != fresh.params().at(name) ? 1 : 0;
        continue;
      }
      const Matrix<float>& before = base.params().at(name);
      changed_frozen += std::memcmp(before.data(), after.data(), sizeof(float) * static_cast<std::size_t>(after.size()))
                            ? 1
                            : 0;
    }
  }
  return {changed_frozen == 0 && moved_new > 0,
          std::to_string(kFreezeSteps) + " EA and DA adaptation steps: " + std::to_string(changed_frozen) +
              " frozen tensors differ bitwise; " + std::to_string(moved_new) + "/" + std::to_string(n_new) +
              " new tensors moved"};
}

// ---- 6 ----------------------------------------------------------------------

Outcome mask_and_permutation() {
  const Corpus& corpus = default_corpus();
  std::mt19937_64 rng(601);
  int masked_entries = 0, leaked = 0;
  double perm_worst = 0.0;
  for (int n = 0; n < kPropertyInstances; ++n) {
    const Variant v = n % 2 == 0 ? Variant::kEncoderAcoustic : Variant::kDecoderAcoustic;
    ModelConfig mc;
    mc.variant = v;
    Model<double> model(mc, 602 + static_cast<std::uint64_t>(n));
    testing::randomize(model.params(), 700 + static_cast<std::uint64_t>(n), 0.2);
    const Utterance& u = corpus.test[rng() % corpus.test.size()];

    std::vector<std::string> phrases{u.name};
    const int extra = std::uniform_int_distribution<int>(2, 9)(rng);
    for (int j = 0; j < extra; ++j) phrases.push_back(corpus.distractors[rng() % corpus.distractors.size()]);

    TrainingExample ex;
    ex.hypothesis = u.hypothesis;
    ex.bias_list = BiasList(phrases);
    ex.frames = &u.frames;
    ex.word_frame_spans = u.word_frame_spans;
    ex.s_k = 1;
    const ExampleInputs in = prepare_inputs(ex, mc);
    Graph<double> g;
    ForwardPass<double> fp(model, g);
    run_example(fp, in, ex, mc, 1.0);
    for (const Var att : fp.acoustic_attention()) {
      for (const auto& probs : g.attention_probs(att)) {
        for (Eigen::Index t = 0; t < probs.rows(); ++t) {
          for (Eigen::Index f = 0; f < probs.cols(); ++f) {
            if (in.mask.allowed(t, f)) continue;
            ++masked_entries;
            leaked += probs(t, f) != 0.0 ? 1 : 0;
          }
        }
      }
    }

    std::vector<int> perm(phrases.size());
    for (std::size_t j = 0; j < perm.size(); ++j) perm[j] = static_cast<int>(j);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<std::string> permuted;
    for (int p : perm) permuted.push_back(phrases[static_cast<std::size_t>(p)]);
    const InferenceInput input{u.hypothesis, &u.frames, u.word_frame_spans};
    InferenceOptions opt;
    opt.s_k = 1;
    const auto a = model.forward(input, BiasList(phrases), opt);
    const auto b = model.forward(input, BiasList(permuted), opt);
    perm_worst = std::max({perm_worst, (a.cls_logits - b.cls_logits).cwiseAbs().maxCoeff(),
                           (a.cind_logits.col(0) - b.cind_logits.col(0)).cwiseAbs().maxCoeff()});
    for (std::size_t j = 0; j < perm.size(); ++j) {
      perm_worst = std::max(perm_worst, (b.cind_logits.col(static_cast<Eigen::Index>(j) + 1) -
                                         a.cind_logits.col(perm[j] + 1)).cwiseAbs().maxCoeff());
    }
  }
  return {leaked == 0 && masked_entries > 0 && perm_worst <= kPermutationTol,
          std::to_string(kPropertyInstances) + " instances: " + std::to_string(leaked) + "/" +
              std::to_string(masked_entries) + " masked probabilities non-zero; permutation max |diff| " +
              fmt("%.3g", perm_worst) + " (limit " + fmt("%.0e", kPermutationTol) + ")"};
}

// ---- 7 ----------------------------------------------------------------------

struct SeedRun {
  EvalReport report;
  double text_rise = 0.0;
  double ea_rise = 0.0;
  double noanti_rise = 0.0;
  double block_rise = 0.0;
  std::string joe_output;
};

// Largest relative rise between consecutive 1000-step mean losses. Not part
// of the pass condition; it separates a real upward trend from batch noise.
double block_rise(const std::vector<double>& step_loss, std::size_t block = 1000) {
  double worst = 0.0, prev = 0.0;
  for (std::size_t b = 0; b + block <= step_loss.size(); b += block) {
    double mean = 0.0;
    for (std::size_t i = b; i < b + block; ++i) mean += step_loss[i];
    mean /= static_cast<double>(block);
    if (b > 0 && prev > 0.0) worst = std::max(worst, (mean - prev) / prev);
    prev = mean;
  }
  return worst;
}

double median3(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

SeedRun learning_run(std::uint64_t seed) {
  const RunConfig cfg = seeded(seed);
  const Corpus corpus = gen_corpus(cfg.sim);
  const BiasList pool = corpus.phrase_pool();
  const int s_kmax = cfg.model.s_kmax;
  SeedRun run;

  Model<float> text(cfg.model, cfg.train.seed);
  const FitResult text_fit =
      fit(text, augmented_source(corpus.train, pool, corpus.pairs, cfg.augment, s_kmax, cfg.train.seed), cfg.train);
  run.text_rise = max_smoothed_rise(text_fit.step_loss);

  AugmentConfig adapt_aug = cfg.augment;
  adapt_aug.p_anti = kAdaptAnti;
  adapt_aug.p_confuse = kAdaptConfuse;
  adapt_aug.n_similar = kAdaptSimilar;
  TrainConfig adapt = cfg.train;
  adapt.steps = kAdaptSteps;
  adapt.r_sampling = RSampling::kFixed;
  adapt.r_fixed = 1.0;
  FitResult ea_fit;
  const Model<float> ea = partial_adapt(
      text, Variant::kEncoderAcoustic,
      augmented_source(corpus.train, pool, corpus.pairs, adapt_aug, s_kmax, cfg.train.seed), adapt, &ea_fit);
  run.ea_rise = max_smoothed_rise(ea_fit.step_loss);

  AugmentConfig no_anti = cfg.augment;
  no_anti.p_anti = 0.0;
  Model<float> noanti(cfg.model, cfg.train.seed);
  const FitResult noanti_fit =
      fit(noanti, augmented_source(corpus.train, pool, corpus.pairs, no_anti, s_kmax, cfg.train.seed), cfg.train);
  run.noanti_rise = max_smoothed_rise(noanti_fit.step_loss);
  run.block_rise = std::max({block_rise(text_fit.step_loss), block_rise(ea_fit.step_loss),
                             block_rise(noanti_fit.step_loss)});

  const std::vector<std::string> source = corpus.eval_distractors();
  const auto lists = build_eval_biaslists(corpus.test_names(), cfg.eval.list_size, source, cfg.sim.seed);
  const BiasList anti = build_anti_context_biaslist(corpus.test_names(), cfg.eval.list_size, source, cfg.sim.seed);
  run.report = coverage_sweep({{"text", &text}, {"ea", &ea}, {"noanti", &noanti}}, corpus.test, lists, kEvalK,
                              kEvalR, &anti);

  CorrectOptions opt;
  opt.k = kEvalK;
  run.joe_output = correct(text, InferenceInput{"call joe at ten"}, BiasList({"sam", "john", "dong"}), opt);
  return run;
}

Outcome desk_learning(std::ostream& log) {
  const auto t0 = Clock::now();
  std::vector<SeedRun> runs;
  for (int s = 1; s <= kLearningSeeds; ++s) {
    const auto ts = Clock::now();
    runs.push_back(learning_run(static_cast<std::uint64_t>(s)));
    log << "  seed " << s << " (" << fmt("%.0f", seconds_since(ts)) << " s)\n" << runs.back().report.render_table() << std::flush;
  }
  const double secs = seconds_since(t0);

  auto med = [&](const std::string& sys, int c) {
    std::vector<double> v;
    for (const auto& r : runs) v.push_back(r.report.row(sys, c).name_recall);
    return median3(v);
  };
  auto med_fc = [&](const std::string& sys) {
    std::vector<double> v;
    for (const auto& r : runs) v.push_back(r.report.false_correction_rate.at(sys));
    return median3(v);
  };

  const double base = med("baseline", 100);
  const double gain = med("text", 100) - base;
  const bool a = gain >= kRecallGainPoints;
  bool b = med("ea", 25) > med("text", 25);
  std::ostringstream bdetail;
  for (int c : kCoverageLevels) {
    b = b && med("ea", c) >= med("text", c);
    bdetail << (c == 25 ? "" : " ") << c << "%:" << fmt("%.2f", med("ea", c)) << "/" << fmt("%.2f", med("text", c));
  }
  const double fc_anti = med_fc("text"), fc_noanti = med_fc("noanti");
  const bool c = fc_noanti > fc_anti;
  double worst_rise = 0.0, worst_block = 0.0;
  int joe_ok = 0;
  bool monotone = true;
  for (const auto& r : runs) {
    worst_rise = std::max({worst_rise, r.text_rise, r.ea_rise, r.noanti_rise});
    worst_block = std::max(worst_block, r.block_rise);
    joe_ok += r.joe_output == "call john at ten" ? 1 : 0;
    for (const char* sys : {"text", "ea", "noanti"}) {
      for (std::size_t i = 1; i < std::size(kCoverageLevels); ++i) {
        monotone = monotone &&
                   r.report.row(sys, kCoverageLevels[i]).name_recall >= r.report.row(sys, kCoverageLevels[i - 1]).name_recall;
      }
    }
  }
  const bool baseline_ok = base >= kBaselineLow && base <= kBaselineHigh;
  const bool guard = worst_rise <= kMaxSmoothedRise;
  const bool budget = secs < kLearningSeconds;

  log << "  (a) baseline " << fmt("%.2f", base) << "% [" << (baseline_ok ? "in" : "OUT OF") << " 45-55], text@100 "
      << fmt("%.2f", med("text", 100)) << "%, gain " << fmt("%+.2f", gain) << " points (need >= 15): "
      << (a ? "ok" : "FAIL") << "\n";
  log << "  (b) EA/text median recall " << bdetail.str() << ": " << (b ? "ok" : "FAIL") << "\n";
  log << "  (c) false corrections without/with anti-context " << fmt("%.2f", fc_noanti) << "% / "
      << fmt("%.2f", fc_anti) << "%: " << (c ? "ok" : "FAIL") << "\n";
  log << "  loss guard: worst smoothed rise over a 500-step window " << fmt("%.3f", worst_rise) << " (limit "
      << fmt("%.2f", kMaxSmoothedRise) << "): " << (guard ? "ok" : "FAIL") << "\n";
  log << "  info: largest rise between consecutive 1000-step mean losses " << fmt("%+.3f", worst_block) << "\n";
  log << "  info: recall non-decreasing in coverage for every model and seed: " << (monotone ? "yes" : "no")
      << "; \"call joe at ten\" -> \"call john at ten\" in " << joe_ok << "/" << runs.size() << " seeds\n";

  std::ostringstream d;
  d << "median of " << kLearningSeeds << " seeds: (a) " << (a ? "ok" : "fail") << ", (b) " << (b ? "ok" : "fail")
    << ", (c) " << (c ? "ok" : "fail") << ", baseline " << fmt("%.1f", base) << "%, loss guard "
    << (guard ? "ok" : "fail") << ", " << fmt("%.0f", secs) << " s (limit " << fmt("%.0f", kLearningSeconds) << " s)";
  return {a && b && c && baseline_ok && guard && budget, d.str()};
}

// ---- 8 ----------------------------------------------------------------------

Outcome loss_analytics() {
  std::mt19937_64 rng(801);
  double worst_uniform = 0.0, worst_graph = 0.0, worst_onehot = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const int len = std::uniform_int_distribution<int>(1, 12)(rng);
    const int n_b = std::uniform_int_distribution<int>(1, 600)(rng);
    std::vector<int> y_cls, y_cind;
    for (int t = 0; t < len; ++t) {
      y_cls.push_back(std::uniform_int_distribution<int>(0, 3)(rng));
      y_cind.push_back(std::uniform_int_distribution<int>(0, n_b)(rng));
    }
    const double expected = std::log(4.0) + std::log(n_b + 1.0);
    const double uniform = tagging_loss(Matrix<double>::Constant(len, 4, 0.25),
                                        Matrix<double>::Constant(len, n_b + 1, 1.0 / (n_b + 1)), y_cls, y_cind);
    worst_uniform = std::max(worst_uniform, std::abs(uniform - expected));

    // Same quantity through the training graph with constant logits.
    Graph<double> g;
    TagTarget target;
    for (int t = 0; t < len; ++t) {
      target.cls.push_back(static_cast<Tag>(y_cls[static_cast<std::size_t>(t)]));
      target.cind.push_back(y_cind[static_cast<std::size_t>(t)]);
    }
    const DecoderOutput out{g.input(Matrix<double>::Constant(len, 4, 0.7)),
                            g.input(Matrix<double>::Constant(len, n_b + 1, -1.3))};
    worst_graph = std::max(worst_graph, std::abs(g.value(tagging_loss(g, out, target))(0, 0) - expected));

    Matrix<double> p_cls = Matrix<double>::Zero(len, 4), p_cind = Matrix<double>::Zero(len, n_b + 1);
    for (int t = 0; t < len; ++t) {
      p_cls(t, y_cls[static_cast<std::size_t>(t)]) = 1.0;
      p_cind(t, y_cind[static_cast<std::size_t>(t)]) = 1.0;
    }
    worst_onehot = std::max(worst_onehot, std::abs(tagging_loss(p_cls, p_cind, y_cls, y_cind)));
  }
  return {worst_uniform <= kLossTol && worst_graph <= kLossTol && worst_onehot == 0.0,
          "200 random shapes: uniform loss max |err| " + fmt("%.2e", worst_uniform) + " (graph form " +
              fmt("%.2e", worst_graph) + ", limit " + fmt("%.0e", kLossTol) + "); one-hot loss max " +
              fmt("%.1g", worst_onehot)};
}

// ---- 9 ----------------------------------------------------------------------

Outcome cache_behaviour() {
  const Corpus& corpus = default_corpus();
  const RunConfig cfg = seeded(1);
  Model<float> model(cfg.model, 901);
  testing::randomize(model.params(), 902, 0.2);
  std::vector<std::string> phrases = corpus.names;
  phrases.insert(phrases.end(), corpus.distractors.begin(), corpus.distractors.end());
  phrases.resize(kSessionListSize);
  const BiasList list(phrases);

  // Logits, not just strings, must match bit for bit.
  BiasEmbeddingCache<float> cache(cfg.eval.cache_capacity);
  int logit_mismatch = 0;
  for (int i = 0; i < 20; ++i) {
    const Utterance& u = corpus.test[static_cast<std::size_t>(i)];
    const auto ranked = to_bias_list(preselect(list, u.hypothesis, kEvalK));
    InferenceOptions on;
    on.cache = &cache;
    const auto a = model.forward({u.hypothesis}, ranked);
    const auto b = model.forward({u.hypothesis}, ranked, on);
    logit_mismatch += (a.cls_logits != b.cls_logits || a.cind_logits != b.cind_logits) ? 1 : 0;
  }

  BenchOptions opt;
  opt.k = 0;
  opt.cache_capacity = cfg.eval.cache_capacity;
  opt.max_utts = cfg.eval.bench_utts;
  const LatencyBreakdown lb = bench_latency(model, corpus.test, list, opt);
  const ComponentTimes& t = lb.mean_ms;
  const bool bias_largest =
      t.bias_encoder_ms > t.text_encoder_ms && t.bias_encoder_ms > t.decoder_ms && t.bias_encoder_ms > t.adapter_ms;
  const double ratio = lb.first_pass_bias_ms > 0 ? lb.second_pass_bias_ms / lb.first_pass_bias_ms : 1.0;
  return {logit_mismatch == 0 && lb.outputs_identical && ratio < kSecondPassRatio && bias_largest,
          "outputs identical: " + std::string(lb.outputs_identical && logit_mismatch == 0 ? "yes" : "no") +
              "; second/first pass bias encoder " + fmt("%.3f", lb.second_pass_bias_ms) + "/" +
              fmt("%.3f", lb.first_pass_bias_ms) + " ms = " + fmt("%.3f", ratio) + " (limit " +
              fmt("%.2f", kSecondPassRatio) + "); bias encoder share without cache " +
              fmt("%.1f%%", 100.0 * LatencyBreakdown::proportion(t, t.bias_encoder_ms)) +
              (bias_largest ? " (largest)" : " (NOT largest)")};
}

// ---- 10 ---------------------------------------------------------------------

int cli(std::vector<std::string> args) {
  args.insert(args.begin(), "ctxspell");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  return run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

Outcome determinism() {
  testing::TempDir dir("acceptance_det");
  RunConfig cfg;
  cfg.train.steps = 200;
  testing::write_file(dir / "config.json", cfg.to_json().dump(2));
  const std::string config = (dir / "config.json").string();
  int failures = 0;
  for (const char* d : {"d1", "d2"}) failures += cli({"gen-data", "--config", config, "--out", (dir / d).string()});
  for (const char* m : {"m1", "m2"}) {
    failures += cli({"train", "--config", config, "--data", (dir / "d1").string(), "--out", (dir / m).string()});
  }
  if (failures != 0) return {false, "a command failed"};
  int identical = 0, files = 0;
  for (const auto& entry : std::filesystem::directory_iterator(dir / "d1")) {
    const std::string name = entry.path().filename().string();
    ++files;
    identical += testing::read_file(entry.path()) == testing::read_file(dir / "d2" / name) ? 1 : 0;
  }
  for (const char* f : {"model.ckpt", "train_log.json", "config.json"}) {
    ++files;
    identical += testing::read_file(dir / "m1" / f) == testing::read_file(dir / "m2" / f) ? 1 : 0;
  }
  return {identical == files && files > 3,
          std::to_string(identical) + "/" + std::to_string(files) + " gen-data and train outputs byte-identical"};
}

}  // namespace
}  // namespace ctxspell

int main(int argc, char** argv) {
  using namespace ctxspell;
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  struct Criterion {
    int id;
    const char* title;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "ranker matches brute-force oracle", ranker_oracle},
      {2, "tagging round trip", tagging_round_trip},
      {3, "r = 0 identity with the text-only model", zero_ratio_identity},
      {4, "finite-difference gradient checks", gradient_checks},
      {5, "partial adaptation freezes base tensors", freeze_contract},
      {6, "attention mask and bias-list permutation", mask_and_permutation},
      {7, "desk-scale learning", [] { return desk_learning(std::cout); }},
      {8, "loss analytics", loss_analytics},
      {9, "bias embedding cache", cache_behaviour},
      {10, "byte-reproducible gen-data and train", determinism},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && !only.count(c.id)) continue;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += o.pass ? 0 : 1;
    std::cout << (o.pass ? "[PASS] " : "[FAIL] ") << c.id << ". " << c.title << ": " << o.detail << std::endl;
  }
  std::cout << (failed == 0 ? "all acceptance criteria passed" : std::to_string(failed) + " criteria failed")
            << std::endl;
  return failed == 0 ? 0 : 1;
}
