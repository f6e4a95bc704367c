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

#ifndef CTXSPELL_TESTS_SUPPORT_HPP_
#define CTXSPELL_TESTS_SUPPORT_HPP_

// Shared fixtures and independent reference implementations for the unit
// and acceptance tests. Nothing here calls the code under test except to
// build inputs.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "ctxspell/augment.hpp"
#include "ctxspell/model.hpp"
#include "ctxspell/simdata.hpp"
#include "ctxspell/textcore.hpp"
#include "ctxspell/train.hpp"

namespace ctxspell::testing {

// ---- reference implementations ---------------------------------------------

// Levenshtein distance by plain recursion with memo-free exhaustive search;
// only for short strings.
inline int brute_edit_distance(const std::u32string& a, const std::u32string& b, std::size_t i = 0,
                               std::size_t j = 0) {
  if (i == a.size()) return static_cast<int>(b.size() - j);
  if (j == b.size()) return static_cast<int>(a.size() - i);
  const int sub = brute_edit_distance(a, b, i + 1, j + 1) + (a[i] == b[j] ? 0 : 1);
  const int del = brute_edit_distance(a, b, i + 1, j) + 1;
  const int ins = brute_edit_distance(a, b, i, j + 1) + 1;
  return std::min({sub, del, ins});
}

// Textbook two-row dynamic program over code points.
inline int dp_edit_distance(const std::u32string& a, const std::u32string& b) {
  std::vector<int> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = static_cast<int>(j);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = static_cast<int>(i);
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

inline std::u32string to_u32(const std::string& s) { return std::u32string(s.begin(), s.end()); }

// Relevance by enumerating every window of the hypothesis with as many
// words as the phrase; hypotheses with fewer words compare whole strings.
inline double oracle_relevance(const std::string& phrase, const std::string& hypothesis) {
  const auto pw = split_words(phrase);
  const auto hw = split_words(hypothesis);
  const std::string p = join_words(pw);
  const double len = static_cast<double>(to_u32(p).size());
  int best = std::numeric_limits<int>::max();
  if (hw.size() < pw.size()) {
    best = dp_edit_distance(to_u32(p), to_u32(join_words(hw)));
  } else {
    for (std::size_t s = 0; s + pw.size() <= hw.size(); ++s) {
      std::string seg;
      for (std::size_t k = 0; k < pw.size(); ++k) seg += (k ? " " : "") + hw[s + k];
      best = std::min(best, dp_edit_distance(to_u32(p), to_u32(seg)));
    }
  }
  return -static_cast<double>(best) / len;
}

// ---- fixtures ---------------------------------------------------------------

inline SimConfig tiny_sim(std::uint64_t seed = 7) {
  SimConfig c;
  c.n_names = 30;
  c.n_train = 40;
  c.n_test = 20;
  c.distractor_pool_size = 60;
  c.seed = seed;
  return c;
}

inline ModelConfig tiny_model(Variant variant = Variant::kTextOnly) {
  ModelConfig c;
  c.variant = variant;
  c.d_model = 8;
  c.n_heads = 2;
  c.d_ff = 16;
  c.d_adapter_hidden = 8;
  c.dropout = 0.0;
  c.n_layers_text = c.n_layers_bias = c.n_layers_dec = 1;
  return c;
}

// Replaces every tensor with small random values so no gradient path is
// switched off by a zero initialization.
template <typename T>
void randomize(Parameters<T>& params, std::uint64_t seed, double scale = 0.3) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01(0.0, 1.0);
  for (int i = 0; i < params.size(); ++i) {
    Matrix<T>& m = params[i];
    for (Eigen::Index j = 0; j < m.size(); ++j) m.data()[j] = static_cast<T>(scale * n01(rng));
  }
}

// Training examples with frames, alignments, and built targets.
inline std::vector<TrainingExample> sample_examples(const Corpus& corpus, int count, std::uint64_t seed,
                                                    int s_kmax = 2) {
  AugmentConfig ac;
  ac.n_bmax = 6;
  ac.preselect_k = 0;
  const BiasList pool = corpus.phrase_pool();
  Rng rng(seed);
  std::vector<TrainingExample> out;
  for (int i = 0; static_cast<int>(out.size()) < count; ++i) {
    const Utterance& u = corpus.train[static_cast<std::size_t>(i) % corpus.train.size()];
    TrainingExample ex = build_training_example(u, pool, corpus.pairs, ac, s_kmax, rng);
    if (ex.target.usable && ex.target.size() > 0) out.push_back(std::move(ex));
  }
  return out;
}

template <typename T>
T example_loss(const Model<T>& model, const TrainingExample& ex, T r, Parameters<T>* grads = nullptr) {
  const ExampleInputs in = prepare_inputs(ex, model.config());
  Graph<T> g(/*record=*/grads != nullptr, /*training=*/false);
  ForwardPass<T> fp(model, g, grads);
  const DecoderOutput out = run_example(fp, in, ex, model.config(), r);
  const Var loss = tagging_loss(g, out, ex.target);
  if (grads != nullptr) g.backward(loss);
  return g.value(loss)(0, 0);
}

struct GradCheckResult {
  std::string tensor;
  double rel_error = 0.0;
  int checked = 0;
  double fd_norm = 0.0;
  double bp_norm = 0.0;
};

// Central differences against backprop, per tensor. Each tensor is checked
// on every entry with a non-zero analytic gradient plus a few zero ones, up
// to `max_entries`. The error of a tensor is ||fd - bp|| / max(||fd||, ||bp||).
inline std::vector<GradCheckResult> grad_check(Model<double>& model, const TrainingExample& ex, double r,
                                               int max_entries = 96, double h = 1e-6) {
  Parameters<double> grads = model.params().zeros_like();
  example_loss(model, ex, r, &grads);
  std::vector<GradCheckResult> results;
  std::mt19937_64 rng(99);
  for (int t = 0; t < model.params().size(); ++t) {
    Matrix<double>& w = model.params()[t];
    const Matrix<double>& g = grads[t];
    std::vector<Eigen::Index> nonzero, zero;
    for (Eigen::Index j = 0; j < w.size(); ++j) (g.data()[j] != 0.0 ? nonzero : zero).push_back(j);
    std::shuffle(nonzero.begin(), nonzero.end(), rng);
    std::shuffle(zero.begin(), zero.end(), rng);
    std::vector<Eigen::Index> picks(nonzero.begin(),
                                    nonzero.begin() + std::min<std::ptrdiff_t>(max_entries, nonzero.size()));
    for (std::size_t z = 0; z < zero.size() && z < 4; ++z) picks.push_back(zero[z]);
    double diff_sq = 0.0, fd_sq = 0.0, bp_sq = 0.0;
    for (Eigen::Index j : picks) {
      const double saved = w.data()[j];
      w.data()[j] = saved + h;
      const double up = example_loss(model, ex, r);
      w.data()[j] = saved - h;
      const double down = example_loss(model, ex, r);
      w.data()[j] = saved;
      const double fd = (up - down) / (2.0 * h);
      const double bp = g.data()[j];
      diff_sq += (fd - bp) * (fd - bp);
      fd_sq += fd * fd;
      bp_sq += bp * bp;
    }
    const double denom = std::max({std::sqrt(fd_sq), std::sqrt(bp_sq), 1e-12});
    results.push_back({model.params().names()[static_cast<std::size_t>(t)], std::sqrt(diff_sq) / denom,
                       static_cast<int>(picks.size()), std::sqrt(fd_sq), std::sqrt(bp_sq)});
  }
  return results;
}

// Central differences with h = 1e-6 on an O(1) loss resolve nothing below
// one ulp of the loss over 2h (about 1e-10 per entry). A tensor whose exact
// gradient is zero, such as an attention key bias, which softmax cancels,
// therefore has no meaningful relative error. It is judged on the absolute
// difference against this bound instead.
inline constexpr double kFdRoundoffNorm = 1e-8;
inline constexpr double kZeroGradNorm = 1e-12;

inline bool zero_gradient(const GradCheckResult& r) {
  return r.bp_norm < kZeroGradNorm && r.fd_norm < kFdRoundoffNorm;
}

inline bool grad_ok(const GradCheckResult& r, double rel_tol) {
  return zero_gradient(r) ? std::abs(r.fd_norm - r.bp_norm) < kFdRoundoffNorm : r.rel_error < rel_tol;
}

// ---- files ------------------------------------------------------------------

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
    path_ = std::filesystem::temp_directory_path() /
            ("ctxspell_" + tag + "_" + std::to_string(stamp) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

}  // namespace ctxspell::testing

#endif  // CTXSPELL_TESTS_SUPPORT_HPP_
