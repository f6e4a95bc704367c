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

#ifndef CTXSPELL_GRAPH_HPP_
#define CTXSPELL_GRAPH_HPP_

// Reverse-mode autodiff over dense row-major matrices. A Graph records the
// ops of one forward pass; backward() walks them in reverse. With recording
// off it is a plain evaluator.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace ctxspell {

template <typename T>
using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using BoolMatrix = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

template <typename T>
class Graph {
 public:
  using Mat = Matrix<T>;

  explicit Graph(bool record = false, bool training = false, std::uint64_t seed = 0)
      : record_(record), training_(training), rng_(seed) {}

  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  bool recording() const { return record_; }
  bool training() const { return training_; }

  Var input(Mat value) {
    Node n;
    n.own = std::move(value);
    return push(std::move(n));
  }

  // Leaf referencing external storage; `grad_sink` receives accumulated
  // gradients after backward(). The referenced matrix must outlive the graph.
  Var param(const Mat& value, Mat* grad_sink) {
    Node n;
    n.ref = &value;
    n.sink = record_ ? grad_sink : nullptr;
    n.needs_grad = n.sink != nullptr;
    return push(std::move(n));
  }

  const Mat& value(Var v) const { return nodes_[v.id].value(); }
  const Mat& grad(Var v) const { return nodes_[v.id].grad; }
  std::size_t size() const { return nodes_.size(); }

  Var matmul(Var a, Var b) {
    check_inner(value(a).cols(), value(b).rows(), "matmul");
    Var out = make(value(a) * value(b), {a, b});
    if (active(out)) {
      nodes_[out.id].backward = [this, a, b, out] {
        const Mat& g = nodes_[out.id].grad;
        if (wants(a)) acc(a, g * value(b).transpose());
        if (wants(b)) acc(b, value(a).transpose() * g);
      };
    }
    return out;
  }

  // a * b^T
  Var matmul_nt(Var a, Var b) {
    check_inner(value(a).cols(), value(b).cols(), "matmul_nt");
    Var out = make(value(a) * value(b).transpose(), {a, b});
    if (active(out)) {
      nodes_[out.id].backward = [this, a, b, out] {
        const Mat& g = nodes_[out.id].grad;
        if (wants(a)) acc(a, g * value(b));
        if (wants(b)) acc(b, g.transpose() * value(a));
      };
    }
    return out;
  }

  // wa * a + wb * b, same shapes.
  Var axpby(Var a, T wa, Var b, T wb) {
    check_same(a, b, "axpby");
    Var out = make(wa * value(a) + wb * value(b), {a, b});
    if (active(out)) {
      nodes_[out.id].backward = [this, a, b, wa, wb, out] {
        const Mat& g = nodes_[out.id].grad;
        if (wants(a)) acc(a, wa * g);
        if (wants(b)) acc(b, wb * g);
      };
    }
    return out;
  }

  Var add(Var a, Var b) { return axpby(a, T(1), b, T(1)); }

  Var scale(Var a, T s) {
    Var out = make(s * value(a), {a});
    if (active(out)) {
      nodes_[out.id].backward = [this, a, s, out] { acc(a, s * nodes_[out.id].grad); };
    }
    return out;
  }

  // a[n x m] + row[1 x m] broadcast over rows.
  Var add_row(Var a, Var row) {
    const Mat& x = value(a);
    const Mat& r = value(row);
    if (r.rows() != 1 || r.cols() != x.cols()) throw std::invalid_argument("add_row: shape mismatch");
    Mat y = x;
    y.rowwise() += r.row(0);
    Var out = make(std::move(y), {a, row});
    if (active(out)) {
      nodes_[out.id].backward = [this, a, row, out] {
        const Mat& g = nodes_[out.id].grad;
        if (wants(a)) acc(a, g);
        if (wants(row)) acc(row, g.colwise().sum());
      };
    }
    return out;
  }

  Var relu(Var a) {
    Var out = make(value(a).cwiseMax(T(0)), {a});
    if (active(out)) {
      nodes_[out.id].backward = [this, a, out] {
        const Mat& x = value(a);
        Mat g = nodes_[out.id].grad;
        for (Eigen::Index i = 0; i < g.size(); ++i) {
          if (!(x.data()[i] > T(0))) g.data()[i] = T(0);
        }
        acc(a, g);
      };
    }
    return out;
  }

  // Inverted dropout; identity outside training or when p == 0.
  Var dropout(Var a, double p) {
    if (!training_ || p <= 0.0) return a;
    const Mat& x = value(a);
    Mat keep(x.rows(), x.cols());
    std::bernoulli_distribution coin(1.0 - p);
    const T s = T(1) / static_cast<T>(1.0 - p);
    for (Eigen::Index i = 0; i < keep.size(); ++i) keep.data()[i] = coin(rng_) ? s : T(0);
    Var out = make(x.cwiseProduct(keep), {a});
    if (active(out)) {
      nodes_[out.id].backward = [this, a, out, keep = std::move(keep)] {
        acc(a, nodes_[out.id].grad.cwiseProduct(keep));
      };
    }
    return out;
  }

  Var layer_norm(Var x, Var gamma, Var beta, T eps = T(1e-5)) {
    const Mat& in = value(x);
    const Mat& g = value(gamma);
    const Mat& b = value(beta);
    const Eigen::Index n = in.rows();
    const Eigen::Index d = in.cols();
    if (g.cols() != d || b.cols() != d) throw std::invalid_argument("layer_norm: shape mismatch");
    Mat xhat(n, d);
    std::vector<T> inv_std(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
      const T mean = in.row(i).mean();
      const T var = (in.row(i).array() - mean).square().mean();
      inv_std[static_cast<std::size_t>(i)] = T(1) / std::sqrt(var + eps);
      xhat.row(i) = (in.row(i).array() - mean) * inv_std[static_cast<std::size_t>(i)];
    }
    Mat y = xhat.array().rowwise() * g.row(0).array();
    y.rowwise() += b.row(0);
    Var out = make(std::move(y), {x, gamma, beta});
    if (active(out)) {
      nodes_[out.id].backward = [this, x, gamma, beta, out, xhat = std::move(xhat),
                                 inv_std = std::move(inv_std)] {
        const Mat& go = nodes_[out.id].grad;
        if (wants(gamma)) acc(gamma, go.cwiseProduct(xhat).colwise().sum());
        if (wants(beta)) acc(beta, go.colwise().sum());
        if (wants(x)) {
          const Mat& gm = value(gamma);
          Mat dxhat = go.array().rowwise() * gm.row(0).array();
          Mat dx(dxhat.rows(), dxhat.cols());
          const T d = static_cast<T>(dxhat.cols());
          for (Eigen::Index i = 0; i < dxhat.rows(); ++i) {
            const T s1 = dxhat.row(i).sum();
            const T s2 = dxhat.row(i).dot(xhat.row(i));
            dx.row(i) = (inv_std[static_cast<std::size_t>(i)] / d) *
                        (d * dxhat.row(i).array() - s1 - xhat.row(i).array() * s2);
          }
          acc(x, dx);
        }
      };
    }
    return out;
  }

  // Multi-head scaled dot-product attention core on already projected
  // q [Lq x d], k/v [Lk x d]. `allowed` (Lq x Lk) masks keys; masked keys get
  // probability exactly zero and a row with no allowed key yields zeros.
  // `segments` (offsets 0 = s0 < s1 < ... = L) restricts self-attention to
  // diagonal blocks, so stacked sequences never see each other.
  Var attention(Var q, Var k, Var v, int heads, const BoolMatrix* allowed = nullptr,
                std::span<const int> segments = {}) {
    const Mat& Q = value(q);
    const Mat& K = value(k);
    const Mat& V = value(v);
    const Eigen::Index lq = Q.rows();
    const Eigen::Index lk = K.rows();
    const Eigen::Index d = Q.cols();
    if (heads <= 0 || d % heads != 0) throw std::invalid_argument("attention: bad head count");
    if (K.cols() != d || V.cols() != d || V.rows() != lk) {
      throw std::invalid_argument("attention: shape mismatch");
    }
    if (allowed && (allowed->rows() != lq || allowed->cols() != lk)) {
      throw std::invalid_argument("attention: mask shape mismatch");
    }
    std::vector<Block> blocks;
    if (segments.empty()) {
      blocks.push_back({0, lq, 0, lk});
    } else {
      if (lq != lk || segments.front() != 0 || segments.back() != lq) {
        throw std::invalid_argument("attention: bad segments");
      }
      for (std::size_t s = 0; s + 1 < segments.size(); ++s) {
        blocks.push_back({segments[s], segments[s + 1], segments[s], segments[s + 1]});
      }
    }
    const Eigen::Index dh = d / heads;
    const T scale = T(1) / std::sqrt(static_cast<T>(dh));
    std::vector<Mat> probs(static_cast<std::size_t>(heads), Mat::Zero(lq, lk));
    Mat ctx = Mat::Zero(lq, d);
    for (int h = 0; h < heads; ++h) {
      Mat& P = probs[static_cast<std::size_t>(h)];
      for (const Block& blk : blocks) {
        const Eigen::Index nq = blk.q1 - blk.q0;
        const Eigen::Index nk = blk.k1 - blk.k0;
        if (nq == 0 || nk == 0) continue;
        Mat scores = scale * (Q.block(blk.q0, h * dh, nq, dh) *
                              K.block(blk.k0, h * dh, nk, dh).transpose());
        for (Eigen::Index i = 0; i < nq; ++i) {
          T mx = -std::numeric_limits<T>::infinity();
          for (Eigen::Index j = 0; j < nk; ++j) {
            if (!allowed || (*allowed)(blk.q0 + i, blk.k0 + j)) mx = std::max(mx, scores(i, j));
          }
          if (mx == -std::numeric_limits<T>::infinity()) continue;
          T total = T(0);
          for (Eigen::Index j = 0; j < nk; ++j) {
            if (!allowed || (*allowed)(blk.q0 + i, blk.k0 + j)) {
              const T e = std::exp(scores(i, j) - mx);
              P(blk.q0 + i, blk.k0 + j) = e;
              total += e;
            }
          }
          P.block(blk.q0 + i, blk.k0, 1, nk) /= total;
        }
        ctx.block(blk.q0, h * dh, nq, dh) =
            P.block(blk.q0, blk.k0, nq, nk) * V.block(blk.k0, h * dh, nk, dh);
      }
    }
    Var out = make(std::move(ctx), {q, k, v});
    attention_probs_.emplace_back(out.id, std::move(probs));
    const std::size_t slot = attention_probs_.size() - 1;
    if (active(out)) {
      nodes_[out.id].backward = [this, q, k, v, out, heads, slot, blocks = std::move(blocks)] {
        const Mat& G = nodes_[out.id].grad;
        const Mat& Qv = value(q);
        const Mat& Kv = value(k);
        const Mat& Vv = value(v);
        const Eigen::Index dm = Qv.cols();
        const Eigen::Index dhh = dm / heads;
        const T sc = T(1) / std::sqrt(static_cast<T>(dhh));
        Mat dQ = Mat::Zero(Qv.rows(), dm);
        Mat dK = Mat::Zero(Kv.rows(), dm);
        Mat dV = Mat::Zero(Vv.rows(), dm);
        const auto& probs_h = attention_probs_[slot].second;
        for (int h = 0; h < heads; ++h) {
          const Mat& P = probs_h[static_cast<std::size_t>(h)];
          for (const Block& blk : blocks) {
            const Eigen::Index nq = blk.q1 - blk.q0;
            const Eigen::Index nk = blk.k1 - blk.k0;
            if (nq == 0 || nk == 0) continue;
            const auto Pb = P.block(blk.q0, blk.k0, nq, nk);
            const Mat Gb = G.block(blk.q0, h * dhh, nq, dhh);
            dV.block(blk.k0, h * dhh, nk, dhh) += Pb.transpose() * Gb;
            Mat dP = Gb * Vv.block(blk.k0, h * dhh, nk, dhh).transpose();
            Mat dS(nq, nk);
            for (Eigen::Index i = 0; i < nq; ++i) {
              const T inner = dP.row(i).dot(Pb.row(i));
              dS.row(i) = Pb.row(i).array() * (dP.row(i).array() - inner);
            }
            dS *= sc;
            dQ.block(blk.q0, h * dhh, nq, dhh) += dS * Kv.block(blk.k0, h * dhh, nk, dhh);
            dK.block(blk.k0, h * dhh, nk, dhh) += dS.transpose() * Qv.block(blk.q0, h * dhh, nq, dhh);
          }
        }
        if (wants(q)) acc(q, dQ);
        if (wants(k)) acc(k, dK);
        if (wants(v)) acc(v, dV);
      };
    }
    return out;
  }

  // Per-head probabilities recorded by the attention op that produced `v`.
  const std::vector<Mat>& attention_probs(Var v) const {
    for (const auto& [id, probs] : attention_probs_) {
      if (id == v.id) return probs;
    }
    throw std::invalid_argument("no attention probabilities for var");
  }

  // Row t = sum of table rows listed in rows[t].
  Var embed_sum(Var table, std::vector<std::vector<int>> rows) {
    const Mat& E = value(table);
    Mat y = Mat::Zero(static_cast<Eigen::Index>(rows.size()), E.cols());
    for (std::size_t t = 0; t < rows.size(); ++t) {
      for (int r : rows[t]) {
        if (r < 0 || r >= E.rows()) throw std::out_of_range("embed_sum: row index");
        y.row(static_cast<Eigen::Index>(t)) += E.row(r);
      }
    }
    Var out = make(std::move(y), {table});
    if (active(out)) {
      nodes_[out.id].backward = [this, table, out, rows = std::move(rows)] {
        const Mat& g = nodes_[out.id].grad;
        Mat& gt = grad_slot(table);
        for (std::size_t t = 0; t < rows.size(); ++t) {
          for (int r : rows[t]) gt.row(r) += g.row(static_cast<Eigen::Index>(t));
        }
      };
    }
    return out;
  }

  Var concat_rows(Var a, Var b) {
    const Mat& x = value(a);
    const Mat& y = value(b);
    if (x.cols() != y.cols()) throw std::invalid_argument("concat_rows: width mismatch");
    Mat z(x.rows() + y.rows(), x.cols());
    z << x, y;
    Var out = make(std::move(z), {a, b});
    if (active(out)) {
      nodes_[out.id].backward = [this, a, b, out] {
        const Mat& g = nodes_[out.id].grad;
        const Eigen::Index na = value(a).rows();
        if (wants(a)) acc(a, g.topRows(na));
        if (wants(b)) acc(b, g.bottomRows(g.rows() - na));
      };
    }
    return out;
  }

  Var gather_rows(Var a, std::vector<int> idx) {
    const Mat& x = value(a);
    Mat y(static_cast<Eigen::Index>(idx.size()), x.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) {
      if (idx[i] < 0 || idx[i] >= x.rows()) throw std::out_of_range("gather_rows: index");
      y.row(static_cast<Eigen::Index>(i)) = x.row(idx[i]);
    }
    Var out = make(std::move(y), {a});
    if (active(out)) {
      nodes_[out.id].backward = [this, a, out, idx = std::move(idx)] {
        const Mat& g = nodes_[out.id].grad;
        Mat& ga = grad_slot(a);
        for (std::size_t i = 0; i < idx.size(); ++i) ga.row(idx[i]) += g.row(static_cast<Eigen::Index>(i));
      };
    }
    return out;
  }

  // Mean over rows of -log softmax(logits)[target]. Rows with negative
  // targets are skipped; an all-skipped input yields 0.
  Var cross_entropy(Var logits, std::span<const int> targets) {
    const Mat& z = value(logits);
    if (static_cast<Eigen::Index>(targets.size()) != z.rows()) {
      throw std::invalid_argument("cross_entropy: target count mismatch");
    }
    check_finite(z, "cross_entropy");
    Mat p = softmax_rows(z, T(1));
    std::vector<int> tgt(targets.begin(), targets.end());
    int count = 0;
    T loss = T(0);
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
      const int t = tgt[static_cast<std::size_t>(i)];
      if (t < 0) continue;
      if (t >= z.cols()) throw std::out_of_range("cross_entropy: target index");
      loss -= log_softmax_at(z, i, t);
      ++count;
    }
    const T denom = count > 0 ? static_cast<T>(count) : T(1);
    Mat out_v(1, 1);
    out_v(0, 0) = loss / denom;
    Var out = make(std::move(out_v), {logits});
    if (active(out)) {
      nodes_[out.id].backward = [this, logits, out, p = std::move(p), tgt = std::move(tgt), denom] {
        const T g = nodes_[out.id].grad(0, 0);
        Mat d = Mat::Zero(p.rows(), p.cols());
        for (Eigen::Index i = 0; i < p.rows(); ++i) {
          const int t = tgt[static_cast<std::size_t>(i)];
          if (t < 0) continue;
          d.row(i) = p.row(i);
          d(i, t) -= T(1);
        }
        acc(logits, (g / denom) * d);
      };
    }
    return out;
  }

  // Mean over rows of KL(target || softmax(logits / temperature)), where
  // target rows are probability distributions.
  Var soft_cross_entropy(Var logits, Mat target, T temperature) {
    const Mat& z = value(logits);
    if (target.rows() != z.rows() || target.cols() != z.cols()) {
      throw std::invalid_argument("soft_cross_entropy: shape mismatch");
    }
    if (!(temperature > T(0))) throw std::invalid_argument("temperature must be positive");
    check_finite(z, "soft_cross_entropy");
    Mat q = softmax_rows(z, temperature);
    T loss = T(0);
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
      const T mx = z.row(i).maxCoeff() / temperature;
      T total = T(0);
      for (Eigen::Index j = 0; j < z.cols(); ++j) total += std::exp(z(i, j) / temperature - mx);
      const T log_norm = mx + std::log(total);
      for (Eigen::Index j = 0; j < z.cols(); ++j) {
        const T pt = target(i, j);
        if (pt > T(0)) loss += pt * (std::log(pt) - (z(i, j) / temperature - log_norm));
      }
    }
    const T denom = z.rows() > 0 ? static_cast<T>(z.rows()) : T(1);
    Mat out_v(1, 1);
    out_v(0, 0) = loss / denom;
    Var out = make(std::move(out_v), {logits});
    if (active(out)) {
      nodes_[out.id].backward = [this, logits, out, q = std::move(q), target = std::move(target), denom,
                                 temperature] {
        const T g = nodes_[out.id].grad(0, 0);
        acc(logits, (g / (denom * temperature)) * (q - target));
      };
    }
    return out;
  }

  // Seeds d(root)/d(root) = 1 and accumulates into parameter sinks.
  void backward(Var root) {
    if (!record_) throw std::logic_error("backward on a non-recording graph");
    const Mat& r = value(root);
    if (r.rows() != 1 || r.cols() != 1) throw std::invalid_argument("backward root must be scalar");
    grad_slot(root)(0, 0) += T(1);
    for (int i = root.id; i >= 0; --i) {
      Node& n = nodes_[static_cast<std::size_t>(i)];
      if (n.grad.size() == 0) continue;
      if (n.backward) n.backward();
      if (n.sink) {
        if (n.sink->size() == 0) *n.sink = Mat::Zero(n.grad.rows(), n.grad.cols());
        *n.sink += n.grad;
      }
    }
  }

  static Mat softmax_rows(const Mat& z, T temperature) {
    Mat p(z.rows(), z.cols());
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
      const T mx = z.row(i).maxCoeff();
      T total = T(0);
      for (Eigen::Index j = 0; j < z.cols(); ++j) {
        p(i, j) = std::exp((z(i, j) - mx) / temperature);
        total += p(i, j);
      }
      p.row(i) /= total;
    }
    return p;
  }

 private:
  struct Node {
    Mat own;
    const Mat* ref = nullptr;
    Mat* sink = nullptr;
    Mat grad;
    bool needs_grad = false;
    std::function<void()> backward;

    const Mat& value() const { return ref ? *ref : own; }
  };

  struct Block {
    Eigen::Index q0, q1, k0, k1;
  };

  Var push(Node n) {
    nodes_.push_back(std::move(n));
    return Var{static_cast<int>(nodes_.size()) - 1};
  }

  Var make(Mat value, std::initializer_list<Var> parents) {
    Node n;
    n.own = std::move(value);
    if (record_) {
      for (Var p : parents) n.needs_grad = n.needs_grad || nodes_[p.id].needs_grad;
    }
    return push(std::move(n));
  }

  bool active(Var v) const { return record_ && nodes_[v.id].needs_grad; }
  bool wants(Var v) const { return nodes_[v.id].needs_grad; }

  Mat& grad_slot(Var v) {
    Node& n = nodes_[v.id];
    if (n.grad.size() == 0) n.grad = Mat::Zero(n.value().rows(), n.value().cols());
    return n.grad;
  }

  template <typename Expr>
  void acc(Var v, const Expr& g) {
    if (!wants(v)) return;
    grad_slot(v) += g;
  }

  static T log_softmax_at(const Mat& z, Eigen::Index i, Eigen::Index j, T temperature = T(1)) {
    const T mx = z.row(i).maxCoeff() / temperature;
    T total = T(0);
    for (Eigen::Index c = 0; c < z.cols(); ++c) total += std::exp(z(i, c) / temperature - mx);
    return z(i, j) / temperature - mx - std::log(total);
  }

  static void check_finite(const Mat& z, const char* what) {
    if (!z.allFinite()) throw std::domain_error(std::string(what) + ": non-finite logits");
  }

  static void check_inner(Eigen::Index a, Eigen::Index b, const char* what) {
    if (a != b) throw std::invalid_argument(std::string(what) + ": inner dimension mismatch");
  }

  void check_same(Var a, Var b, const char* what) const {
    if (value(a).rows() != value(b).rows() || value(a).cols() != value(b).cols()) {
      throw std::invalid_argument(std::string(what) + ": shape mismatch");
    }
  }

  bool record_;
  bool training_;
  std::mt19937_64 rng_;
  std::vector<Node> nodes_;
  std::vector<std::pair<int, std::vector<Mat>>> attention_probs_;
};

}  // namespace ctxspell

#endif  // CTXSPELL_GRAPH_HPP_
