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

#include "ctxspell/model.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>
#include <set>
#include <stdexcept>
#include <type_traits>

#include "ctxspell/bias_cache.hpp"

namespace ctxspell {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

std::string utf8_encode(char32_t cp) {
  std::string out;
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
  return out;
}

void add_linear(std::vector<TensorSpec>& out, const std::string& prefix, int in, int outw,
                bool zero = false) {
  using Init = TensorSpec::Init;
  out.push_back({prefix + ".w", in, outw, zero ? Init::kZeros : Init::kXavier});
  out.push_back({prefix + ".b", 1, outw, Init::kZeros});
}

void add_norm(std::vector<TensorSpec>& out, const std::string& prefix, int d) {
  out.push_back({prefix + ".g", 1, d, TensorSpec::Init::kOnes});
  out.push_back({prefix + ".b", 1, d, TensorSpec::Init::kZeros});
}

void add_attention(std::vector<TensorSpec>& out, const std::string& prefix, int d,
                   bool zero_output = false) {
  add_linear(out, prefix + ".q", d, d);
  add_linear(out, prefix + ".k", d, d);
  add_linear(out, prefix + ".v", d, d);
  add_linear(out, prefix + ".o", d, d, zero_output);
}

void add_ffn(std::vector<TensorSpec>& out, const std::string& prefix, int d, int ff) {
  add_linear(out, prefix + ".in", d, ff);
  add_linear(out, prefix + ".out", ff, d);
}

}  // namespace

std::string to_string(Variant v) {
  switch (v) {
    case Variant::kTextOnly: return "text-only";
    case Variant::kEncoderAcoustic: return "ea";
    case Variant::kDecoderAcoustic: return "da";
  }
  return "unknown";
}

Variant parse_variant(std::string_view s) {
  if (s == "text-only") return Variant::kTextOnly;
  if (s == "ea") return Variant::kEncoderAcoustic;
  if (s == "da") return Variant::kDecoderAcoustic;
  throw std::invalid_argument("unknown variant: " + std::string(s));
}

ModelConfig ModelConfig::full_teacher() {
  ModelConfig c;
  c.n_layers_text = c.n_layers_bias = c.n_layers_dec = 6;
  c.d_model = 512;
  c.n_heads = 8;
  c.d_ff = 2048;
  c.d_acoustic_in = 512;
  c.d_adapter_hidden = 2048;
  c.dropout = 0.1;
  c.s_kmax = 3;
  return c;
}

ModelConfig ModelConfig::full_student() {
  ModelConfig c;
  c.n_layers_text = c.n_layers_bias = c.n_layers_dec = 3;
  c.d_model = 192;
  c.n_heads = 4;
  c.d_ff = 768;
  c.d_acoustic_in = 512;
  c.d_adapter_hidden = 512;
  c.dropout = 0.1;
  c.s_kmax = 3;
  return c;
}

ModelConfig ModelConfig::desk() { return ModelConfig{}; }

void ModelConfig::validate() const {
  auto positive = [](int v, const char* what) {
    if (v <= 0) throw std::invalid_argument(std::string(what) + " must be positive");
  };
  positive(n_layers_text, "n_layers_text");
  positive(n_layers_bias, "n_layers_bias");
  positive(n_layers_dec, "n_layers_dec");
  positive(d_model, "d_model");
  positive(n_heads, "n_heads");
  positive(d_ff, "d_ff");
  positive(d_acoustic_in, "d_acoustic_in");
  positive(d_adapter_hidden, "d_adapter_hidden");
  positive(s_kmax, "s_kmax");
  positive(chunk_size, "chunk_size");
  if (d_model % n_heads != 0) throw std::invalid_argument("d_model must be divisible by n_heads");
  if (dropout < 0.0 || dropout >= 1.0) throw std::invalid_argument("dropout must be in [0, 1)");
}

nlohmann::json ModelConfig::to_json() const {
  return {{"variant", to_string(variant)},
          {"n_layers_text", n_layers_text},
          {"n_layers_bias", n_layers_bias},
          {"n_layers_dec", n_layers_dec},
          {"d_model", d_model},
          {"n_heads", n_heads},
          {"d_ff", d_ff},
          {"d_acoustic_in", d_acoustic_in},
          {"d_adapter_hidden", d_adapter_hidden},
          {"dropout", dropout},
          {"s_kmax", s_kmax},
          {"chunk_size", chunk_size},
          {"charset", charset}};
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
  static const std::set<std::string> known = {
      "variant", "n_layers_text", "n_layers_bias", "n_layers_dec", "d_model",  "n_heads", "d_ff",
      "d_acoustic_in", "d_adapter_hidden", "dropout", "s_kmax", "chunk_size", "charset"};
  if (!j.is_object()) throw std::invalid_argument("model config must be an object");
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key)) throw std::invalid_argument("unknown model config key: " + key);
  }
  ModelConfig c;
  if (j.contains("variant")) c.variant = parse_variant(j.at("variant").get<std::string>());
  auto get = [&j](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  get("n_layers_text", c.n_layers_text);
  get("n_layers_bias", c.n_layers_bias);
  get("n_layers_dec", c.n_layers_dec);
  get("d_model", c.d_model);
  get("n_heads", c.n_heads);
  get("d_ff", c.d_ff);
  get("d_acoustic_in", c.d_acoustic_in);
  get("d_adapter_hidden", c.d_adapter_hidden);
  get("dropout", c.dropout);
  get("s_kmax", c.s_kmax);
  get("chunk_size", c.chunk_size);
  get("charset", c.charset);
  c.validate();
  return c;
}

CharVocab::CharVocab(std::string_view charset, int chunk_size)
    : chars_(utf8_decode(charset)), chunk_size_(chunk_size) {
  for (std::size_t i = 0; i < chars_.size(); ++i) index_.emplace(chars_[i], static_cast<int>(i));
}

int CharVocab::num_rows() const { return 3 + (num_chars() + 1) * chunk_size_; }

int CharVocab::char_id(char32_t c) const {
  auto it = index_.find(c);
  return it == index_.end() ? num_chars() : it->second;
}

std::vector<std::vector<int>> CharVocab::features(const TokenizedText& text) const {
  std::vector<std::vector<int>> rows;
  rows.reserve(text.tokens.size());
  for (int t = 0; t < text.num_tokens(); ++t) {
    const int w = text.word_of_token[t];
    std::vector<int> r;
    r.push_back(text.token_span_of_word[w].begin == t ? kWordStartRow : kWordInnerRow);
    const std::u32string piece = utf8_decode(text.tokens[t]);
    for (std::size_t k = 0; k < piece.size() && static_cast<int>(k) < chunk_size_; ++k) {
      r.push_back(3 + char_id(piece[k]) * chunk_size_ + static_cast<int>(k));
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<std::vector<int>> CharVocab::phrase_features(const TokenizedText& phrase) const {
  std::vector<std::vector<int>> rows = features(phrase);
  rows.insert(rows.begin(), std::vector<int>{kPhraseStartRow});
  return rows;
}

std::string CharVocab::build_charset(const std::vector<std::string>& texts) {
  std::set<char32_t> seen;
  for (const auto& t : texts) {
    for (char32_t c : utf8_decode(normalize(t))) {
      if (c != U' ') seen.insert(c);
    }
  }
  std::string out;
  for (char32_t c : seen) out += utf8_encode(c);
  return out;
}

template <typename T>
int Parameters<T>::add(std::string name, Matrix<T> value) {
  if (index_.count(name)) throw std::invalid_argument("duplicate tensor name: " + name);
  const int id = static_cast<int>(values_.size());
  index_.emplace(name, id);
  names_.push_back(std::move(name));
  values_.push_back(std::move(value));
  return id;
}

template <typename T>
int Parameters<T>::index_of(std::string_view name) const {
  auto it = index_.find(name);
  return it == index_.end() ? -1 : it->second;
}

template <typename T>
Matrix<T>& Parameters<T>::at(std::string_view name) {
  const int i = index_of(name);
  if (i < 0) throw std::out_of_range("no tensor named " + std::string(name));
  return values_[static_cast<std::size_t>(i)];
}

template <typename T>
const Matrix<T>& Parameters<T>::at(std::string_view name) const {
  const int i = index_of(name);
  if (i < 0) throw std::out_of_range("no tensor named " + std::string(name));
  return values_[static_cast<std::size_t>(i)];
}

template <typename T>
std::size_t Parameters<T>::scalar_count() const {
  std::size_t n = 0;
  for (const auto& v : values_) n += static_cast<std::size_t>(v.size());
  return n;
}

template <typename T>
Parameters<T> Parameters<T>::zeros_like() const {
  Parameters<T> out;
  for (std::size_t i = 0; i < values_.size(); ++i) {
    out.add(names_[i], Matrix<T>::Zero(values_[i].rows(), values_[i].cols()));
  }
  return out;
}

template <typename T>
void Parameters<T>::set_zero() {
  for (auto& v : values_) v.setZero();
}

bool is_new_component(std::string_view name) {
  return name.starts_with("adapter.") || name.find(".acoustic.") != std::string_view::npos ||
         name.find(".acoustic_ln.") != std::string_view::npos;
}

std::vector<TensorSpec> tensor_manifest(const ModelConfig& c) {
  c.validate();
  const int d = c.d_model;
  const bool ea = c.variant == Variant::kEncoderAcoustic;
  const bool da = c.variant == Variant::kDecoderAcoustic;
  std::vector<TensorSpec> out;
  const CharVocab vocab(c.charset, c.chunk_size);
  out.push_back({"emb.table", vocab.num_rows(), d, TensorSpec::Init::kEmbedding});
  for (int l = 0; l < c.n_layers_text; ++l) {
    const std::string p = "text." + std::to_string(l);
    add_norm(out, p + ".ln1", d);
    add_attention(out, p + ".self", d);
    if (ea) {
      add_norm(out, p + ".acoustic_ln", d);
      add_attention(out, p + ".acoustic", d, /*zero_output=*/true);
    }
    add_norm(out, p + ".ln2", d);
    add_ffn(out, p + ".ff", d, c.d_ff);
  }
  add_norm(out, "text.ln_f", d);
  for (int l = 0; l < c.n_layers_bias; ++l) {
    const std::string p = "bias." + std::to_string(l);
    add_norm(out, p + ".ln1", d);
    add_attention(out, p + ".self", d);
    add_norm(out, p + ".ln2", d);
    add_ffn(out, p + ".ff", d, c.d_ff);
  }
  add_norm(out, "bias.ln_f", d);
  for (int l = 0; l < c.n_layers_dec; ++l) {
    const std::string p = "dec." + std::to_string(l);
    add_norm(out, p + ".ln1", d);
    add_attention(out, p + ".self", d);
    if (da) {
      add_norm(out, p + ".acoustic_ln", d);
      add_attention(out, p + ".acoustic", d, /*zero_output=*/true);
    }
    add_norm(out, p + ".ln_bias", d);
    add_attention(out, p + ".cross", d);
    add_norm(out, p + ".ln2", d);
    add_ffn(out, p + ".ff", d, c.d_ff);
  }
  add_norm(out, "dec.ln_f", d);
  if (ea || da) {
    add_linear(out, "adapter.in", c.d_acoustic_in, c.d_adapter_hidden);
    add_linear(out, "adapter.out", c.d_adapter_hidden, d);
  }
  add_linear(out, "head.cls", d, kNumTags);
  add_linear(out, "head.cind", d, d);
  out.push_back({"head.none", 1, d, TensorSpec::Init::kEmbedding});
  return out;
}

AudioFeatureMask build_audio_mask(std::span<const Range> word_frame_spans,
                                  std::span<const int> word_of_token, int n_frames, int s_k) {
  if (s_k < 1) throw std::invalid_argument("s_k must be >= 1");
  AudioFeatureMask mask;
  const auto n_tokens = static_cast<Eigen::Index>(word_of_token.size());
  mask.allowed = BoolMatrix::Constant(n_tokens, n_frames, false);
  const int n_words = static_cast<int>(word_frame_spans.size());
  mask.anchors.assign(static_cast<std::size_t>(n_tokens), 0.5 * n_frames);
  for (Eigen::Index t = 0; t < n_tokens;) {
    const int w = word_of_token[static_cast<std::size_t>(t)];
    Eigen::Index end = t;
    while (end < n_tokens && word_of_token[static_cast<std::size_t>(end)] == w) ++end;
    if (w >= 0 && w < n_words) {
      const Range span = word_frame_spans[static_cast<std::size_t>(w)];
      const double width = static_cast<double>(span.end - span.begin) / static_cast<double>(end - t);
      for (Eigen::Index j = t; j < end; ++j) {
        mask.anchors[static_cast<std::size_t>(j)] = span.begin + width * (static_cast<double>(j - t) + 0.5);
      }
    }
    t = end;
  }
  for (Eigen::Index t = 0; t < n_tokens; ++t) {
    const int w = word_of_token[static_cast<std::size_t>(t)];
    bool any = false;
    for (int u = std::max(0, w - s_k); u <= std::min(n_words - 1, w + s_k); ++u) {
      const Range span = word_frame_spans[static_cast<std::size_t>(u)];
      for (int f = std::max(0, span.begin); f < std::min(n_frames, span.end); ++f) {
        mask.allowed(t, f) = true;
        any = true;
      }
    }
    if (!any) {
      mask.allowed.row(t).setConstant(true);
      ++mask.holes;
    }
  }
  return mask;
}

template <typename T>
Matrix<T> sinusoidal_positions(int length, int d_model) {
  Matrix<T> pe(length, d_model);
  for (int pos = 0; pos < length; ++pos) {
    for (int i = 0; i < d_model; ++i) {
      const double rate = std::pow(10000.0, -static_cast<double>(2 * (i / 2)) / d_model);
      const double angle = pos * rate;
      pe(pos, i) = static_cast<T>(i % 2 == 0 ? std::sin(angle) : std::cos(angle));
    }
  }
  return pe;
}

template <typename T>
Matrix<T> sinusoidal_at(std::span<const double> positions, int d_model) {
  Matrix<T> pe(static_cast<Eigen::Index>(positions.size()), d_model);
  for (std::size_t row = 0; row < positions.size(); ++row) {
    for (int i = 0; i < d_model; ++i) {
      const double rate = std::pow(10000.0, -static_cast<double>(2 * (i / 2)) / d_model);
      const double angle = positions[row] * rate;
      pe(static_cast<Eigen::Index>(row), i) = static_cast<T>(i % 2 == 0 ? std::sin(angle) : std::cos(angle));
    }
  }
  return pe;
}

template Matrix<float> sinusoidal_positions<float>(int, int);
template Matrix<double> sinusoidal_positions<double>(int, int);
template Matrix<float> sinusoidal_at<float>(std::span<const double>, int);
template Matrix<double> sinusoidal_at<double>(std::span<const double>, int);

ComponentTimes& ComponentTimes::operator+=(const ComponentTimes& o) {
  adapter_ms += o.adapter_ms;
  text_encoder_ms += o.text_encoder_ms;
  bias_encoder_ms += o.bias_encoder_ms;
  decoder_ms += o.decoder_ms;
  return *this;
}

template <typename T>
std::vector<int> argmax_rows(const Matrix<T>& m) {
  std::vector<int> out(static_cast<std::size_t>(m.rows()), 0);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    int best = 0;
    for (Eigen::Index j = 1; j < m.cols(); ++j) {
      if (m(i, j) > m(i, best)) best = static_cast<int>(j);
    }
    out[static_cast<std::size_t>(i)] = best;
  }
  return out;
}

template std::vector<int> argmax_rows<float>(const Matrix<float>&);
template std::vector<int> argmax_rows<double>(const Matrix<double>&);

template <typename T>
Model<T>::Model(ModelConfig config, std::uint64_t seed)
    : config_(std::move(config)), vocab_(config_.charset, config_.chunk_size) {
  std::mt19937_64 rng(seed);
  for (const TensorSpec& spec : tensor_manifest(config_)) {
    Matrix<T> m(spec.rows, spec.cols);
    switch (spec.init) {
      case TensorSpec::Init::kZeros: m.setZero(); break;
      case TensorSpec::Init::kOnes: m.setOnes(); break;
      case TensorSpec::Init::kXavier: {
        const double a = std::sqrt(6.0 / (spec.rows + spec.cols));
        std::uniform_real_distribution<double> u(-a, a);
        for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<T>(u(rng));
        break;
      }
      case TensorSpec::Init::kEmbedding: {
        std::normal_distribution<double> n(0.0, 0.5);
        for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<T>(n(rng));
        break;
      }
    }
    params_.add(spec.name, std::move(m));
  }
}

template <typename T>
Model<T>::Model(ModelConfig config, Parameters<T> params)
    : config_(std::move(config)), vocab_(config_.charset, config_.chunk_size), params_(std::move(params)) {
  const auto manifest = tensor_manifest(config_);
  if (static_cast<int>(manifest.size()) != params_.size()) {
    throw std::invalid_argument("tensor count does not match the " + to_string(config_.variant) +
                                " manifest");
  }
  for (const TensorSpec& spec : manifest) {
    const int i = params_.index_of(spec.name);
    if (i < 0) throw std::invalid_argument("missing tensor " + spec.name);
    if (params_[i].rows() != spec.rows || params_[i].cols() != spec.cols) {
      throw std::invalid_argument("shape mismatch for tensor " + spec.name);
    }
  }
}

template <typename T>
Matrix<T> Model<T>::phrase_embedding(std::string_view phrase) const {
  const TokenizedText tok = tokenize(phrase, config_.chunk_size);
  if (tok.tokens.empty()) throw std::invalid_argument("empty phrase");
  Graph<T> g;
  ForwardPass<T> fp(*this, g);
  return g.value(fp.encode_bias({tok}));
}

template <typename T>
Prediction<T> Model<T>::forward(const InferenceInput& input, const BiasList& preselected,
                                const InferenceOptions& options) const {
  if (preselected.empty()) throw std::invalid_argument("bias list must not be empty");
  if (options.r < 0.0 || options.r > 1.0) throw std::invalid_argument("r must be in [0, 1]");
  Prediction<T> out;
  const TokenizedText tok = tokenize(input.hypothesis, config_.chunk_size);
  const auto n_b = static_cast<Eigen::Index>(preselected.size());
  if (tok.tokens.empty()) {
    out.cls_logits = Matrix<T>(0, kNumTags);
    out.cind_logits = Matrix<T>(0, n_b + 1);
    return out;
  }

  Graph<T> g;
  ForwardPass<T> fp(*this, g);
  ComponentTimes times;
  const T r = static_cast<T>(options.r);

  Var adapted;
  AudioFeatureMask mask;
  if (config_.uses_acoustics()) {
    if (input.frames == nullptr || input.frames->rows() == 0) {
      throw std::invalid_argument("acoustic variant requires frames");
    }
    const auto t0 = Clock::now();
    adapted = fp.adapt_acoustics(input.frames->template cast<T>());
    const int s_k = options.s_k > 0 ? options.s_k : config_.s_kmax;
    mask = build_audio_mask(input.word_frame_spans, tok.word_of_token,
                            static_cast<int>(input.frames->rows()), s_k);
    times.adapter_ms = elapsed_ms(t0);
  }

  auto t0 = Clock::now();
  const Var text = fp.encode_text(tok, adapted, &mask, r);
  times.text_encoder_ms = elapsed_ms(t0);

  t0 = Clock::now();
  Matrix<T> bias(n_b, config_.d_model);
  for (Eigen::Index j = 0; j < n_b; ++j) {
    const std::string& phrase = preselected[static_cast<std::size_t>(j)];
    if constexpr (std::is_same_v<T, float>) {
      if (options.cache) {
        if (auto hit = options.cache->get(phrase)) {
          bias.row(j) = hit->row(0);
          continue;
        }
        Matrix<T> row = phrase_embedding(phrase);
        bias.row(j) = row.row(0);
        options.cache->put(phrase, std::move(row));
        continue;
      }
    }
    bias.row(j) = phrase_embedding(phrase).row(0);
  }
  const Var bias_emb = g.input(std::move(bias));
  times.bias_encoder_ms = elapsed_ms(t0);

  t0 = Clock::now();
  const DecoderOutput dec = fp.decode(text, bias_emb, adapted, &mask, r);
  out.cls_logits = g.value(dec.cls_logits);
  out.cind_logits = g.value(dec.cind_logits);
  const auto cls = argmax_rows(out.cls_logits);
  out.tags.cind = argmax_rows(out.cind_logits);
  out.tags.cls.reserve(cls.size());
  for (int c : cls) out.tags.cls.push_back(static_cast<Tag>(c));
  times.decoder_ms = elapsed_ms(t0);

  if (options.times) *options.times += times;
  return out;
}

template <typename T>
ForwardPass<T>::ForwardPass(const Model<T>& model, Graph<T>& graph, Parameters<T>* grads,
                            const std::vector<bool>* trainable)
    : model_(model),
      graph_(graph),
      grads_(grads),
      trainable_(trainable),
      bound_(static_cast<std::size_t>(model.params().size())) {}

template <typename T>
Var ForwardPass<T>::param(std::string_view name) {
  const int i = model_.params().index_of(name);
  if (i < 0) throw std::out_of_range("no tensor named " + std::string(name));
  Var& slot = bound_[static_cast<std::size_t>(i)];
  if (!slot.valid()) {
    Matrix<T>* sink = nullptr;
    if (grads_ && (!trainable_ || (*trainable_)[static_cast<std::size_t>(i)])) sink = &(*grads_)[i];
    slot = graph_.param(model_.params()[i], sink);
  }
  return slot;
}

template <typename T>
Var ForwardPass<T>::linear(Var x, const std::string& prefix) {
  return graph_.add_row(graph_.matmul(x, param(prefix + ".w")), param(prefix + ".b"));
}

template <typename T>
Var ForwardPass<T>::layer_norm(Var x, const std::string& prefix) {
  return graph_.layer_norm(x, param(prefix + ".g"), param(prefix + ".b"));
}

template <typename T>
Var ForwardPass<T>::attention_block(const std::string& prefix, Var query_in, Var kv_in,
                                    const BoolMatrix* mask, std::span<const int> segments) {
  const Var q = linear(query_in, prefix + ".q");
  const Var k = linear(kv_in, prefix + ".k");
  const Var v = linear(kv_in, prefix + ".v");
  const Var ctx = graph_.attention(q, k, v, model_.config().n_heads, mask, segments);
  return linear(ctx, prefix + ".o");
}

template <typename T>
Var ForwardPass<T>::acoustic_block(const std::string& prefix, Var query_in, Var adapted,
                                   const AudioFeatureMask& mask) {
  const int d = model_.config().d_model;
  const auto n_frames = static_cast<int>(graph_.value(adapted).rows());
  if (mask.anchors.size() != static_cast<std::size_t>(graph_.value(query_in).rows())) {
    throw std::invalid_argument("audio mask anchors do not match the token count");
  }
  const Var q = linear(graph_.add(query_in, graph_.input(sinusoidal_at<T>(mask.anchors, d))), prefix + ".q");
  const Var k = linear(graph_.add(adapted, graph_.input(sinusoidal_positions<T>(n_frames, d))), prefix + ".k");
  const Var v = linear(adapted, prefix + ".v");
  const Var ctx = graph_.attention(q, k, v, model_.config().n_heads, &mask.allowed, {});
  acoustic_attention_.push_back(ctx);
  return linear(ctx, prefix + ".o");
}

template <typename T>
Var ForwardPass<T>::feed_forward(Var x, const std::string& prefix) {
  const Var h = graph_.relu(linear(x, prefix + ".in"));
  return linear(graph_.dropout(h, model_.config().dropout), prefix + ".out");
}

template <typename T>
Var ForwardPass<T>::adapt_acoustics(const Matrix<T>& frames) {
  const ModelConfig& c = model_.config();
  if (!c.uses_acoustics()) throw std::logic_error("text-only model has no acoustic adapter");
  if (frames.cols() != c.d_acoustic_in) {
    throw std::invalid_argument("frame width " + std::to_string(frames.cols()) + " != d_acoustic_in " +
                                std::to_string(c.d_acoustic_in));
  }
  if (frames.rows() < 1) throw std::invalid_argument("at least one frame required");
  const Var x = graph_.input(frames);
  const Var h = graph_.relu(linear(x, "adapter.in"));
  return linear(graph_.dropout(h, c.dropout), "adapter.out");
}

template <typename T>
Var ForwardPass<T>::encode_bias(const std::vector<TokenizedText>& phrases) {
  const ModelConfig& c = model_.config();
  if (phrases.empty()) throw std::invalid_argument("bias list must not be empty");
  std::vector<std::vector<int>> rows;
  std::vector<int> segments{0};
  Matrix<T> pe_all;
  std::vector<Matrix<T>> pes;
  for (const auto& p : phrases) {
    if (p.tokens.empty()) throw std::invalid_argument("empty phrase");
    auto f = model_.vocab().phrase_features(p);
    pes.push_back(sinusoidal_positions<T>(static_cast<int>(f.size()), c.d_model));
    for (auto& r : f) rows.push_back(std::move(r));
    segments.push_back(static_cast<int>(rows.size()));
  }
  pe_all.resize(static_cast<Eigen::Index>(rows.size()), c.d_model);
  for (std::size_t s = 0; s < pes.size(); ++s) pe_all.middleRows(segments[s], pes[s].rows()) = pes[s];

  Var x = graph_.add(graph_.embed_sum(param("emb.table"), std::move(rows)), graph_.input(std::move(pe_all)));
  for (int l = 0; l < c.n_layers_bias; ++l) {
    const std::string p = "bias." + std::to_string(l);
    Var h = layer_norm(x, p + ".ln1");
    x = graph_.add(x, graph_.dropout(attention_block(p + ".self", h, h, nullptr, segments), c.dropout));
    h = layer_norm(x, p + ".ln2");
    x = graph_.add(x, graph_.dropout(feed_forward(h, p + ".ff"), c.dropout));
  }
  x = layer_norm(x, "bias.ln_f");
  std::vector<int> starts(segments.begin(), segments.end() - 1);
  return graph_.gather_rows(x, std::move(starts));
}

template <typename T>
Var ForwardPass<T>::encode_text(const TokenizedText& tokens, Var adapted, const AudioFeatureMask* mask,
                                T r) {
  const ModelConfig& c = model_.config();
  const bool ea = c.variant == Variant::kEncoderAcoustic;
  if (ea && (!adapted.valid() || mask == nullptr)) {
    throw std::invalid_argument("encoder-acoustic variant requires adapted frames and a mask");
  }
  if (r < T(0) || r > T(1)) throw std::invalid_argument("r must be in [0, 1]");
  const int length = tokens.num_tokens();
  if (ea && (mask->allowed.rows() != length ||
             mask->allowed.cols() != graph_.value(adapted).rows())) {
    throw std::invalid_argument("audio mask shape mismatch");
  }
  Var x = graph_.add(graph_.embed_sum(param("emb.table"), model_.vocab().features(tokens)),
                     graph_.input(sinusoidal_positions<T>(length, c.d_model)));
  for (int l = 0; l < c.n_layers_text; ++l) {
    const std::string p = "text." + std::to_string(l);
    Var h = layer_norm(x, p + ".ln1");
    x = graph_.add(x, graph_.dropout(attention_block(p + ".self", h, h, nullptr, {}), c.dropout));
    if (ea) {
      h = layer_norm(x, p + ".acoustic_ln");
      const Var a = acoustic_block(p + ".acoustic", h, adapted, *mask);
      x = graph_.axpby(x, T(1), graph_.dropout(a, c.dropout), r);
    }
    h = layer_norm(x, p + ".ln2");
    x = graph_.add(x, graph_.dropout(feed_forward(h, p + ".ff"), c.dropout));
  }
  return layer_norm(x, "text.ln_f");
}

template <typename T>
DecoderOutput ForwardPass<T>::decode(Var text_hidden, Var bias_emb, Var adapted,
                                     const AudioFeatureMask* mask, T r) {
  const ModelConfig& c = model_.config();
  const bool da = c.variant == Variant::kDecoderAcoustic;
  if (graph_.value(bias_emb).rows() == 0) throw std::invalid_argument("decode needs at least one bias phrase");
  if (da && (!adapted.valid() || mask == nullptr)) {
    throw std::invalid_argument("decoder-acoustic variant requires adapted frames and a mask");
  }
  if (da && (mask->allowed.rows() != graph_.value(text_hidden).rows() ||
             mask->allowed.cols() != graph_.value(adapted).rows())) {
    throw std::invalid_argument("audio mask shape mismatch");
  }
  Var x = text_hidden;
  for (int l = 0; l < c.n_layers_dec; ++l) {
    const std::string p = "dec." + std::to_string(l);
    Var h = layer_norm(x, p + ".ln1");
    x = graph_.add(x, graph_.dropout(attention_block(p + ".self", h, h, nullptr, {}), c.dropout));
    if (da) {
      h = layer_norm(x, p + ".acoustic_ln");
      const Var a = acoustic_block(p + ".acoustic", h, adapted, *mask);
      x = graph_.axpby(x, T(1), graph_.dropout(a, c.dropout), r);
    }
    h = layer_norm(x, p + ".ln_bias");
    x = graph_.add(x, graph_.dropout(attention_block(p + ".cross", h, bias_emb, nullptr, {}), c.dropout));
    h = layer_norm(x, p + ".ln2");
    x = graph_.add(x, graph_.dropout(feed_forward(h, p + ".ff"), c.dropout));
  }
  x = layer_norm(x, "dec.ln_f");
  DecoderOutput out;
  out.cls_logits = linear(x, "head.cls");
  const Var query = linear(x, "head.cind");
  const Var keys = graph_.concat_rows(param("head.none"), bias_emb);
  out.cind_logits = graph_.scale(graph_.matmul_nt(query, keys), T(1) / std::sqrt(static_cast<T>(c.d_model)));
  return out;
}

template class Parameters<float>;
template class Parameters<double>;
template class Model<float>;
template class Model<double>;
template class ForwardPass<float>;
template class ForwardPass<double>;

}  // namespace ctxspell
