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

#ifndef CTXSPELL_MODEL_HPP_
#define CTXSPELL_MODEL_HPP_

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "ctxspell/graph.hpp"
#include "ctxspell/ranker.hpp"
#include "ctxspell/tagging.hpp"
#include "ctxspell/textcore.hpp"

namespace ctxspell {

template <typename T>
class BiasEmbeddingCache;

enum class Variant {
  kTextOnly,         // no acoustics
  kEncoderAcoustic,  // acoustic cross-attention inside each text encoder layer
  kDecoderAcoustic,  // acoustic cross-attention inside each decoder layer
};

std::string to_string(Variant v);
// Accepts "text-only", "ea", "da".
Variant parse_variant(std::string_view s);

struct ModelConfig {
  Variant variant = Variant::kTextOnly;
  int n_layers_text = 1;
  int n_layers_bias = 1;
  int n_layers_dec = 1;
  int d_model = 64;
  int n_heads = 4;
  int d_ff = 128;
  int d_acoustic_in = 32;
  int d_adapter_hidden = 64;
  double dropout = 0.0;
  int s_kmax = 2;
  int chunk_size = kDefaultChunkSize;
  // Character inventory; token embeddings are built from (char, offset) rows.
  std::string charset = "abcdefghijklmnopqrstuvwxyz0123456789.'-";

  bool uses_acoustics() const { return variant != Variant::kTextOnly; }

  static ModelConfig full_teacher();
  static ModelConfig full_student();
  static ModelConfig desk();

  // Throws std::invalid_argument.
  void validate() const;
  nlohmann::json to_json() const;
  // Unknown keys are rejected; missing keys keep defaults.
  static ModelConfig from_json(const nlohmann::json& j);
};

// Maps chunk tokens to lists of embedding rows:
// row 0 word-initial flag, row 1 word-internal flag, row 2 phrase start,
// then one row per (character, offset within chunk).
class CharVocab {
 public:
  static constexpr int kWordStartRow = 0;
  static constexpr int kWordInnerRow = 1;
  static constexpr int kPhraseStartRow = 2;

  CharVocab(std::string_view charset, int chunk_size);

  int num_rows() const;
  int char_id(char32_t c) const;  // unknown -> num_chars()
  int num_chars() const { return static_cast<int>(chars_.size()); }

  std::vector<std::vector<int>> features(const TokenizedText& text) const;
  // Phrase-start row followed by the phrase's token rows.
  std::vector<std::vector<int>> phrase_features(const TokenizedText& phrase) const;

  // Sorted distinct code points of `texts` (after normalization).
  static std::string build_charset(const std::vector<std::string>& texts);

 private:
  std::u32string chars_;
  std::map<char32_t, int> index_;
  int chunk_size_;
};

template <typename T>
class Parameters {
 public:
  int add(std::string name, Matrix<T> value);
  int index_of(std::string_view name) const;
  bool contains(std::string_view name) const { return index_of(name) >= 0; }

  Matrix<T>& operator[](int i) { return values_[static_cast<std::size_t>(i)]; }
  const Matrix<T>& operator[](int i) const { return values_[static_cast<std::size_t>(i)]; }
  Matrix<T>& at(std::string_view name);
  const Matrix<T>& at(std::string_view name) const;

  const std::vector<std::string>& names() const { return names_; }
  int size() const { return static_cast<int>(values_.size()); }
  std::size_t scalar_count() const;

  Parameters zeros_like() const;
  void set_zero();

  template <typename U>
  Parameters<U> cast() const {
    Parameters<U> out;
    for (std::size_t i = 0; i < values_.size(); ++i) out.add(names_[i], values_[i].template cast<U>());
    return out;
  }

 private:
  std::vector<std::string> names_;
  std::vector<Matrix<T>> values_;
  std::map<std::string, int, std::less<>> index_;
};

// Acoustic adapter and acoustic attention tensors: the only tensors
// updated by partial adaptation.
bool is_new_component(std::string_view name);

struct TensorSpec {
  std::string name;
  int rows = 0;
  int cols = 0;
  enum class Init { kXavier, kEmbedding, kZeros, kOnes } init = Init::kXavier;
};

// Every tensor the variant needs, in manifest order.
std::vector<TensorSpec> tensor_manifest(const ModelConfig& config);

struct AudioFeatureMask {
  BoolMatrix allowed;  // [n_tokens x n_frames]
  int holes = 0;       // tokens that fell back to allow-all
  // Frame coordinate of each token inside its word's aligned span: the
  // span is split evenly between the word's tokens and each token sits at
  // the middle of its share. Positionally encoded on the query side.
  std::vector<double> anchors;
};

// Token t (source word w) may attend to frames of words [w - s_k, w + s_k].
AudioFeatureMask build_audio_mask(std::span<const Range> word_frame_spans,
                                  std::span<const int> word_of_token, int n_frames, int s_k);

// Sinusoidal position table [length x d_model].
template <typename T>
Matrix<T> sinusoidal_positions(int length, int d_model);
// Same encoding at arbitrary (possibly fractional) positions.
template <typename T>
Matrix<T> sinusoidal_at(std::span<const double> positions, int d_model);

struct ComponentTimes {
  double adapter_ms = 0.0;
  double text_encoder_ms = 0.0;
  double bias_encoder_ms = 0.0;
  double decoder_ms = 0.0;

  double total_ms() const { return adapter_ms + text_encoder_ms + bias_encoder_ms + decoder_ms; }
  ComponentTimes& operator+=(const ComponentTimes& o);
};

struct InferenceInput {
  std::string hypothesis;
  const Matrix<float>* frames = nullptr;  // required for acoustic variants
  std::vector<Range> word_frame_spans;    // per hypothesis word
};

struct InferenceOptions {
  double r = 1.0;
  int s_k = 0;  // 0 selects s_kmax
  BiasEmbeddingCache<float>* cache = nullptr;
  ComponentTimes* times = nullptr;
};

template <typename T>
struct Prediction {
  TagTarget tags;
  Matrix<T> cls_logits;   // [L x 4]
  Matrix<T> cind_logits;  // [L x (N_b + 1)]
};

template <typename T>
class Model {
 public:
  // Fresh initialization; acoustic output projections start at zero.
  Model(ModelConfig config, std::uint64_t seed);
  // Validates the manifest against the config.
  Model(ModelConfig config, Parameters<T> params);

  const ModelConfig& config() const { return config_; }
  const CharVocab& vocab() const { return vocab_; }
  const Parameters<T>& params() const { return params_; }
  Parameters<T>& params() { return params_; }

  template <typename U>
  Model<U> cast() const {
    return Model<U>(config_, params_.template cast<U>());
  }

  // Per-position argmax (ties toward O / 0) plus raw logits.
  // `preselected` is the ranker output; must be non-empty.
  Prediction<T> forward(const InferenceInput& input, const BiasList& preselected,
                        const InferenceOptions& options = {}) const;

  // One phrase embedding row [1 x d_model], computed alone.
  Matrix<T> phrase_embedding(std::string_view phrase) const;

 private:
  ModelConfig config_;
  CharVocab vocab_;
  Parameters<T> params_;
};

struct DecoderOutput {
  Var cls_logits;
  Var cind_logits;
};

// Binds a model's parameters into one graph and builds the network pieces.
template <typename T>
class ForwardPass {
 public:
  // With `grads`, parameter leaves accumulate gradients into it.
  // `trainable` (per tensor index) limits which parameters receive them.
  ForwardPass(const Model<T>& model, Graph<T>& graph, Parameters<T>* grads = nullptr,
              const std::vector<bool>* trainable = nullptr);

  // linear -> ReLU -> dropout -> linear, per frame.
  Var adapt_acoustics(const Matrix<T>& frames);
  // Phrases stacked into one block-diagonal pass; row j pools phrase j's
  // phrase-start position.
  Var encode_bias(const std::vector<TokenizedText>& phrases);
  // `adapted`/`mask` required for the encoder-acoustic variant, ignored
  // otherwise.
  Var encode_text(const TokenizedText& tokens, Var adapted, const AudioFeatureMask* mask, T r);
  DecoderOutput decode(Var text_hidden, Var bias_emb, Var adapted, const AudioFeatureMask* mask, T r);

  // Outputs of every acoustic attention core, in layer order.
  const std::vector<Var>& acoustic_attention() const { return acoustic_attention_; }

  Var param(std::string_view name);

 private:
  Var linear(Var x, const std::string& prefix);
  Var layer_norm(Var x, const std::string& prefix);
  Var attention_block(const std::string& prefix, Var query_in, Var kv_in, const BoolMatrix* mask,
                      std::span<const int> segments);
  Var feed_forward(Var x, const std::string& prefix);
  // Cross-attention from text to adapted frames. Queries carry the
  // positional encoding of each token's aligned frame coordinate and keys
  // that of the frame index, so heads can focus on the token's own audio.
  Var acoustic_block(const std::string& prefix, Var query_in, Var adapted, const AudioFeatureMask& mask);

  const Model<T>& model_;
  Graph<T>& graph_;
  Parameters<T>* grads_;
  const std::vector<bool>* trainable_;
  std::vector<Var> bound_;
  std::vector<Var> acoustic_attention_;
};

// Row-wise argmax with ties resolved to the lowest column.
template <typename T>
std::vector<int> argmax_rows(const Matrix<T>& m);

extern template class Parameters<float>;
extern template class Parameters<double>;
extern template class Model<float>;
extern template class Model<double>;
extern template class ForwardPass<float>;
extern template class ForwardPass<double>;

}  // namespace ctxspell

#endif  // CTXSPELL_MODEL_HPP_
