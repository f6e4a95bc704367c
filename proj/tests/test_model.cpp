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

#include "doctest.h"

#include <random>

#include "ctxspell/bias_cache.hpp"
#include "ctxspell/checkpoint.hpp"
#include "ctxspell/model.hpp"
#include "support.hpp"

namespace ctxspell {
namespace {

using testing::randomize;
using testing::tiny_model;

const Corpus& tiny_corpus() {
  static const Corpus corpus = gen_corpus(testing::tiny_sim(5));
  return corpus;
}

InferenceInput input_of(const Utterance& u) { return {u.hypothesis, &u.frames, u.word_frame_spans}; }

// Text-only weights copied into an acoustic model whose new tensors are random.
Model<double> acoustic_twin(const Model<double>& text, Variant variant, std::uint64_t seed) {
  ModelConfig c = text.config();
  c.variant = variant;
  Model<double> twin(c, seed);
  randomize(twin.params(), seed);
  for (const auto& name : text.params().names()) twin.params().at(name) = text.params().at(name);
  return twin;
}

TEST_CASE("variant names parse and print") {
  CHECK(parse_variant("text-only") == Variant::kTextOnly);
  CHECK(parse_variant("ea") == Variant::kEncoderAcoustic);
  CHECK(parse_variant("da") == Variant::kDecoderAcoustic);
  CHECK_THROWS_AS(parse_variant("xx"), std::invalid_argument);
  CHECK(to_string(Variant::kEncoderAcoustic) == "ea");
}

TEST_CASE("model config validation and JSON round trip") {
  ModelConfig c = tiny_model(Variant::kDecoderAcoustic);
  CHECK(ModelConfig::from_json(c.to_json()).to_json() == c.to_json());
  c.n_heads = 3;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  CHECK_THROWS_AS(ModelConfig::from_json({{"bogus", 1}}), std::invalid_argument);
  CHECK(tensor_manifest(ModelConfig::full_student()).size() < tensor_manifest(ModelConfig::full_teacher()).size());
}

TEST_CASE("new components are exactly adapter and acoustic attention") {
  const auto manifest = tensor_manifest(tiny_model(Variant::kEncoderAcoustic));
  int n_new = 0;
  for (const auto& spec : manifest) {
    const bool acoustic = spec.name.starts_with("adapter.") || spec.name.find("acoustic") != std::string::npos;
    CHECK(is_new_component(spec.name) == acoustic);
    n_new += acoustic ? 1 : 0;
  }
  CHECK(n_new == 2 * 2 + 2 + 4 * 2);
}

TEST_CASE("output shapes and well-formed decoding on random weights") {
  Model<double> model(tiny_model(), 3);
  const BiasList list({"a", "bb", "ccc", "dddd", "eeeee"});
  const auto pred = model.forward({"one two three four five six seven"}, list);
  CHECK(tokenize("one two three four five six seven").num_tokens() == 11);
  CHECK(pred.cls_logits.rows() == 11);
  CHECK(pred.cls_logits.cols() == 4);
  CHECK(pred.cind_logits.cols() == 6);

  const auto seven = model.forward({"aa bb cc dd ee ff gg"}, list);
  CHECK(seven.cls_logits.rows() == 7);
  CHECK(seven.cind_logits.cols() == 6);
  const auto spans = extract_spans(seven.tags.cls, seven.tags.cind);
  for (const auto& s : spans) {
    CHECK(s.phrase_index >= 1);
    CHECK(s.phrase_index <= 5);
    CHECK(s.token_start < s.token_end);
  }
  CHECK_THROWS_AS(model.forward({"aa"}, BiasList{}), std::invalid_argument);
}

TEST_CASE("argmax ties resolve to the lowest column") {
  Matrix<double> m(2, 3);
  m << 1, 1, 0, 0, 2, 2;
  CHECK(argmax_rows(m) == std::vector<int>{0, 1});
}

TEST_CASE("audio mask windows") {
  const std::vector<Range> one{{0, 4}};
  const std::vector<int> tok1{0, 0};
  const auto m1 = build_audio_mask(one, tok1, 4, 1);
  CHECK(m1.allowed.all());

  const std::vector<Range> five{{0, 2}, {2, 4}, {4, 6}, {6, 8}, {8, 10}};
  const std::vector<int> tok5{0, 1, 2, 3, 4};
  const auto m5 = build_audio_mask(five, tok5, 10, 1);
  for (int f = 0; f < 10; ++f) CHECK(m5.allowed(2, f) == (f >= 2 && f < 8));
  CHECK(build_audio_mask(five, tok5, 10, 5).allowed.all());
  CHECK(m5.holes == 0);
  CHECK_THROWS_AS(build_audio_mask(five, tok5, 10, 0), std::invalid_argument);
}

TEST_CASE("audio mask anchors split each word span between its tokens") {
  const std::vector<Range> spans{{0, 4}, {4, 10}};
  const std::vector<int> tok{0, 1, 1, 1};
  const auto m = build_audio_mask(spans, tok, 10, 1);
  REQUIRE(m.anchors.size() == 4);
  CHECK(m.anchors[0] == doctest::Approx(2.0));
  CHECK(m.anchors[1] == doctest::Approx(5.0));
  CHECK(m.anchors[2] == doctest::Approx(7.0));
  CHECK(m.anchors[3] == doctest::Approx(9.0));
}

TEST_CASE("sinusoidal encodings agree at integer positions") {
  const auto table = sinusoidal_positions<double>(6, 8);
  const std::vector<double> pos{0, 1, 2, 3, 4, 5};
  CHECK((sinusoidal_at<double>(pos, 8) - table).cwiseAbs().maxCoeff() == 0.0);
  CHECK(table(0, 0) == 0.0);
  CHECK(table(0, 1) == 1.0);
  CHECK(table(3, 0) == doctest::Approx(std::sin(3.0)));
}

TEST_CASE("acoustic adapter: zero input and zero biases give zero output") {
  Model<double> model(tiny_model(Variant::kEncoderAcoustic), 1);
  randomize(model.params(), 2);
  model.params().at("adapter.in.b").setZero();
  model.params().at("adapter.out.b").setZero();
  Graph<double> g;
  ForwardPass<double> fp(model, g);
  const Var out = fp.adapt_acoustics(Matrix<double>::Zero(5, model.config().d_acoustic_in));
  CHECK(g.value(out).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("acoustic adapter: identity weights pass ReLU(frames) through") {
  ModelConfig c = tiny_model(Variant::kDecoderAcoustic);
  c.d_acoustic_in = c.d_adapter_hidden = c.d_model;
  Model<double> model(c, 1);
  model.params().at("adapter.in.w").setIdentity();
  model.params().at("adapter.out.w").setIdentity();
  model.params().at("adapter.in.b").setZero();
  model.params().at("adapter.out.b").setZero();
  Matrix<double> frames = Matrix<double>::Random(4, c.d_model);
  Graph<double> g;
  ForwardPass<double> fp(model, g);
  const Var out = fp.adapt_acoustics(frames);
  CHECK((g.value(out) - frames.cwiseMax(0.0)).cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(fp.adapt_acoustics(Matrix<double>::Zero(4, c.d_model + 1)), std::invalid_argument);
}

TEST_CASE("acoustic variants at r = 0 reproduce the text-only model") {
  Model<double> text(tiny_model(), 4);
  randomize(text.params(), 5);
  const Corpus& corpus = tiny_corpus();
  const BiasList list({"sam", corpus.test[0].name, "dong"});
  for (Variant v : {Variant::kEncoderAcoustic, Variant::kDecoderAcoustic}) {
    const Model<double> twin = acoustic_twin(text, v, 6);
    for (const Utterance& u : corpus.test) {
      const auto a = text.forward(input_of(u), list);
      InferenceOptions opt;
      opt.r = 0.0;
      const auto b = twin.forward(input_of(u), list, opt);
      CHECK((a.cls_logits - b.cls_logits).cwiseAbs().maxCoeff() <= 1e-12);
      CHECK((a.cind_logits - b.cind_logits).cwiseAbs().maxCoeff() <= 1e-12);
      opt.r = 1.0;
      const auto c = twin.forward(input_of(u), list, opt);
      CHECK((a.cls_logits - c.cls_logits).cwiseAbs().maxCoeff() > 1e-9);
    }
  }
}

TEST_CASE("masked frames get exactly zero attention") {
  const Corpus& corpus = tiny_corpus();
  for (Variant v : {Variant::kEncoderAcoustic, Variant::kDecoderAcoustic}) {
    Model<double> model(tiny_model(v), 8);
    randomize(model.params(), 9);
    const Utterance& u = corpus.test[1];
    TrainingExample ex;
    ex.hypothesis = u.hypothesis;
    ex.bias_list = BiasList({u.name, "sam"});
    ex.frames = &u.frames;
    ex.word_frame_spans = u.word_frame_spans;
    ex.s_k = 1;
    const ExampleInputs in = prepare_inputs(ex, model.config());
    Graph<double> g;
    ForwardPass<double> fp(model, g);
    run_example(fp, in, ex, model.config(), 1.0);
    REQUIRE(fp.acoustic_attention().size() == 1);
    bool some_masked = false;
    for (const auto& probs : g.attention_probs(fp.acoustic_attention()[0])) {
      REQUIRE(probs.rows() == in.mask.allowed.rows());
      for (Eigen::Index t = 0; t < probs.rows(); ++t) {
        CHECK(probs.row(t).sum() == doctest::Approx(1.0));
        for (Eigen::Index f = 0; f < probs.cols(); ++f) {
          if (!in.mask.allowed(t, f)) {
            some_masked = true;
            CHECK(probs(t, f) == 0.0);
          }
        }
      }
    }
    CHECK(some_masked);
  }
}

TEST_CASE("permuting the bias list permutes context-index logits") {
  Model<double> model(tiny_model(), 10);
  randomize(model.params(), 11);
  std::vector<std::string> phrases{"sam", "john smith", "dong", "eliza", "hugo"};
  const auto base = model.forward({"call jon smith now"}, BiasList(phrases));
  std::vector<int> perm{3, 0, 4, 1, 2};
  std::vector<std::string> permuted;
  for (int p : perm) permuted.push_back(phrases[static_cast<std::size_t>(p)]);
  const auto moved = model.forward({"call jon smith now"}, BiasList(permuted));
  CHECK((base.cls_logits - moved.cls_logits).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((base.cind_logits.col(0) - moved.cind_logits.col(0)).cwiseAbs().maxCoeff() <= 1e-12);
  for (std::size_t j = 0; j < perm.size(); ++j) {
    const auto diff = (moved.cind_logits.col(static_cast<Eigen::Index>(j) + 1) -
                       base.cind_logits.col(perm[j] + 1)).cwiseAbs().maxCoeff();
    CHECK(diff <= 1e-12);
  }
}

TEST_CASE("phrase embeddings do not depend on the rest of the batch") {
  Model<double> model(tiny_model(), 12);
  randomize(model.params(), 13);
  const std::vector<std::string> phrases{"sam", "john smith", "dong", "eliza", "hugo", "a", "ann lee", "sam"};
  std::vector<TokenizedText> toks;
  for (const auto& p : phrases) toks.push_back(tokenize(p));
  Graph<double> g;
  ForwardPass<double> fp(model, g);
  const Matrix<double> batch = g.value(fp.encode_bias(toks));
  REQUIRE(batch.rows() == 8);
  for (std::size_t j = 0; j < phrases.size(); ++j) {
    CHECK((batch.row(static_cast<Eigen::Index>(j)) - model.phrase_embedding(phrases[j])).cwiseAbs().maxCoeff() < 1e-5);
  }
  CHECK((batch.row(0) - batch.row(7)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("cached bias embeddings leave predictions unchanged") {
  Model<float> model(tiny_model(), 14);
  randomize(model.params(), 15);
  const BiasList list({"sam", "john smith", "dong"});
  BiasEmbeddingCache<float> cache(2);
  InferenceOptions opt;
  opt.cache = &cache;
  const auto plain = model.forward({"call jon smith"}, list);
  for (int pass = 0; pass < 3; ++pass) {
    const auto cached = model.forward({"call jon smith"}, list, opt);
    CHECK(cached.cind_logits == plain.cind_logits);
    CHECK(cached.cls_logits == plain.cls_logits);
  }
  CHECK(cache.size() == 2);
  CHECK(cache.evictions() > 0);
}

TEST_CASE("LRU cache order and counters") {
  BiasEmbeddingCache<float> cache(2);
  cache.put("a", Matrix<float>::Constant(1, 2, 1));
  cache.put("b", Matrix<float>::Constant(1, 2, 2));
  CHECK(cache.get("a").has_value());
  cache.put("c", Matrix<float>::Constant(1, 2, 3));
  CHECK(cache.contains("a"));
  CHECK_FALSE(cache.contains("b"));
  CHECK_FALSE(cache.get("b").has_value());
  CHECK(cache.hits() == 1);
  CHECK(cache.misses() == 1);
  CHECK(cache.hit_rate() == doctest::Approx(0.5));
  BiasEmbeddingCache<float> off(0);
  off.put("a", Matrix<float>::Constant(1, 2, 1));
  CHECK(off.size() == 0);
}

TEST_CASE("checkpoint round trip is exact and rejects corruption") {
  Model<float> model(tiny_model(Variant::kEncoderAcoustic), 16);
  randomize(model.params(), 17);
  const std::string bytes = encode_checkpoint(model);
  const Model<float> back = decode_checkpoint(bytes);
  CHECK(back.config().to_json() == model.config().to_json());
  for (int i = 0; i < model.params().size(); ++i) CHECK(back.params()[i] == model.params()[i]);
  CHECK_THROWS_AS(decode_checkpoint(bytes.substr(0, bytes.size() / 2)), std::runtime_error);
  CHECK_THROWS_AS(decode_checkpoint("NOTACKPT"), std::runtime_error);
  testing::TempDir dir("ckpt");
  save_checkpoint(model, dir / "m.ckpt");
  CHECK(testing::read_file(dir / "m.ckpt") == bytes);
  CHECK_THROWS_AS(load_checkpoint(dir / "missing.ckpt"), std::runtime_error);
}

TEST_CASE("backprop matches finite differences through every tensor") {
  const Corpus& corpus = tiny_corpus();
  const auto examples = testing::sample_examples(corpus, 2, 21);
  for (Variant v : {Variant::kTextOnly, Variant::kEncoderAcoustic, Variant::kDecoderAcoustic}) {
    Model<double> model(tiny_model(v), 22);
    randomize(model.params(), 23);
    for (const auto& r : testing::grad_check(model, examples[0], 0.7, 24)) {
      INFO(to_string(v) << " " << r.tensor << " rel " << r.rel_error << " |fd| " << r.fd_norm);
      CHECK(testing::grad_ok(r, 1e-3));
    }
  }
}

}  // namespace
}  // namespace ctxspell
