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

#include "ctxspell/simdata.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace ctxspell {

namespace {

// Symbol ids: vowels and r-colored vowels first, then consonants.
enum Ph : int {
  A, E, I, O, U, AY, AW, OY, IY, ER,
  B, CH, D, F, G, H, J, K, L, M,
  N, NG, P, R, S, SH, T, TH, V, W,
  Y, Z, KS, KW, ZH, AR, OR, UW, AH, SIL,
};

constexpr std::array<std::string_view, kNumPhonemes> kSymbols = {
    "A", "E", "I", "O", "U", "AY", "AW", "OY", "IY", "ER",
    "B", "CH", "D", "F", "G", "H", "J", "K", "L", "M",
    "N", "NG", "P", "R", "S", "SH", "T", "TH", "V", "W",
    "Y", "Z", "KS", "KW", "ZH", "AR", "OR", "UW", "AH", "SIL"};

struct Digraph {
  std::string_view letters;
  int symbol;
  bool r_colored;
};

constexpr Digraph kDigraphs[] = {
    {"ph", F, false},  {"ck", K, false},  {"sh", SH, false}, {"ch", CH, false}, {"th", TH, false},
    {"ng", NG, false}, {"qu", KW, false}, {"wh", W, false},  {"ai", AY, false}, {"ay", AY, false},
    {"oi", OY, false}, {"oy", OY, false}, {"ou", AW, false}, {"ow", AW, false}, {"au", AW, false},
    {"aw", AW, false}, {"ea", IY, false}, {"ie", IY, false}, {"ei", IY, false}, {"ey", IY, false},
    {"ar", AR, true},  {"or", OR, true},  {"er", ER, true},  {"ir", ER, true},  {"ur", ER, true},
};

constexpr std::array<int, 26> kLetters = {
    A, B, K, D, E, F, G, H, I, J, K, L, M, N, O, P, K, R, S, T, U, V, W, KS, Y, Z};

bool is_vowel(char c) { return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u'; }

template <typename Seq>
int seq_distance(const Seq& a, const Seq& b) {
  std::vector<int> prev(b.size() + 1);
  std::vector<int> cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = static_cast<int>(j);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = static_cast<int>(i);
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = std::min({prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1), prev[j] + 1, cur[j - 1] + 1});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

std::vector<std::string> dedupe(const std::vector<std::string>& in) {
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  for (const auto& s : in) {
    if (seen.insert(s).second) out.push_back(s);
  }
  return out;
}

// Pronounceable filler names for inventories larger than the base lists.
std::string syllable_name(Rng& rng) {
  static constexpr std::array<std::string_view, 16> onsets = {"b", "d", "f", "g", "h", "j", "k", "l",
                                                              "m", "n", "p", "r", "s", "t", "v", "z"};
  static constexpr std::array<std::string_view, 8> nuclei = {"a", "e", "i", "o", "u", "ai", "ee", "oa"};
  static constexpr std::array<std::string_view, 8> codas = {"", "n", "l", "r", "s", "th", "m", "x"};
  std::uniform_int_distribution<int> syllables(2, 3);
  const int count = syllables(rng);
  std::string out;
  for (int s = 0; s < count; ++s) {
    out += onsets[std::uniform_int_distribution<std::size_t>(0, onsets.size() - 1)(rng)];
    out += nuclei[std::uniform_int_distribution<std::size_t>(0, nuclei.size() - 1)(rng)];
  }
  out += codas[std::uniform_int_distribution<std::size_t>(0, codas.size() - 1)(rng)];
  return out;
}

template <typename V>
const typename V::value_type& pick(const V& v, Rng& rng) {
  return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng)];
}

double quantize(double x) { return std::round(x * 1e4) / 1e4; }

nlohmann::json ranges_to_json(const std::vector<Range>& ranges) {
  nlohmann::json out = nlohmann::json::array();
  for (const Range& r : ranges) out.push_back({r.begin, r.end});
  return out;
}

std::vector<Range> ranges_from_json(const nlohmann::json& j) {
  std::vector<Range> out;
  for (const auto& r : j) out.push_back({r.at(0).get<int>(), r.at(1).get<int>()});
  return out;
}

std::string check_spans(const std::vector<Range>& spans, int n_frames, const char* what) {
  int prev_begin = 0;
  for (const Range& r : spans) {
    if (r.begin < 0 || r.end > n_frames || r.begin >= r.end) {
      return std::string(what) + " span outside frames";
    }
    if (r.begin < prev_begin) return std::string(what) + " spans not sorted";
    prev_begin = r.begin;
  }
  return {};
}

const std::vector<std::string>& time_phrases() {
  static const std::vector<std::string> v = {"ten a.m.", "nine thirty", "noon", "three p.m.",
                                             "eight fifteen", "four o'clock", "half past two"};
  return v;
}

const std::vector<std::string>& day_phrases() {
  static const std::vector<std::string> v = {"tomorrow", "today", "on monday", "on friday", "next week"};
  return v;
}

std::string fill_slot(std::string text, std::string_view slot, const std::string& value) {
  const auto pos = text.find(slot);
  if (pos != std::string::npos) text.replace(pos, slot.size(), value);
  return text;
}

Utterance make_utterance(std::string id, const std::string& name, const Corpus& corpus, const SimConfig& cfg,
                         const Matrix<float>& codebook, Rng& rng) {
  std::string tmpl = pick(carrier_templates(), rng);
  tmpl = fill_slot(tmpl, "{time}", pick(time_phrases(), rng));
  tmpl = fill_slot(tmpl, "{day}", pick(day_phrases(), rng));
  const auto slot = tmpl.find("{name}");
  const std::vector<std::string> before = split_words(tmpl.substr(0, slot));
  const std::vector<std::string> after = split_words(tmpl.substr(slot + 6));
  const std::vector<std::string> name_words = split_words(name);

  Utterance u;
  u.id = std::move(id);
  u.name = name;
  u.name_word_span = {static_cast<int>(before.size()), static_cast<int>(before.size() + name_words.size())};
  std::vector<std::string> ref = before;
  ref.insert(ref.end(), name_words.begin(), name_words.end());
  ref.insert(ref.end(), after.begin(), after.end());
  u.reference = join_words(ref);

  std::bernoulli_distribution carrier_noise(cfg.p_carrier_noise);
  std::vector<std::string> hyp;
  auto noisy = [&](const std::vector<std::string>& words) {
    for (const auto& w : words) hyp.push_back(carrier_noise(rng) ? random_char_edit(w, rng) : w);
  };
  noisy(before);
  const std::vector<std::string> spoken =
      split_words(corrupt_name(name, corpus.names, cfg.p_name_corrupt, rng, CorruptionMode::kNatural));
  hyp.insert(hyp.end(), spoken.begin(), spoken.end());
  noisy(after);
  u.hypothesis = join_words(hyp);

  FrameSynthesis synth = synth_frames(u.reference, cfg, codebook, rng);
  u.frames = std::move(synth.frames);
  u.exact_spans = std::move(synth.word_spans);
  u.word_frame_spans = jitter_alignment(u.exact_spans, ref, hyp, static_cast<int>(u.frames.rows()),
                                        cfg.max_jitter, rng);
  return u;
}

}  // namespace

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9E3779B97F4A7C15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

void SimConfig::validate() const {
  auto prob = [](double p, const char* what) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument(std::string(what) + " must be in [0, 1]");
  };
  prob(p_name_corrupt, "p_name_corrupt");
  prob(p_carrier_noise, "p_carrier_noise");
  prob(p_full_name, "p_full_name");
  if (n_names < 2) throw std::invalid_argument("n_names must be >= 2");
  if (n_train < 0 || n_test < 0) throw std::invalid_argument("utterance counts must be >= 0");
  if (frames_per_phoneme < 1) throw std::invalid_argument("frames_per_phoneme must be >= 1");
  if (frame_noise_sigma < 0.0) throw std::invalid_argument("frame_noise_sigma must be >= 0");
  if (d_acoustic_in < 1) throw std::invalid_argument("d_acoustic_in must be >= 1");
  if (max_jitter < 0) throw std::invalid_argument("max_jitter must be >= 0");
  if (distractor_pool_size < 0) throw std::invalid_argument("distractor_pool_size must be >= 0");
}

nlohmann::json SimConfig::to_json() const {
  return {{"n_names", n_names},
          {"n_train", n_train},
          {"n_test", n_test},
          {"p_name_corrupt", p_name_corrupt},
          {"p_carrier_noise", p_carrier_noise},
          {"p_full_name", p_full_name},
          {"frames_per_phoneme", frames_per_phoneme},
          {"frame_noise_sigma", frame_noise_sigma},
          {"d_acoustic_in", d_acoustic_in},
          {"max_jitter", max_jitter},
          {"distractor_pool_size", distractor_pool_size},
          {"seed", seed}};
}

SimConfig SimConfig::from_json(const nlohmann::json& j) {
  SimConfig c;
  const nlohmann::json defaults = c.to_json();
  if (!j.is_object()) throw std::invalid_argument("sim config must be an object");
  for (const auto& [key, _] : j.items()) {
    if (!defaults.contains(key)) throw std::invalid_argument("unknown sim config key: " + key);
  }
  auto get = [&j](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  get("n_names", c.n_names);
  get("n_train", c.n_train);
  get("n_test", c.n_test);
  get("p_name_corrupt", c.p_name_corrupt);
  get("p_carrier_noise", c.p_carrier_noise);
  get("p_full_name", c.p_full_name);
  get("frames_per_phoneme", c.frames_per_phoneme);
  get("frame_noise_sigma", c.frame_noise_sigma);
  get("d_acoustic_in", c.d_acoustic_in);
  get("max_jitter", c.max_jitter);
  get("distractor_pool_size", c.distractor_pool_size);
  get("seed", c.seed);
  c.validate();
  return c;
}

PhonemeSeq pseudo_phonemes(std::string_view word) {
  std::string s;
  for (char c : word) {
    const char lc = (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
    if (lc >= 'a' && lc <= 'z' && (s.empty() || s.back() != lc)) s.push_back(lc);
  }
  const std::size_t n = s.size();
  PhonemeSeq out;
  std::size_t i = 0;
  while (i < n) {
    const char c = s[i];
    const char next = i + 1 < n ? s[i + 1] : '\0';
    if (i == 0 && n > 2 && c == 'k' && next == 'n') {
      out.push_back(N);
      i += 2;
      continue;
    }
    if (i == 0 && n > 2 && c == 'w' && next == 'r') {
      out.push_back(R);
      i += 2;
      continue;
    }
    bool matched = false;
    if (i + 1 < n) {
      for (const Digraph& dg : kDigraphs) {
        if (dg.letters[0] != c || dg.letters[1] != next) continue;
        if (dg.r_colored && i + 2 < n && (is_vowel(s[i + 2]) || s[i + 2] == 'y')) continue;
        out.push_back(dg.symbol);
        i += 2;
        matched = true;
        break;
      }
    }
    if (matched) continue;
    const char prev = i > 0 ? s[i - 1] : '\0';
    switch (c) {
      case 'e':
        if (!(i == n - 1 && n > 2 && !is_vowel(prev))) out.push_back(E);  // silent final e
        break;
      case 'y': out.push_back(i == 0 ? Y : I); break;
      case 'c': out.push_back((next == 'e' || next == 'i' || next == 'y') ? S : K); break;
      case 'g': out.push_back((next == 'e' || next == 'i' || next == 'y') ? J : G); break;
      case 'h':
        if (i == 0 || !is_vowel(prev)) out.push_back(H);  // silent after a vowel
        break;
      default: out.push_back(kLetters[static_cast<std::size_t>(c - 'a')]); break;
    }
    ++i;
  }
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

PhonemeSeq phrase_phonemes(std::string_view phrase) {
  PhonemeSeq out;
  for (const auto& w : split_words(phrase)) {
    const PhonemeSeq p = pseudo_phonemes(w);
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

std::string_view phoneme_symbol(int id) {
  if (id < 0 || id >= kNumPhonemes) throw std::out_of_range("phoneme id");
  return kSymbols[static_cast<std::size_t>(id)];
}

int phoneme_edit_distance(const PhonemeSeq& a, const PhonemeSeq& b) { return seq_distance(a, b); }

std::vector<std::string> build_name_inventory(const SimConfig& cfg) {
  cfg.validate();
  Rng rng(mix_seed(cfg.seed, 3));
  std::vector<std::string> given = dedupe(base_given_names());
  const std::size_t anchors = 8;  // john, jon, jane, june, joe, joan, sam, dong
  std::shuffle(given.begin() + static_cast<std::ptrdiff_t>(anchors), given.end(), rng);
  const auto n = static_cast<std::size_t>(cfg.n_names);
  const auto n_full = static_cast<std::size_t>(std::lround(cfg.p_full_name * static_cast<double>(n)));
  const std::size_t n_single = n - n_full;

  std::vector<std::string> out;
  std::unordered_set<std::string> used;
  for (std::size_t i = 0; i < given.size() && out.size() < n_single; ++i) {
    out.push_back(given[i]);
    used.insert(given[i]);
  }
  while (out.size() < n_single) {
    std::string s = syllable_name(rng);
    if (used.insert(s).second) out.push_back(std::move(s));
  }
  const auto& surnames = base_surnames();
  while (out.size() < n) {
    std::string s = pick(given, rng) + " " + pick(surnames, rng);
    if (used.insert(s).second) out.push_back(std::move(s));
  }
  return out;
}

std::vector<std::string> build_distractor_pool(const std::vector<std::string>& inventory, const SimConfig& cfg) {
  Rng rng(mix_seed(cfg.seed, 4));
  std::unordered_set<std::string> used(inventory.begin(), inventory.end());
  std::vector<std::string> out;
  const auto target = static_cast<std::size_t>(cfg.distractor_pool_size);
  for (const auto& g : dedupe(base_given_names())) {
    if (out.size() >= target) break;
    if (used.insert(g).second) out.push_back(g);
  }
  const std::vector<std::string> given = dedupe(base_given_names());
  int guard = 0;
  while (out.size() < target && guard++ < 1000000) {
    std::string s = (out.size() % 2 == 0) ? pick(given, rng) + " " + pick(base_surnames(), rng)
                                          : syllable_name(rng);
    if (used.insert(s).second) out.push_back(std::move(s));
  }
  return out;
}

std::string random_char_edit(std::string_view phrase, Rng& rng) {
  const std::string original(phrase);
  std::vector<std::size_t> positions;
  for (std::size_t i = 0; i < original.size(); ++i) {
    if (original[i] != ' ') positions.push_back(i);
  }
  if (positions.empty()) return original + "a";
  std::uniform_int_distribution<int> letter('a', 'z');
  std::uniform_int_distribution<int> op(0, 2);
  for (int attempt = 0; attempt < 64; ++attempt) {
    std::string s = original;
    const std::size_t pos = pick(positions, rng);
    switch (op(rng)) {
      case 0: s[pos] = static_cast<char>(letter(rng)); break;
      case 1: s.insert(pos + std::uniform_int_distribution<std::size_t>(0, 1)(rng), 1, static_cast<char>(letter(rng))); break;
      default: {
        const bool word_start = pos == 0 || s[pos - 1] == ' ';
        const bool word_end = pos + 1 == s.size() || s[pos + 1] == ' ';
        if (word_start && word_end) continue;  // would delete a whole word
        s.erase(pos, 1);
        break;
      }
    }
    if (s != original) return s;
  }
  return original + "a";
}

std::string corrupt_name(std::string_view name, const std::vector<std::string>& inventory, double p_name_corrupt,
                         Rng& rng, CorruptionMode mode) {
  if (inventory.size() < 2) throw std::invalid_argument("inventory needs at least two names");
  const std::string original = normalize(name);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  bool replace = false;
  bool edit = false;
  if (mode == CorruptionMode::kForced) {
    replace = u01(rng) < 0.5;
    edit = !replace;
  } else {
    replace = u01(rng) < p_name_corrupt;
    edit = !replace && u01(rng) < 0.5;
  }
  if (replace) {
    const PhonemeSeq target = phrase_phonemes(original);
    std::vector<double> weights;
    std::vector<const std::string*> candidates;
    for (const auto& other : inventory) {
      if (other == original) continue;
      weights.push_back(std::exp(-static_cast<double>(phoneme_edit_distance(target, phrase_phonemes(other)))));
      candidates.push_back(&other);
    }
    std::discrete_distribution<std::size_t> choose(weights.begin(), weights.end());
    return *candidates[choose(rng)];
  }
  if (edit) return random_char_edit(original, rng);
  return original;
}

Matrix<float> phoneme_codebook(const SimConfig& cfg) {
  Rng rng(mix_seed(cfg.seed, 5));
  std::normal_distribution<double> n01(0.0, 1.0);
  Matrix<float> cb(kNumPhonemes, cfg.d_acoustic_in);
  for (Eigen::Index i = 0; i < cb.size(); ++i) cb.data()[i] = static_cast<float>(quantize(n01(rng)));
  return cb;
}

FrameSynthesis synth_frames(std::string_view reference, const SimConfig& cfg, const Matrix<float>& codebook,
                            Rng& rng) {
  if (codebook.rows() != kNumPhonemes || codebook.cols() != cfg.d_acoustic_in) {
    throw std::invalid_argument("codebook shape mismatch");
  }
  std::vector<PhonemeSeq> per_word;
  int total = 0;
  for (const auto& w : split_words(reference)) {
    PhonemeSeq p = pseudo_phonemes(w);
    if (p.empty()) p.push_back(kSilencePhoneme);
    total += static_cast<int>(p.size()) * cfg.frames_per_phoneme;
    per_word.push_back(std::move(p));
  }
  FrameSynthesis out;
  out.frames.resize(total, cfg.d_acoustic_in);
  std::normal_distribution<double> noise(0.0, 1.0);
  int row = 0;
  for (const auto& phones : per_word) {
    const int begin = row;
    for (int ph : phones) {
      for (int k = 0; k < cfg.frames_per_phoneme; ++k, ++row) {
        for (int c = 0; c < cfg.d_acoustic_in; ++c) {
          const double base = codebook(ph, c);
          const double v = cfg.frame_noise_sigma > 0.0 ? base + cfg.frame_noise_sigma * noise(rng) : base;
          out.frames(row, c) = static_cast<float>(quantize(v));
        }
      }
    }
    out.word_spans.push_back({begin, row});
  }
  return out;
}

std::vector<Range> jitter_alignment(const std::vector<Range>& exact_spans, const std::vector<std::string>& ref_words,
                                    const std::vector<std::string>& hyp_words, int n_frames, int max_jitter,
                                    Rng& rng) {
  const int n_hyp = static_cast<int>(hyp_words.size());
  std::vector<Range> spans(static_cast<std::size_t>(n_hyp));
  std::vector<bool> assigned(static_cast<std::size_t>(n_hyp), false);
  if (n_hyp == 0 || n_frames <= 0) return spans;
  const WordAlignment alignment = word_align(ref_words, hyp_words);
  std::uniform_int_distribution<int> shift(-max_jitter, max_jitter);
  for (const auto& p : alignment.pairs) {
    if (!p.is_match_or_sub()) continue;
    Range r = exact_spans[static_cast<std::size_t>(p.ref)];
    if (max_jitter > 0) {
      r.begin += shift(rng);
      r.end += shift(rng);
    }
    spans[static_cast<std::size_t>(p.hyp)] = r;
    assigned[static_cast<std::size_t>(p.hyp)] = true;
  }
  // Insertions take a one-frame span at a neighbor's midpoint.
  for (int w = 0; w < n_hyp; ++w) {
    if (assigned[static_cast<std::size_t>(w)]) continue;
    int neighbor = -1;
    for (int v = w - 1; v >= 0 && neighbor < 0; --v) {
      if (assigned[static_cast<std::size_t>(v)]) neighbor = v;
    }
    for (int v = w + 1; v < n_hyp && neighbor < 0; ++v) {
      if (assigned[static_cast<std::size_t>(v)]) neighbor = v;
    }
    int mid = n_frames / 2;
    if (neighbor >= 0) {
      const Range& r = spans[static_cast<std::size_t>(neighbor)];
      mid = (r.begin + r.end) / 2;
    }
    spans[static_cast<std::size_t>(w)] = {mid, mid + 1};
  }
  int prev_end = 0;
  for (Range& r : spans) {
    r.begin = std::clamp(r.begin, 0, n_frames - 1);
    r.end = std::clamp(r.end, 1, n_frames);
    r.begin = std::min(std::max(r.begin, prev_end), n_frames - 1);
    r.end = std::max(r.end, r.begin + 1);
    prev_end = r.end;
  }
  return spans;
}

RefHypPairs build_refhyp_pairs(const std::vector<std::string>& inventory, Rng& rng, int attempts) {
  RefHypPairs pairs;
  for (const auto& name : inventory) {
    std::vector<std::string>& variants = pairs[name];
    for (int k = 0; k < attempts; ++k) {
      std::string v = corrupt_name(name, inventory, 1.0, rng, CorruptionMode::kForced);
      if (v != name && std::find(variants.begin(), variants.end(), v) == variants.end()) {
        variants.push_back(std::move(v));
      }
    }
  }
  return pairs;
}

std::string Utterance::check() const {
  const std::vector<std::string> ref_words = split_words(reference);
  const std::vector<std::string> hyp_words = split_words(hypothesis);
  if (name_word_span.begin < 0 || name_word_span.end > static_cast<int>(ref_words.size()) ||
      name_word_span.empty()) {
    return "name_word_span outside reference";
  }
  if (join_words(ref_words, name_word_span.begin, name_word_span.end) != normalize(name)) {
    return "name_word_span does not cover the name";
  }
  const int n_frames = static_cast<int>(frames.rows());
  if (!word_frame_spans.empty() && word_frame_spans.size() != hyp_words.size()) {
    return "word_frame_spans must have one span per hypothesis word";
  }
  if (!exact_spans.empty() && exact_spans.size() != ref_words.size()) {
    return "exact_spans must have one span per reference word";
  }
  if (auto e = check_spans(word_frame_spans, n_frames, "word_frame"); !e.empty()) return e;
  if (auto e = check_spans(exact_spans, n_frames, "exact"); !e.empty()) return e;
  return {};
}

nlohmann::json Utterance::to_json() const {
  nlohmann::json fr = nlohmann::json::array();
  for (Eigen::Index t = 0; t < frames.rows(); ++t) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < frames.cols(); ++c) row.push_back(quantize(static_cast<double>(frames(t, c))));
    fr.push_back(std::move(row));
  }
  return {{"id", id},
          {"reference", reference},
          {"hypothesis", hypothesis},
          {"name", name},
          {"name_word_span", {name_word_span.begin, name_word_span.end}},
          {"frames", std::move(fr)},
          {"word_frame_spans", ranges_to_json(word_frame_spans)},
          {"exact_spans", ranges_to_json(exact_spans)}};
}

Utterance Utterance::from_json(const nlohmann::json& j) {
  static const std::set<std::string> known = {"id",     "reference",        "hypothesis",  "name",
                                              "name_word_span", "frames", "word_frame_spans", "exact_spans"};
  if (!j.is_object()) throw std::invalid_argument("utterance must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key)) throw std::invalid_argument("unknown utterance key: " + key);
  }
  Utterance u;
  u.id = j.at("id").get<std::string>();
  u.reference = j.at("reference").get<std::string>();
  u.hypothesis = j.at("hypothesis").get<std::string>();
  u.name = j.at("name").get<std::string>();
  u.name_word_span = {j.at("name_word_span").at(0).get<int>(), j.at("name_word_span").at(1).get<int>()};
  if (j.contains("frames")) {
    const auto& fr = j.at("frames");
    const auto rows = static_cast<Eigen::Index>(fr.size());
    const auto cols = rows > 0 ? static_cast<Eigen::Index>(fr.at(0).size()) : 0;
    u.frames.resize(rows, cols);
    for (Eigen::Index t = 0; t < rows; ++t) {
      const auto& row = fr.at(static_cast<std::size_t>(t));
      if (static_cast<Eigen::Index>(row.size()) != cols) throw std::invalid_argument("ragged frames");
      for (Eigen::Index c = 0; c < cols; ++c) u.frames(t, c) = static_cast<float>(row.at(static_cast<std::size_t>(c)).get<double>());
    }
  }
  if (j.contains("word_frame_spans")) u.word_frame_spans = ranges_from_json(j.at("word_frame_spans"));
  if (j.contains("exact_spans")) u.exact_spans = ranges_from_json(j.at("exact_spans"));
  if (auto e = u.check(); !e.empty()) throw std::invalid_argument(e);
  return u;
}

const std::vector<std::string>& carrier_templates() {
  static const std::vector<std::string> v = {
      "call {name} at {time}",
      "send a message to {name}",
      "set up a meeting with {name} {day}",
      "remind {name} about the budget review",
      "share the slides with {name}",
      "ask {name} to join the call",
      "{name} will present the roadmap {day}",
      "schedule lunch with {name} {day}",
      "forward the notes to {name}",
      "is {name} available at {time}",
      "text {name} that i am running late",
      "thanks {name} for the update",
  };
  return v;
}

BiasList Corpus::phrase_pool() const {
  std::vector<std::string> all = names;
  all.insert(all.end(), distractors.begin(), distractors.end());
  return BiasList(std::move(all));
}

std::vector<std::string> Corpus::eval_distractors() const {
  std::vector<std::string> out = distractors;
  out.insert(out.end(), names.begin(), names.end());
  return out;
}

std::vector<std::string> Corpus::test_names() const {
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  for (const auto& u : test) {
    if (seen.insert(u.name).second) out.push_back(u.name);
  }
  return out;
}

Corpus gen_corpus(const SimConfig& cfg) {
  cfg.validate();
  Corpus corpus;
  corpus.names = build_name_inventory(cfg);
  corpus.distractors = build_distractor_pool(corpus.names, cfg);
  {
    Rng rng(mix_seed(cfg.seed, 6));
    corpus.pairs = build_refhyp_pairs(corpus.names, rng);
  }
  const Matrix<float> codebook = phoneme_codebook(cfg);
  auto generate = [&](const char* split, std::uint64_t stream, int count, std::vector<Utterance>& out) {
    out.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
      Rng rng(mix_seed(mix_seed(cfg.seed, stream), static_cast<std::uint64_t>(i)));
      const std::string& name = pick(corpus.names, rng);
      char id[32];
      std::snprintf(id, sizeof(id), "%s-%06d", split, i);
      out.push_back(make_utterance(id, name, corpus, cfg, codebook, rng));
    }
  };
  generate("train", 1, cfg.n_train, corpus.train);
  generate("test", 2, cfg.n_test, corpus.test);
  return corpus;
}

namespace {

struct EvalListParts {
  std::vector<std::string> covered_order;
  std::vector<std::string> distractor_order;
};

EvalListParts eval_list_parts(const std::vector<std::string>& test_names, const std::vector<std::string>& distractors,
                              std::uint64_t seed) {
  EvalListParts parts;
  parts.covered_order = dedupe(test_names);
  Rng rng(mix_seed(seed, 7));
  std::shuffle(parts.covered_order.begin(), parts.covered_order.end(), rng);
  const std::unordered_set<std::string> gt(parts.covered_order.begin(), parts.covered_order.end());
  for (const auto& d : dedupe(distractors)) {
    if (!gt.count(normalize(d))) parts.distractor_order.push_back(normalize(d));
  }
  std::shuffle(parts.distractor_order.begin(), parts.distractor_order.end(), rng);
  return parts;
}

BiasList assemble(std::vector<std::string> phrases, std::uint64_t seed, int salt) {
  Rng rng(mix_seed(seed, 100 + static_cast<std::uint64_t>(salt)));
  std::shuffle(phrases.begin(), phrases.end(), rng);
  return BiasList(std::move(phrases));
}

}  // namespace

BiasList build_eval_biaslist(const std::vector<std::string>& test_names, int coverage_percent, int list_size,
                             const std::vector<std::string>& distractors, std::uint64_t seed) {
  if (std::find(std::begin(kCoverageLevels), std::end(kCoverageLevels), coverage_percent) ==
      std::end(kCoverageLevels)) {
    throw std::invalid_argument("coverage must be one of 25, 50, 75, 100");
  }
  const EvalListParts parts = eval_list_parts(test_names, distractors, seed);
  const auto n_cov = static_cast<std::size_t>(coverage_percent) * parts.covered_order.size() / 100;
  if (static_cast<std::size_t>(list_size) < n_cov) throw std::invalid_argument("list_size smaller than covered names");
  std::vector<std::string> phrases(parts.covered_order.begin(),
                                   parts.covered_order.begin() + static_cast<std::ptrdiff_t>(n_cov));
  for (std::size_t i = 0; i < parts.distractor_order.size() && phrases.size() < static_cast<std::size_t>(list_size);
       ++i) {
    phrases.push_back(parts.distractor_order[i]);
  }
  return assemble(std::move(phrases), seed, coverage_percent);
}

std::map<int, BiasList> build_eval_biaslists(const std::vector<std::string>& test_names, int list_size,
                                             const std::vector<std::string>& distractors, std::uint64_t seed) {
  std::map<int, BiasList> out;
  for (int c : kCoverageLevels) out.emplace(c, build_eval_biaslist(test_names, c, list_size, distractors, seed));
  return out;
}

BiasList build_anti_context_biaslist(const std::vector<std::string>& test_names, int list_size,
                                     const std::vector<std::string>& distractors, std::uint64_t seed) {
  const EvalListParts parts = eval_list_parts(test_names, distractors, seed);
  std::vector<std::string> phrases;
  for (std::size_t i = 0; i < parts.distractor_order.size() && phrases.size() < static_cast<std::size_t>(list_size);
       ++i) {
    phrases.push_back(parts.distractor_order[i]);
  }
  return assemble(std::move(phrases), seed, 0);
}

std::string utterance_line(const Utterance& u) { return u.to_json().dump(); }

void write_corpus(const std::filesystem::path& path, const std::vector<Utterance>& utterances) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write corpus: " + path.string());
  for (const auto& u : utterances) out << utterance_line(u) << '\n';
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::vector<Utterance> read_corpus(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open corpus: " + path.string());
  std::vector<Utterance> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      out.push_back(Utterance::from_json(nlohmann::json::parse(line)));
    } catch (const std::exception& e) {
      throw CorpusParseError(line_no, e.what());
    }
  }
  return out;
}

}  // namespace ctxspell
