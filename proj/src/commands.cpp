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

#include "ctxspell/commands.hpp"

#include <algorithm>
#include <cstring>
#include <map>
#include <optional>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "ctxspell/checkpoint.hpp"
#include "ctxspell/evalbench.hpp"
#include "ctxspell/run_config.hpp"
#include "ctxspell/simdata.hpp"
#include "ctxspell/train.hpp"

namespace ctxspell {

namespace {

namespace fs = std::filesystem;

void ensure_output_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw UsageError("cannot create output directory " + dir.string());
  const fs::path probe = dir / ".ctxspell_write_probe";
  {
    std::ofstream f(probe);
    if (!f) throw UsageError("output directory is not writable: " + dir.string());
  }
  fs::remove(probe, ec);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open " + path.string());
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    const std::string n = normalize(line);
    if (!n.empty()) out.push_back(n);
  }
  return out;
}

std::string lines_text(const std::vector<std::string>& lines) {
  std::string s;
  for (const auto& l : lines) s += l + "\n";
  return s;
}

std::vector<Utterance> load_corpus(const fs::path& path) {
  if (!fs::exists(path)) throw UsageError("missing corpus file " + path.string());
  try {
    return read_corpus(path);
  } catch (const CorpusParseError& e) {
    throw UsageError(path.string() + ": " + e.what());
  }
}

RefHypPairs load_pairs(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in).get<RefHypPairs>();
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(path.string() + ": " + e.what());
  }
}

BiasList load_bias_list(const fs::path& path) {
  if (!fs::exists(path)) throw UsageError("missing bias list " + path.string());
  BiasList list;
  try {
    list = BiasList::load(path);
  } catch (const std::invalid_argument& e) {
    throw UsageError(path.string() + ": " + e.what());
  }
  if (list.empty()) throw UsageError("bias list is empty: " + path.string());
  return list;
}

Model<float> load_model(const fs::path& path) {
  if (!fs::exists(path)) throw UsageError("missing checkpoint " + path.string());
  try {
    return load_checkpoint(path);
  } catch (const std::runtime_error& e) {
    throw UsageError(path.string() + ": " + e.what());
  }
}

RunConfig load_config(const std::string& path) {
  if (path.empty()) return RunConfig{};
  try {
    return RunConfig::load(path);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

std::vector<int> parse_coverages(const std::string& spec, const std::vector<int>& fallback) {
  if (spec.empty()) return fallback;
  if (spec == "all") return {std::begin(kCoverageLevels), std::end(kCoverageLevels)};
  std::vector<int> out;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stoi(item));
    } catch (const std::exception&) {
      throw UsageError("bad coverage list: " + spec);
    }
    if (std::find(std::begin(kCoverageLevels), std::end(kCoverageLevels), out.back()) == std::end(kCoverageLevels)) {
      throw UsageError("coverage must be one of 25, 50, 75, 100");
    }
  }
  return out;
}

std::string biaslist_file(int coverage) { return "biaslist_" + std::to_string(coverage) + ".txt"; }

// ---- gen-data ---------------------------------------------------------------

struct GenArgs {
  std::string config;
  std::string out;
};

void cmd_gen_data(const GenArgs& a, std::ostream& out) {
  const RunConfig cfg = load_config(a.config);
  const fs::path dir(a.out);
  ensure_output_dir(dir);
  const Corpus corpus = gen_corpus(cfg.sim);
  write_corpus(dir / "train.jsonl", corpus.train);
  write_corpus(dir / "test.jsonl", corpus.test);
  write_text(dir / "names.txt", lines_text(corpus.names));
  write_text(dir / "distractors.txt", lines_text(corpus.distractors));
  write_text(dir / "refhyp.json", nlohmann::json(corpus.pairs).dump(1) + "\n");

  const std::vector<std::string> eval_distractors = corpus.eval_distractors();
  const auto test_names = corpus.test_names();
  for (int c : kCoverageLevels) {
    build_eval_biaslist(test_names, c, cfg.eval.list_size, eval_distractors, cfg.sim.seed).save(dir / biaslist_file(c));
  }
  build_anti_context_biaslist(test_names, cfg.eval.list_size, eval_distractors, cfg.sim.seed)
      .save(dir / "biaslist_anti.txt");
  write_text(dir / "config.json", cfg.to_json().dump(2) + "\n");
  out << "wrote " << corpus.train.size() << " train and " << corpus.test.size() << " test utterances to "
      << dir.string() << "\n";
}

// ---- train ------------------------------------------------------------------

struct TrainArgs {
  std::string config;
  std::string data;
  std::string variant = "text-only";
  std::string base;
  std::string teacher;
  bool partial = false;
  std::string out;
  int steps = -1;
};

void check_acoustic_data(const std::vector<Utterance>& utts) {
  for (const auto& u : utts) {
    if (u.frames.rows() == 0 || u.word_frame_spans.size() != split_words(u.hypothesis).size()) {
      throw UsageError("utterance " + u.id + " has no frames or alignment; acoustic variants need both");
    }
  }
}

void cmd_train(const TrainArgs& a, std::ostream& out, std::ostream& err) {
  RunConfig cfg = load_config(a.config);
  if (a.steps >= 0) cfg.train.steps = a.steps;
  Variant variant;
  try {
    variant = parse_variant(a.variant);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  if (a.partial && a.base.empty()) throw UsageError("--partial requires --base");
  if (a.partial && variant == Variant::kTextOnly) throw UsageError("--partial needs an acoustic --variant");

  const fs::path data(a.data);
  const fs::path dir(a.out);
  ensure_output_dir(dir);
  const std::vector<Utterance> train = load_corpus(data / "train.jsonl");
  if (variant != Variant::kTextOnly) check_acoustic_data(train);
  std::vector<std::string> pool_phrases = read_lines(data / "names.txt");
  const auto distractors = read_lines(data / "distractors.txt");
  pool_phrases.insert(pool_phrases.end(), distractors.begin(), distractors.end());
  const BiasList pool(std::move(pool_phrases));
  const RefHypPairs pairs = load_pairs(data / "refhyp.json");

  std::optional<Model<float>> base;
  if (!a.base.empty()) {
    base = load_model(a.base);
    if (base->config().variant != Variant::kTextOnly && a.partial) {
      throw UsageError("base checkpoint must be text-only for partial adaptation");
    }
    if (base->config().variant != Variant::kTextOnly && base->config().variant != variant) {
      throw UsageError("base checkpoint variant " + to_string(base->config().variant) + " does not match --variant " +
                       a.variant);
    }
  }
  ModelConfig model_config = base ? base->config() : cfg.model;
  model_config.variant = variant;
  const ExampleSource source =
      augmented_source(train, pool, pairs, cfg.augment, model_config.s_kmax, cfg.train.seed, model_config.chunk_size);

  FitResult result;
  std::optional<Model<float>> model;
  if (a.partial) {
    model = partial_adapt(*base, variant, source, cfg.train, &result);
    for (int i = 0; i < base->params().size(); ++i) {
      const std::string& name = base->params().names()[static_cast<std::size_t>(i)];
      const Matrix<float>& before = base->params()[i];
      const Matrix<float>& after = model->params().at(name);
      if (std::memcmp(before.data(), after.data(), sizeof(float) * static_cast<std::size_t>(before.size())) != 0) {
        throw std::runtime_error("frozen tensor " + name + " changed during partial adaptation");
      }
    }
  } else if (!a.teacher.empty()) {
    const Model<float> teacher = load_model(a.teacher);
    if (!cfg.train.distill) cfg.train.distill = DistillConfig{};
    try {
      model = distill(teacher, model_config, source, cfg.train, &result);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  } else {
    if (base) {
      model = base->config().variant == variant ? *base : extend_with_acoustics(*base, variant, cfg.train.seed);
    } else {
      model.emplace(model_config, cfg.train.seed);
    }
    result = fit(*model, source, cfg.train);
  }

  save_checkpoint(*model, dir / "model.ckpt");
  write_text(dir / "train_log.json", log_to_json(result.log).dump(1) + "\n");
  nlohmann::json echo = cfg.to_json();
  echo["model"] = model->config().to_json();
  echo["cli"] = {{"variant", a.variant}, {"base", a.base}, {"teacher", a.teacher}, {"partial", a.partial}};
  write_text(dir / "config.json", echo.dump(2) + "\n");
  const double final_loss = result.log.empty() ? 0.0 : result.log.back().loss;
  err << "trained " << to_string(variant) << " for " << cfg.train.steps << " steps, final loss " << final_loss
      << "\n";
  out << (dir / "model.ckpt").string() << "\n";
}

// ---- correct ----------------------------------------------------------------

struct CorrectArgs {
  std::string model;
  std::string bias_list;
  std::string hyp;
  std::string input;
  int k = 3;
  double r = 1.0;
};

void cmd_correct(const CorrectArgs& a, std::ostream& out) {
  if (a.hyp.empty() == a.input.empty()) throw UsageError("give exactly one of --hyp or --input");
  if (!(a.r >= 0.0 && a.r <= 1.0)) throw UsageError("--r must be in [0, 1]");
  const Model<float> model = load_model(a.model);
  const BiasList list = load_bias_list(a.bias_list);
  CorrectOptions opt;
  opt.k = a.k;
  opt.r = a.r;
  if (!a.hyp.empty()) {
    if (model.config().uses_acoustics()) throw UsageError("acoustic models need --input with frames");
    InferenceInput input;
    input.hypothesis = a.hyp;
    out << correct(model, input, list, opt) << "\n";
    return;
  }
  const std::vector<Utterance> utts = load_corpus(a.input);
  if (model.config().uses_acoustics()) check_acoustic_data(utts);
  for (const auto& u : utts) out << correct(model, u, list, opt) << "\n";
}

// ---- eval -------------------------------------------------------------------

struct EvalArgs {
  std::string config;
  std::vector<std::string> models;
  std::string data;
  std::string coverage;
  int k = -1;
  double r = -1.0;
  std::string out;
};

void cmd_eval(const EvalArgs& a, std::ostream& out) {
  const RunConfig cfg = load_config(a.config);
  const int k = a.k >= 0 ? a.k : cfg.eval.k;
  const double r = a.r >= 0.0 ? a.r : cfg.eval.r;
  if (r > 1.0) throw UsageError("--r must be in [0, 1]");
  const fs::path data(a.data);
  const std::vector<Utterance> test = load_corpus(data / "test.jsonl");
  std::map<int, BiasList> lists;
  for (int c : parse_coverages(a.coverage, cfg.eval.coverages)) lists.emplace(c, load_bias_list(data / biaslist_file(c)));
  std::optional<BiasList> anti;
  if (fs::exists(data / "biaslist_anti.txt")) anti = load_bias_list(data / "biaslist_anti.txt");

  std::vector<std::pair<std::string, Model<float>>> models;
  for (const auto& spec : a.models) {
    const auto eq = spec.find('=');
    std::string name = eq == std::string::npos ? fs::path(spec).parent_path().filename().string() : spec.substr(0, eq);
    const std::string path = eq == std::string::npos ? spec : spec.substr(eq + 1);
    if (name.empty()) name = "model" + std::to_string(models.size());
    models.emplace_back(name, load_model(path));
  }
  std::vector<SystemUnderTest> systems;
  for (const auto& [name, m] : models) {
    if (m.config().uses_acoustics()) check_acoustic_data(test);
    systems.push_back({name, &m});
  }
  const EvalReport report = coverage_sweep(systems, test, lists, k, r, anti ? &*anti : nullptr);
  out << report.render_table();
  if (!a.out.empty()) {
    const fs::path path(a.out);
    if (path.has_parent_path()) ensure_output_dir(path.parent_path());
    nlohmann::json j = report.to_json();
    j["config"] = {{"k", k}, {"r", r}, {"eval", cfg.eval.to_json()}};
    write_text(path, j.dump(2) + "\n");
  }
}

// ---- bench ------------------------------------------------------------------

struct BenchArgs {
  std::string config;
  std::string model;
  std::string data;
  std::string bias_list;
  long long cache = -1;
  int k = 0;
  double r = -1.0;
  std::string out;
};

void cmd_bench(const BenchArgs& a, std::ostream& out) {
  const RunConfig cfg = load_config(a.config);
  const fs::path data(a.data);
  const Model<float> model = load_model(a.model);
  const std::vector<Utterance> test = load_corpus(data / "test.jsonl");
  if (model.config().uses_acoustics()) check_acoustic_data(test);
  BiasList list;
  if (!a.bias_list.empty()) {
    list = load_bias_list(a.bias_list);
  } else {
    std::vector<std::string> phrases = read_lines(data / "names.txt");
    const auto d = read_lines(data / "distractors.txt");
    phrases.insert(phrases.end(), d.begin(), d.end());
    phrases.resize(std::min(phrases.size(), static_cast<std::size_t>(cfg.eval.bench_list_size)));
    list = BiasList(std::move(phrases));
  }
  BenchOptions opt;
  opt.k = a.k;
  opt.r = a.r >= 0.0 ? a.r : cfg.eval.r;
  if (opt.r > 1.0) throw UsageError("--r must be in [0, 1]");
  opt.cache_capacity = a.cache >= 0 ? static_cast<std::size_t>(a.cache) : cfg.eval.cache_capacity;
  opt.max_utts = cfg.eval.bench_utts;
  const LatencyBreakdown lb = bench_latency(model, test, list, opt);
  out << lb.render_table();
  if (!a.out.empty()) {
    const fs::path path(a.out);
    if (path.has_parent_path()) ensure_output_dir(path.parent_path());
    write_text(path, lb.to_json().dump(2) + "\n");
  }
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Contextual spelling correction for ASR hypotheses", "ctxspell"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "Generate the synthetic corpus, pairs, and bias lists");
  gen_cmd->add_option("--config", gen.config, "Run config JSON")->required();
  gen_cmd->add_option("--out", gen.out, "Output directory")->required();

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "Train a model and write a checkpoint");
  train_cmd->add_option("--config", tr.config, "Run config JSON");
  train_cmd->add_option("--data", tr.data, "Directory written by gen-data")->required();
  train_cmd->add_option("--variant", tr.variant, "text-only, ea, or da");
  train_cmd->add_option("--base", tr.base, "Text-only checkpoint to start from");
  train_cmd->add_option("--teacher", tr.teacher, "Teacher checkpoint for distillation");
  train_cmd->add_flag("--partial", tr.partial, "Update only the acoustic components");
  train_cmd->add_option("--out", tr.out, "Output directory")->required();
  train_cmd->add_option("--steps", tr.steps, "Override train.steps");

  CorrectArgs co;
  auto* correct_cmd = app.add_subcommand("correct", "Correct hypotheses against a bias list");
  correct_cmd->add_option("--model", co.model, "Checkpoint")->required();
  correct_cmd->add_option("--bias-list", co.bias_list, "Bias list, one phrase per line")->required();
  correct_cmd->add_option("--hyp", co.hyp, "Hypothesis text");
  correct_cmd->add_option("--input", co.input, "Utterances as JSON lines");
  correct_cmd->add_option("--k", co.k, "Phrases kept by the ranker (<= 0 keeps all)");
  correct_cmd->add_option("--r", co.r, "Acoustic incorporation ratio");

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "Name recall and WER across bias-list coverage levels");
  eval_cmd->add_option("--config", ev.config, "Run config JSON");
  eval_cmd->add_option("--model", ev.models, "name=checkpoint (repeatable)");
  eval_cmd->add_option("--data", ev.data, "Directory written by gen-data")->required();
  eval_cmd->add_option("--coverage", ev.coverage, "all or a comma list of 25,50,75,100");
  eval_cmd->add_option("--k", ev.k, "Override eval.k");
  eval_cmd->add_option("--r", ev.r, "Override eval.r");
  eval_cmd->add_option("--out", ev.out, "Report JSON path");

  BenchArgs be;
  auto* bench_cmd = app.add_subcommand("bench", "Per-component latency with and without the cache");
  bench_cmd->add_option("--config", be.config, "Run config JSON");
  bench_cmd->add_option("--model", be.model, "Checkpoint")->required();
  bench_cmd->add_option("--data", be.data, "Directory written by gen-data")->required();
  bench_cmd->add_option("--bias-list", be.bias_list, "Session bias list (default: first eval.bench_list_size phrases)");
  bench_cmd->add_option("--cache", be.cache, "Cache capacity");
  bench_cmd->add_option("--k", be.k, "Phrases kept by the ranker (<= 0 keeps all)");
  bench_cmd->add_option("--r", be.r, "Override eval.r");
  bench_cmd->add_option("--out", be.out, "Breakdown JSON path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (*gen_cmd) cmd_gen_data(gen, out);
    if (*train_cmd) cmd_train(tr, out, err);
    if (*correct_cmd) cmd_correct(co, out);
    if (*eval_cmd) cmd_eval(ev, out);
    if (*bench_cmd) cmd_bench(be, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "failed: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace ctxspell
