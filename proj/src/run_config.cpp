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

#include "ctxspell/run_config.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>

namespace ctxspell {

void EvalOptions::validate() const {
  if (list_size < 1) throw std::invalid_argument("eval.list_size must be >= 1");
  if (!(r >= 0.0 && r <= 1.0)) throw std::invalid_argument("eval.r must be in [0, 1]");
  if (coverages.empty()) throw std::invalid_argument("eval.coverages must not be empty");
  for (int c : coverages) {
    if (std::find(std::begin(kCoverageLevels), std::end(kCoverageLevels), c) == std::end(kCoverageLevels)) {
      throw std::invalid_argument("eval.coverages entries must be 25, 50, 75 or 100");
    }
  }
  if (bench_list_size < 1) throw std::invalid_argument("eval.bench_list_size must be >= 1");
  if (bench_utts < 1) throw std::invalid_argument("eval.bench_utts must be >= 1");
}

nlohmann::json EvalOptions::to_json() const {
  return {{"list_size", list_size},       {"k", k},
          {"r", r},                       {"coverages", coverages},
          {"cache_capacity", cache_capacity}, {"bench_list_size", bench_list_size},
          {"bench_utts", bench_utts}};
}

EvalOptions EvalOptions::from_json(const nlohmann::json& j) {
  EvalOptions e;
  if (!j.is_object()) throw std::invalid_argument("eval config must be an object");
  const nlohmann::json defaults = e.to_json();
  for (const auto& [key, _] : j.items()) {
    if (!defaults.contains(key)) throw std::invalid_argument("unknown eval config key: " + key);
  }
  auto get = [&j](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  get("list_size", e.list_size);
  get("k", e.k);
  get("r", e.r);
  get("coverages", e.coverages);
  get("cache_capacity", e.cache_capacity);
  get("bench_list_size", e.bench_list_size);
  get("bench_utts", e.bench_utts);
  e.validate();
  return e;
}

void RunConfig::validate() const {
  sim.validate();
  augment.validate();
  model.validate();
  train.validate();
  eval.validate();
  if (sim.d_acoustic_in != model.d_acoustic_in) {
    throw std::invalid_argument("sim.d_acoustic_in must equal model.d_acoustic_in");
  }
}

nlohmann::json RunConfig::to_json() const {
  return {{"seed", seed},
          {"sim", sim.to_json()},
          {"augment", augment.to_json()},
          {"model", model.to_json()},
          {"train", train.to_json()},
          {"eval", eval.to_json()}};
}

RunConfig RunConfig::from_json(const nlohmann::json& j) {
  static const char* kSections[] = {"seed", "sim", "augment", "model", "train", "eval"};
  if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (std::find_if(std::begin(kSections), std::end(kSections), [&](const char* s) { return key == s; }) ==
        std::end(kSections)) {
      throw std::invalid_argument("unknown config key: " + key);
    }
  }
  RunConfig c;
  try {
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    nlohmann::json sim = j.value("sim", nlohmann::json::object());
    nlohmann::json train = j.value("train", nlohmann::json::object());
    if (!sim.is_object() || !train.is_object()) throw std::invalid_argument("sections must be objects");
    if (!sim.contains("seed")) sim["seed"] = c.seed;
    if (!train.contains("seed")) train["seed"] = c.seed;
    c.sim = SimConfig::from_json(sim);
    c.train = TrainConfig::from_json(train);
    if (j.contains("augment")) c.augment = AugmentConfig::from_json(j.at("augment"));
    if (j.contains("model")) c.model = ModelConfig::from_json(j.at("model"));
    if (j.contains("eval")) c.eval = EvalOptions::from_json(j.at("eval"));
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("bad config value: ") + e.what());
  }
  c.validate();
  return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config: " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("config is not valid JSON: " + std::string(e.what()));
  }
  return from_json(j);
}

}  // namespace ctxspell
