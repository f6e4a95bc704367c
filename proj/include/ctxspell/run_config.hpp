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

#ifndef CTXSPELL_RUN_CONFIG_HPP_
#define CTXSPELL_RUN_CONFIG_HPP_

// One JSON document configuring every stage of a run:
//   {"seed": 1, "sim": {...}, "augment": {...}, "model": {...},
//    "train": {...}, "eval": {...}}
// Every section is optional; unknown keys anywhere are rejected.

#include <cstdint>
#include <filesystem>
#include <vector>

#include "json.hpp"

#include "ctxspell/augment.hpp"
#include "ctxspell/model.hpp"
#include "ctxspell/simdata.hpp"
#include "ctxspell/train.hpp"

namespace ctxspell {

struct EvalOptions {
  int list_size = 500;        // phrases per evaluation bias list
  int k = 3;                  // ranker preselection size
  double r = 1.0;             // incorporation ratio at inference
  std::vector<int> coverages = {25, 50, 75, 100};
  std::size_t cache_capacity = 1000;
  int bench_list_size = 600;  // bias list reused across a latency session
  int bench_utts = 50;

  void validate() const;
  nlohmann::json to_json() const;
  static EvalOptions from_json(const nlohmann::json& j);
};

struct RunConfig {
  // Copied into sim.seed and train.seed unless those sections set their own.
  std::uint64_t seed = 1;
  SimConfig sim;
  AugmentConfig augment;
  ModelConfig model;
  TrainConfig train;
  EvalOptions eval;

  void validate() const;
  nlohmann::json to_json() const;
  // Throws std::invalid_argument on unknown keys or bad values.
  static RunConfig from_json(const nlohmann::json& j);
  // Throws std::invalid_argument when the file is missing or malformed.
  static RunConfig load(const std::filesystem::path& path);
};

}  // namespace ctxspell

#endif  // CTXSPELL_RUN_CONFIG_HPP_
