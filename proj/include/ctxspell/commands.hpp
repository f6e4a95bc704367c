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

#ifndef CTXSPELL_COMMANDS_HPP_
#define CTXSPELL_COMMANDS_HPP_

// The `ctxspell` command line: gen-data, train, correct, eval, bench.
// Exit codes: 0 success, 2 usage or configuration error, 3 runtime failure.

#include <ostream>
#include <stdexcept>
#include <string>

namespace ctxspell {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitRuntime = 3;

// Bad flags, configs, or inputs; maps to exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Results go to `out`, diagnostics to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ctxspell

#endif  // CTXSPELL_COMMANDS_HPP_
