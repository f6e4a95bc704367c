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

#ifndef CTXSPELL_CHECKPOINT_HPP_
#define CTXSPELL_CHECKPOINT_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "ctxspell/model.hpp"

namespace ctxspell {

// Layout:
//   8 bytes   magic "CTXSPELL"
//   u32 LE    format version
//   u64 LE    header length H
//   H bytes   JSON {"config": ModelConfig, "tensors": [{name, shape, offset}]}
//   payload   little-endian float32 tensors, row-major, manifest order;
//             offsets are byte offsets from the payload start
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::string encode_checkpoint(const Model<float>& model);
// Throws std::runtime_error on malformed input or shape mismatch.
Model<float> decode_checkpoint(std::string_view bytes);

void save_checkpoint(const Model<float>& model, const std::filesystem::path& path);
Model<float> load_checkpoint(const std::filesystem::path& path);

}  // namespace ctxspell

#endif  // CTXSPELL_CHECKPOINT_HPP_
