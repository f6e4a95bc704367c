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

#include "ctxspell/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ctxspell {

namespace {

constexpr char kMagic[8] = {'C', 'T', 'X', 'S', 'P', 'E', 'L', 'L'};

template <typename U>
void put_le(std::string& out, U value) {
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    out.push_back(static_cast<char>((value >> (8 * i)) & 0xFF));
  }
}

template <typename U>
U get_le(std::string_view in, std::size_t pos) {
  if (pos + sizeof(U) > in.size()) throw std::runtime_error("checkpoint truncated");
  U value = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    value |= static_cast<U>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  }
  return value;
}

}  // namespace

std::string encode_checkpoint(const Model<float>& model) {
  const Parameters<float>& params = model.params();
  nlohmann::json tensors = nlohmann::json::array();
  std::uint64_t offset = 0;
  for (int i = 0; i < params.size(); ++i) {
    tensors.push_back({{"name", params.names()[static_cast<std::size_t>(i)]},
                       {"shape", {params[i].rows(), params[i].cols()}},
                       {"offset", offset}});
    offset += static_cast<std::uint64_t>(params[i].size()) * 4;
  }
  const nlohmann::json header = {{"config", model.config().to_json()}, {"tensors", tensors}};
  const std::string header_text = header.dump();

  std::string out(kMagic, sizeof(kMagic));
  put_le<std::uint32_t>(out, kCheckpointVersion);
  put_le<std::uint64_t>(out, header_text.size());
  out += header_text;
  out.reserve(out.size() + offset);
  for (int i = 0; i < params.size(); ++i) {
    const Matrix<float>& m = params[i];
    for (Eigen::Index k = 0; k < m.size(); ++k) put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(m.data()[k]));
  }
  return out;
}

Model<float> decode_checkpoint(std::string_view bytes) {
  if (bytes.size() < 20 || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw std::runtime_error("not a checkpoint file");
  }
  const auto version = get_le<std::uint32_t>(bytes, 8);
  if (version != kCheckpointVersion) {
    throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
  }
  const auto header_len = get_le<std::uint64_t>(bytes, 12);
  const std::size_t payload_start = 20 + header_len;
  if (payload_start > bytes.size()) throw std::runtime_error("checkpoint header truncated");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(20, header_len));
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("bad checkpoint header: ") + e.what());
  }
  ModelConfig config;
  try {
    config = ModelConfig::from_json(header.at("config"));
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("bad checkpoint config: ") + e.what());
  }

  Parameters<float> params;
  const std::string_view payload = bytes.substr(payload_start);
  for (const auto& t : header.at("tensors")) {
    const auto rows = t.at("shape").at(0).get<Eigen::Index>();
    const auto cols = t.at("shape").at(1).get<Eigen::Index>();
    const auto offset = t.at("offset").get<std::uint64_t>();
    if (rows < 0 || cols < 0) throw std::runtime_error("negative tensor shape");
    const auto count = static_cast<std::uint64_t>(rows * cols);
    if (offset + count * 4 > payload.size()) throw std::runtime_error("tensor payload truncated");
    Matrix<float> m(rows, cols);
    for (std::uint64_t k = 0; k < count; ++k) {
      m.data()[k] = std::bit_cast<float>(get_le<std::uint32_t>(payload, offset + 4 * k));
    }
    params.add(t.at("name").get<std::string>(), std::move(m));
  }
  try {
    return Model<float>(std::move(config), std::move(params));
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(std::string("checkpoint does not match its config: ") + e.what());
  }
}

void save_checkpoint(const Model<float>& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path.string());
  const std::string bytes = encode_checkpoint(model);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

Model<float> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return decode_checkpoint(ss.str());
}

}  // namespace ctxspell
