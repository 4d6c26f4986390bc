// Copyright 2026 The silg Authors.
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

// Checkpoint layout (all integers little-endian):
//   magic "SILGCKPT" | u32 version | u32 config_len | config JSON
//   u32 param_count | per param: u32 name_len, name, i32 rows, i32 cols,
//   rows*cols IEEE-754 doubles.
// Parameters are matched by name and shape on load.

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "silg/sir_model.hpp"

namespace silg::sir {

namespace {

constexpr char kMagic[8] = {'S', 'I', 'L', 'G', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += 8;
    return v;
  }
  std::string str(std::size_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) fail(ErrorCode::kParse, "checkpoint truncated");
  }
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string checkpoint_bytes(const SirModel& model) {
  std::string out(kMagic, sizeof(kMagic));
  put_u32(out, kVersion);
  const std::string cfg = model.config().to_json();
  put_u32(out, static_cast<std::uint32_t>(cfg.size()));
  out += cfg;
  const auto params = model.params().all();
  put_u32(out, static_cast<std::uint32_t>(params.size()));
  for (const nn::Param* p : params) {
    put_u32(out, static_cast<std::uint32_t>(p->name.size()));
    out += p->name;
    put_u32(out, static_cast<std::uint32_t>(p->rows));
    put_u32(out, static_cast<std::uint32_t>(p->cols));
    for (double v : p->value) put_u64(out, std::bit_cast<std::uint64_t>(v));
  }
  return out;
}

SirModel checkpoint_from_bytes(const std::string& bytes) {
  Reader in(bytes);
  if (in.str(sizeof(kMagic)) != std::string(kMagic, sizeof(kMagic))) {
    fail(ErrorCode::kParse, "not a checkpoint file (bad magic)");
  }
  const std::uint32_t version = in.u32();
  if (version != kVersion) fail(ErrorCode::kParse, "unsupported checkpoint version " + std::to_string(version));
  const std::string cfg = in.str(in.u32());
  SirModel model(ModelConfig::from_json(cfg), 0);
  const std::uint32_t count = in.u32();
  if (count != model.params().all().size()) fail(ErrorCode::kParse, "checkpoint parameter count mismatch");
  for (std::uint32_t k = 0; k < count; ++k) {
    const std::string name = in.str(in.u32());
    const int rows = static_cast<int>(in.u32());
    const int cols = static_cast<int>(in.u32());
    if (!model.params().contains(name)) fail(ErrorCode::kParse, "checkpoint has unknown parameter " + name);
    nn::Param& p = model.params().get(name);
    if (p.rows != rows || p.cols != cols) fail(ErrorCode::kParse, "checkpoint shape mismatch for " + name);
    for (double& v : p.value) v = std::bit_cast<double>(in.u64());
  }
  if (!in.done()) fail(ErrorCode::kParse, "trailing bytes in checkpoint");
  return model;
}

void save_checkpoint(const SirModel& model, const std::string& path) {
  const std::string bytes = checkpoint_bytes(model);
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) fail(ErrorCode::kIo, "cannot write checkpoint " + path);
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!f) fail(ErrorCode::kIo, "short write to checkpoint " + path);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) fail(ErrorCode::kIo, "cannot move checkpoint into " + path);
}

SirModel load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail(ErrorCode::kIo, "cannot open checkpoint " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return checkpoint_from_bytes(ss.str());
}

}  // namespace silg::sir
