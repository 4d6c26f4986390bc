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

#pragma once

#include <bit>
#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

namespace silg {

// Portable random source. The engine is std::mt19937_64, whose output is
// fixed by the standard; the bounded draws below are implemented here because
// the std distributions differ between standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform integer in [0, n). n must be positive.
  int uniform(int n);

  // Uniform integer in [lo, hi].
  int uniform_range(int lo, int hi) { return lo + uniform(hi - lo + 1); }

  // Uniform double in [0, 1).
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform_real(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Standard normal via Box-Muller; deterministic across platforms up to libm.
  double normal();

  bool bernoulli(double p) { return uniform01() < p; }

  template <typename T>
  void shuffle(std::vector<T>& values) {
    for (int i = static_cast<int>(values.size()) - 1; i > 0; --i) {
      std::swap(values[i], values[uniform(i + 1)]);
    }
  }

  template <typename T>
  const T& pick(const std::vector<T>& values) {
    return values[uniform(static_cast<int>(values.size()))];
  }

 private:
  std::mt19937_64 engine_;
};

// Derives an independent stream seed from a parent seed and a salt.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt);

// 64-bit FNV-1a over a canonical byte stream. Multi-byte values are fed in
// little-endian order so digests agree across platforms.
class StableHasher {
 public:
  StableHasher& add_byte(std::uint8_t b) {
    state_ ^= b;
    state_ *= 0x100000001b3ULL;
    return *this;
  }
  StableHasher& add_u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) add_byte(static_cast<std::uint8_t>(v >> (8 * i)));
    return *this;
  }
  StableHasher& add_i64(std::int64_t v) { return add_u64(static_cast<std::uint64_t>(v)); }
  StableHasher& add_double(double v) { return add_u64(std::bit_cast<std::uint64_t>(v)); }
  StableHasher& add_string(std::string_view s) {
    add_u64(s.size());
    for (char c : s) add_byte(static_cast<std::uint8_t>(c));
    return *this;
  }

  std::uint64_t digest() const { return state_; }

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

// Routes a stable 64-bit hash into a split: {0..6} train, {7,8} val, {9} test.
int hash_bucket(std::uint64_t hash);

}  // namespace silg
