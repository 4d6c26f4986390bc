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

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "silg/error.hpp"
#include "silg/random.hpp"

namespace silg {

using TokenId = std::int32_t;

inline constexpr TokenId kUnknownId = 0;
inline constexpr TokenId kPadId = 1;

// ---------------------------------------------------------------------------
// Vocabulary and tokenizer

class Vocabulary {
 public:
  Vocabulary();

  // Ids 0 and 1 are reserved; the remaining words are deduplicated and
  // assigned ids in lexicographic order.
  static Vocabulary from_words(std::vector<std::string> words);

  // Builds the vocabulary from template sentences plus extra symbol words
  // that never pass through the tokenizer (grid-only symbols).
  static Vocabulary from_lexicon(std::span<const std::string> sentences,
                                 std::span<const std::string> symbols = {});

  TokenId id(std::string_view word) const;
  const std::string& word(TokenId id) const;
  bool contains(std::string_view word) const { return id(word) != kUnknownId; }
  int size() const { return static_cast<int>(words_.size()); }
  const std::vector<std::string>& words() const { return words_; }

 private:
  std::vector<std::string> words_;
  std::map<std::string, TokenId, std::less<>> index_;
};

// Lowercases and splits on ASCII whitespace and punctuation. Locale-free.
std::vector<std::string> split_words(std::string_view text);

std::vector<TokenId> tokenize(std::string_view text, const Vocabulary& vocab);

// ---------------------------------------------------------------------------
// Observation data model

struct Cell {
  int row = 0;
  int col = 0;
  friend bool operator==(const Cell&, const Cell&) = default;
  friend auto operator<=>(const Cell&, const Cell&) = default;
};

struct SymbolGrid {
  int height = 0;
  int width = 0;
  int words_per_cell = 1;
  std::vector<TokenId> cells;  // height * width * words_per_cell, row-major

  SymbolGrid() = default;
  SymbolGrid(int h, int w, int k) : height(h), width(w), words_per_cell(k), cells(static_cast<std::size_t>(h) * w * k, kPadId) {}

  TokenId& at(int r, int c, int slot = 0) {
    return cells[(static_cast<std::size_t>(r) * width + c) * words_per_cell + slot];
  }
  TokenId at(int r, int c, int slot = 0) const {
    return cells[(static_cast<std::size_t>(r) * width + c) * words_per_cell + slot];
  }
  std::span<const TokenId> cell(int r, int c) const {
    return {cells.data() + (static_cast<std::size_t>(r) * width + c) * words_per_cell,
            static_cast<std::size_t>(words_per_cell)};
  }
  // Writes up to k ids into the cell, padding the rest.
  void set_cell(int r, int c, std::span<const TokenId> ids);
  void clear() { std::fill(cells.begin(), cells.end(), kPadId); }
};

struct TextBundle {
  std::vector<TokenId> joint;
  std::vector<std::string> field_names;
  std::vector<std::vector<TokenId>> fields;  // each padded to max_len
  int max_len = 0;
  // Raw strings, kept for rendering and the session protocol.
  std::vector<std::string> field_text;
  std::string joint_text;

  int num_fields() const { return static_cast<int>(fields.size()); }
  // Field tokens with trailing pad removed.
  std::vector<TokenId> unpadded(int i) const;
};

// Assembles a bundle from named field strings. The joint text is the
// concatenation of fields in `joint_order` (defaults to field order).
TextBundle make_text_bundle(const Vocabulary& vocab,
                            const std::vector<std::pair<std::string, std::string>>& named_fields,
                            const std::vector<int>& joint_order = {});

struct RelPosition {
  int height = 0;
  int width = 0;
  std::vector<double> offsets;  // height * width * 2

  double at(int r, int c, int channel) const {
    return offsets[(static_cast<std::size_t>(r) * width + c) * 2 + channel];
  }
};

RelPosition relative_position(int height, int width, std::optional<Cell> agent);

enum class ActionKind { kFixed, kTextChoices, kNavCoordinates };

const char* action_kind_name(ActionKind kind);

struct ActionSpaceDescriptor {
  ActionKind kind = ActionKind::kFixed;
  int fixed_count = 0;
  std::vector<std::vector<TokenId>> choices;
  std::vector<std::string> choice_text;
  std::vector<int> columns;
  bool stop_option = false;

  static ActionSpaceDescriptor fixed(int count);
  int arity() const;
  void validate(int grid_width) const;
};

struct Observation {
  SymbolGrid grid;
  TextBundle text;
  RelPosition relpos;
  ActionSpaceDescriptor actions;
  std::map<TokenId, std::string> legend;
  std::optional<Cell> agent;

  // Checks every type invariant; throws kContractViolation on failure.
  void validate(int vocab_size) const;
};

// 64-bit stable hash of the canonical observation encoding.
std::uint64_t observation_digest(const Observation& obs);

std::string digest_hex(std::uint64_t digest);

// Builds a legend covering every id present in the grid.
std::map<TokenId, std::string> legend_for(const SymbolGrid& grid, const Vocabulary& vocab);

struct StepInfo {
  bool win = false;
  bool limit_reached = false;
  double raw_reward = 0.0;  // environment reward before the step penalty
  std::map<std::string, double> stats;
};

struct StepResult {
  Observation observation;
  double reward = 0.0;
  bool done = false;
  StepInfo info;
};

// ---------------------------------------------------------------------------
// Splits

enum class Split { kTrain, kVal, kTest };

const char* split_name(Split split);
Split parse_split(std::string_view name);

struct SplitSpec {
  Split name = Split::kTrain;
  std::int64_t begin = 0;  // half-open [begin, end)
  std::int64_t end = 0;
};

std::vector<SplitSpec> default_seed_splits();

Split split_for_seed(std::int64_t seed, std::span<const SplitSpec> specs);

// First seed of a split's range.
std::int64_t split_base_seed(Split split);

// hash mod 10 routing used by the rule-sampling environments.
Split split_for_hash(std::uint64_t hash);

// ---------------------------------------------------------------------------
// Step-penalty / step-limit wrapper

struct WrapOptions {
  double penalty = -0.02;
  int limit = 64;
  double limit_reward = -1.0;
};

// Applies the per-step penalty to non-terminal steps and forces a loss at the
// step limit. `step_count` is the number of steps taken including this one.
StepResult wrap_step(StepResult inner, int step_count, const WrapOptions& options);

// Configuration overrides passed to environment constructors ("key=value").
using Overrides = std::map<std::string, std::string, std::less<>>;

Overrides parse_overrides(std::string_view text);
std::string format_overrides(const Overrides& overrides);

// Reads typed values from overrides and tracks which keys were consumed, so
// that unknown keys can be reported.
class OverrideReader {
 public:
  explicit OverrideReader(const Overrides& overrides) : overrides_(overrides) {}

  int get_int(std::string_view key, int fallback);
  double get_double(std::string_view key, double fallback);
  bool get_bool(std::string_view key, bool fallback);
  std::string get_string(std::string_view key, std::string fallback);
  // Throws kInvalidArgument naming the first unconsumed key.
  void finish(std::string_view env_name) const;

 private:
  const std::string* find(std::string_view key);

  const Overrides& overrides_;
  std::vector<std::string> consumed_;
};

}  // namespace silg
