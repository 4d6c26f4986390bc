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

#include "silg/core.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <set>

namespace silg {

// ---------------------------------------------------------------------------
// Vocabulary

Vocabulary::Vocabulary() : words_{"<unk>", "<pad>"} {}

Vocabulary Vocabulary::from_words(std::vector<std::string> words) {
  Vocabulary vocab;
  std::sort(words.begin(), words.end());
  words.erase(std::unique(words.begin(), words.end()), words.end());
  for (auto& w : words) {
    if (w.empty() || w == "<unk>" || w == "<pad>") continue;
    vocab.words_.push_back(std::move(w));
  }
  for (TokenId i = 0; i < static_cast<TokenId>(vocab.words_.size()); ++i) {
    vocab.index_.emplace(vocab.words_[i], i);
  }
  return vocab;
}

Vocabulary Vocabulary::from_lexicon(std::span<const std::string> sentences,
                                    std::span<const std::string> symbols) {
  std::vector<std::string> words(symbols.begin(), symbols.end());
  for (const auto& s : sentences) {
    auto split = split_words(s);
    words.insert(words.end(), split.begin(), split.end());
  }
  return from_words(std::move(words));
}

TokenId Vocabulary::id(std::string_view word) const {
  auto it = index_.find(word);
  return it == index_.end() ? kUnknownId : it->second;
}

const std::string& Vocabulary::word(TokenId id) const {
  require(id >= 0 && id < size(), "Vocabulary::word: id out of range");
  return words_[id];
}

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

bool is_punct(char c) {
  const auto u = static_cast<unsigned char>(c);
  return (u >= 33 && u <= 47) || (u >= 58 && u <= 64) || (u >= 91 && u <= 96) || (u >= 123 && u <= 126);
}

char to_lower(char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; }

}  // namespace

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> out;
  std::string current;
  for (char c : text) {
    if (is_space(c) || is_punct(c)) {
      if (!current.empty()) out.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(to_lower(c));
    }
  }
  if (!current.empty()) out.push_back(std::move(current));
  return out;
}

std::vector<TokenId> tokenize(std::string_view text, const Vocabulary& vocab) {
  std::vector<TokenId> ids;
  for (const auto& w : split_words(text)) ids.push_back(vocab.id(w));
  return ids;
}

// ---------------------------------------------------------------------------
// Grid, text, relative position

void SymbolGrid::set_cell(int r, int c, std::span<const TokenId> ids) {
  for (int j = 0; j < words_per_cell; ++j) {
    at(r, c, j) = j < static_cast<int>(ids.size()) ? ids[j] : kPadId;
  }
}

std::vector<TokenId> TextBundle::unpadded(int i) const {
  std::vector<TokenId> out = fields.at(i);
  while (!out.empty() && out.back() == kPadId) out.pop_back();
  return out;
}

TextBundle make_text_bundle(const Vocabulary& vocab,
                            const std::vector<std::pair<std::string, std::string>>& named_fields,
                            const std::vector<int>& joint_order) {
  require(!named_fields.empty(), "text bundle needs at least one field");
  TextBundle bundle;
  for (const auto& [name, text] : named_fields) {
    bundle.field_names.push_back(name);
    bundle.field_text.push_back(text);
    bundle.fields.push_back(tokenize(text, vocab));
    bundle.max_len = std::max(bundle.max_len, static_cast<int>(bundle.fields.back().size()));
  }
  for (auto& f : bundle.fields) f.resize(bundle.max_len, kPadId);

  std::vector<int> order = joint_order;
  if (order.empty()) {
    for (int i = 0; i < static_cast<int>(named_fields.size()); ++i) order.push_back(i);
  }
  for (int i : order) {
    const auto& text = named_fields.at(i).second;
    if (!bundle.joint_text.empty()) bundle.joint_text += ' ';
    bundle.joint_text += text;
    auto ids = bundle.unpadded(i);
    bundle.joint.insert(bundle.joint.end(), ids.begin(), ids.end());
  }
  return bundle;
}

RelPosition relative_position(int height, int width, std::optional<Cell> agent) {
  require(height > 0 && width > 0, "relative_position: empty grid");
  RelPosition rel{height, width, std::vector<double>(static_cast<std::size_t>(height) * width * 2, 0.0)};
  if (!agent) return rel;
  require(agent->row >= 0 && agent->row < height && agent->col >= 0 && agent->col < width,
          "relative_position: agent outside grid");
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      const std::size_t base = (static_cast<std::size_t>(r) * width + c) * 2;
      rel.offsets[base] = static_cast<double>(r - agent->row) / height;
      rel.offsets[base + 1] = static_cast<double>(c - agent->col) / width;
    }
  }
  return rel;
}

// ---------------------------------------------------------------------------
// Action descriptor and observation

const char* action_kind_name(ActionKind kind) {
  switch (kind) {
    case ActionKind::kFixed: return "fixed";
    case ActionKind::kTextChoices: return "text_choices";
    case ActionKind::kNavCoordinates: return "nav_coordinates";
  }
  return "?";
}

ActionSpaceDescriptor ActionSpaceDescriptor::fixed(int count) {
  ActionSpaceDescriptor d;
  d.kind = ActionKind::kFixed;
  d.fixed_count = count;
  return d;
}

int ActionSpaceDescriptor::arity() const {
  switch (kind) {
    case ActionKind::kFixed: return fixed_count;
    case ActionKind::kTextChoices: return static_cast<int>(choices.size());
    case ActionKind::kNavCoordinates: return static_cast<int>(columns.size()) + (stop_option ? 1 : 0);
  }
  return 0;
}

void ActionSpaceDescriptor::validate(int grid_width) const {
  switch (kind) {
    case ActionKind::kFixed:
      require(fixed_count >= 1, "fixed action count must be >= 1");
      break;
    case ActionKind::kTextChoices:
      require(!choices.empty(), "choice list must be non-empty");
      require(choice_text.size() == choices.size(), "choice text/tokens size mismatch");
      for (const auto& c : choices) require(!c.empty(), "choice token sequence must be non-empty");
      break;
    case ActionKind::kNavCoordinates:
      require(!columns.empty(), "coordinate list must be non-empty");
      for (int c : columns) require(c >= 0 && c < grid_width, "coordinate outside grid width");
      break;
  }
}

void Observation::validate(int vocab_size) const {
  require(grid.height > 0 && grid.width > 0 && grid.words_per_cell > 0, "grid dimensions must be positive");
  require(grid.cells.size() == static_cast<std::size_t>(grid.height) * grid.width * grid.words_per_cell,
          "grid cell array size mismatch");
  for (TokenId id : grid.cells) {
    require(id >= 0 && id < vocab_size, "grid id outside vocabulary");
    if (id != kPadId) require(legend.count(id) == 1, "legend missing grid id");
  }
  require(text.num_fields() >= 1, "text bundle must have at least one field");
  require(text.field_names.size() == text.fields.size(), "field names/fields size mismatch");
  for (const auto& f : text.fields) {
    require(static_cast<int>(f.size()) == text.max_len, "field not padded to max length");
    for (TokenId id : f) require(id >= 0 && id < vocab_size, "field id outside vocabulary");
  }
  for (TokenId id : text.joint) require(id >= 0 && id < vocab_size && id != kPadId, "bad joint text id");
  require(relpos.height == grid.height && relpos.width == grid.width, "relpos shape mismatch");
  require(relpos.offsets.size() == static_cast<std::size_t>(grid.height) * grid.width * 2, "relpos size mismatch");
  for (double v : relpos.offsets) require(v >= -1.0 && v <= 1.0, "relpos value outside [-1, 1]");
  if (agent) {
    require(agent->row >= 0 && agent->row < grid.height && agent->col >= 0 && agent->col < grid.width,
            "agent outside grid");
  }
  actions.validate(grid.width);
  for (const auto& c : actions.choices) {
    for (TokenId id : c) require(id >= 0 && id < vocab_size, "choice id outside vocabulary");
  }
}

std::uint64_t observation_digest(const Observation& obs) {
  StableHasher h;
  h.add_i64(obs.grid.height).add_i64(obs.grid.width).add_i64(obs.grid.words_per_cell);
  for (TokenId id : obs.grid.cells) h.add_i64(id);
  h.add_i64(obs.text.num_fields()).add_i64(obs.text.max_len);
  for (int i = 0; i < obs.text.num_fields(); ++i) {
    h.add_string(obs.text.field_names[i]);
    for (TokenId id : obs.text.fields[i]) h.add_i64(id);
    h.add_string(i < static_cast<int>(obs.text.field_text.size()) ? obs.text.field_text[i] : "");
  }
  h.add_i64(static_cast<std::int64_t>(obs.text.joint.size()));
  for (TokenId id : obs.text.joint) h.add_i64(id);
  for (double v : obs.relpos.offsets) h.add_double(v);
  h.add_i64(static_cast<int>(obs.actions.kind)).add_i64(obs.actions.fixed_count);
  h.add_i64(static_cast<std::int64_t>(obs.actions.choices.size()));
  for (const auto& c : obs.actions.choices) {
    h.add_i64(static_cast<std::int64_t>(c.size()));
    for (TokenId id : c) h.add_i64(id);
  }
  h.add_i64(static_cast<std::int64_t>(obs.actions.columns.size()));
  for (int c : obs.actions.columns) h.add_i64(c);
  h.add_i64(obs.actions.stop_option ? 1 : 0);
  h.add_i64(obs.agent ? 1 : 0);
  if (obs.agent) h.add_i64(obs.agent->row).add_i64(obs.agent->col);
  return h.digest();
}

std::string digest_hex(std::uint64_t digest) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(digest));
  return buf;
}

std::map<TokenId, std::string> legend_for(const SymbolGrid& grid, const Vocabulary& vocab) {
  std::map<TokenId, std::string> legend;
  for (TokenId id : grid.cells) {
    if (id == kPadId || legend.count(id)) continue;
    legend.emplace(id, vocab.word(id));
  }
  return legend;
}

// ---------------------------------------------------------------------------
// Splits

const char* split_name(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "?";
}

Split parse_split(std::string_view name) {
  if (name == "train") return Split::kTrain;
  if (name == "val") return Split::kVal;
  if (name == "test") return Split::kTest;
  fail(ErrorCode::kInvalidArgument, "unknown split '" + std::string(name) + "' (expected train|val|test)");
}

std::vector<SplitSpec> default_seed_splits() {
  return {{Split::kTrain, 0, 1'000'000}, {Split::kVal, 1'000'000, 2'000'000}, {Split::kTest, 2'000'000, 3'000'000}};
}

Split split_for_seed(std::int64_t seed, std::span<const SplitSpec> specs) {
  if (seed < 0) fail(ErrorCode::kInvalidArgument, "seed must be non-negative");
  for (const auto& s : specs) {
    if (seed >= s.begin && seed < s.end) return s.name;
  }
  fail(ErrorCode::kInvalidArgument, "seed " + std::to_string(seed) + " is outside every split range");
}

std::int64_t split_base_seed(Split split) {
  for (const auto& s : default_seed_splits()) {
    if (s.name == split) return s.begin;
  }
  return 0;
}

Split split_for_hash(std::uint64_t hash) {
  const int bucket = hash_bucket(hash);
  if (bucket <= 6) return Split::kTrain;
  if (bucket <= 8) return Split::kVal;
  return Split::kTest;
}

// ---------------------------------------------------------------------------
// Wrapper

StepResult wrap_step(StepResult inner, int step_count, const WrapOptions& options) {
  require(options.penalty <= 0.0, "step penalty must be <= 0");
  require(options.limit > 0, "step limit must be positive");
  inner.info.raw_reward = inner.reward;
  if (inner.done) return inner;  // terminal rewards are exempt from the penalty
  if (step_count >= options.limit) {
    inner.done = true;
    inner.reward = options.limit_reward;
    inner.info.raw_reward = options.limit_reward;
    inner.info.limit_reached = true;
    inner.info.win = false;
    return inner;
  }
  inner.reward += options.penalty;
  return inner;
}

// ---------------------------------------------------------------------------
// Overrides

Overrides parse_overrides(std::string_view text) {
  Overrides out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t next = text.find_first_of(",;", pos);
    if (next == std::string_view::npos) next = text.size();
    std::string_view item = text.substr(pos, next - pos);
    while (!item.empty() && is_space(item.front())) item.remove_prefix(1);
    while (!item.empty() && is_space(item.back())) item.remove_suffix(1);
    if (!item.empty()) {
      const auto eq = item.find('=');
      if (eq == std::string_view::npos || eq == 0) {
        fail(ErrorCode::kParse, "override '" + std::string(item) + "' is not key=value");
      }
      out[std::string(item.substr(0, eq))] = std::string(item.substr(eq + 1));
    }
    pos = next + 1;
  }
  return out;
}

std::string format_overrides(const Overrides& overrides) {
  std::string out;
  for (const auto& [k, v] : overrides) {
    if (!out.empty()) out += ',';
    out += k + "=" + v;
  }
  return out;
}

const std::string* OverrideReader::find(std::string_view key) {
  auto it = overrides_.find(key);
  if (it == overrides_.end()) return nullptr;
  consumed_.emplace_back(key);
  return &it->second;
}

int OverrideReader::get_int(std::string_view key, int fallback) {
  const std::string* v = find(key);
  if (!v) return fallback;
  int out = 0;
  auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
  if (ec != std::errc() || ptr != v->data() + v->size()) {
    fail(ErrorCode::kInvalidArgument, "override " + std::string(key) + ": expected integer, got '" + *v + "'");
  }
  return out;
}

double OverrideReader::get_double(std::string_view key, double fallback) {
  const std::string* v = find(key);
  if (!v) return fallback;
  try {
    std::size_t used = 0;
    double out = std::stod(*v, &used);
    if (used != v->size()) throw std::invalid_argument("trailing");
    return out;
  } catch (const std::exception&) {
    fail(ErrorCode::kInvalidArgument, "override " + std::string(key) + ": expected number, got '" + *v + "'");
  }
}

bool OverrideReader::get_bool(std::string_view key, bool fallback) {
  const std::string* v = find(key);
  if (!v) return fallback;
  if (*v == "1" || *v == "true" || *v == "yes") return true;
  if (*v == "0" || *v == "false" || *v == "no") return false;
  fail(ErrorCode::kInvalidArgument, "override " + std::string(key) + ": expected boolean, got '" + *v + "'");
}

std::string OverrideReader::get_string(std::string_view key, std::string fallback) {
  const std::string* v = find(key);
  return v ? *v : std::move(fallback);
}

void OverrideReader::finish(std::string_view env_name) const {
  for (const auto& [k, v] : overrides_) {
    if (std::find(consumed_.begin(), consumed_.end(), k) == consumed_.end()) {
      fail(ErrorCode::kInvalidArgument, "unknown override '" + k + "' for " + std::string(env_name));
    }
  }
}

}  // namespace silg
