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

#include "silg/rtfm.hpp"

#include <algorithm>
#include <deque>
#include <numeric>
#include <unordered_map>

#include "envs/text_util.hpp"

namespace silg::rtfm {

namespace {

const std::vector<std::string> kTeamTemplates = {
    "{list} are on the {team}",
    "the {team} includes {list}",
    "{list} belong to the {team}",
};

const std::vector<std::string> kBeatTemplates = {
    "{mod} beats {elem}",
    "{elem} is weak to {mod}",
    "{mod} is strong against {elem}",
};

const std::string kGoalTemplate = "defeat the {team}";
const std::string kEmptyInventory = "you have nothing";
const std::string kInventoryTemplate = "you have the {mod} {noun}";

constexpr std::array<Cell, 5> kMoves = {Cell{-1, 0}, Cell{1, 0}, Cell{0, -1}, Cell{0, 1}, Cell{0, 0}};

int manhattan(Cell a, Cell b) { return std::abs(a.row - b.row) + std::abs(a.col - b.col); }

Outcome combat(const Dynamics& dyn, const State& state, int slot) {
  if (slot != dyn.target_team || !state.inventory) return Outcome::kLoss;
  const int modifier = dyn.item_modifier[*state.inventory];
  return dyn.beats[modifier] == dyn.monster_element[slot] ? Outcome::kWin : Outcome::kLoss;
}

const Config& validated(const Config& config) {
  config.validate();
  return config;
}

Vocabulary build_vocabulary(const Config& config) {
  std::vector<std::string> lexicon;
  auto add_stripped = [&](const std::string& tmpl) { lexicon.push_back(text::fill(tmpl, {})); };
  for (const auto& t : kTeamTemplates) add_stripped(t);
  for (const auto& t : kBeatTemplates) add_stripped(t);
  add_stripped(kGoalTemplate);
  add_stripped(kEmptyInventory);
  add_stripped(kInventoryTemplate);
  lexicon.push_back("and");
  for (const auto& n : team_names()) lexicon.push_back(n);
  for (int i = 0; i < config.monster_pool; ++i) lexicon.push_back(monster_names()[i]);
  for (int i = 0; i < config.modifiers; ++i) {
    lexicon.push_back(element_names()[i]);
    lexicon.push_back(modifier_names()[i]);
  }
  for (int i = 0; i < config.item_nouns; ++i) lexicon.push_back(item_noun_names()[i]);
  return Vocabulary::from_lexicon(lexicon, std::vector<std::string>{"you"});
}

}  // namespace

const std::vector<std::string>& team_names() {
  static const std::vector<std::string> v = {"rebel enclave", "star alliance"};
  return v;
}
const std::vector<std::string>& monster_names() {
  static const std::vector<std::string> v = {"goblin", "jackal", "wolf", "bat", "imp", "ghoul"};
  return v;
}
const std::vector<std::string>& element_names() {
  static const std::vector<std::string> v = {"fire", "cold", "poison", "lightning"};
  return v;
}
const std::vector<std::string>& modifier_names() {
  static const std::vector<std::string> v = {"blessed", "shimmering", "fanatical", "arcane"};
  return v;
}
const std::vector<std::string>& item_noun_names() {
  static const std::vector<std::string> v = {"sword", "axe", "hammer", "spear", "dagger", "staff"};
  return v;
}

Config Config::from_overrides(OverrideReader& reader) {
  Config c;
  c.height = reader.get_int("height", c.height);
  c.width = reader.get_int("width", c.width);
  c.monster_pool = reader.get_int("monster_pool", c.monster_pool);
  c.monsters_per_team = reader.get_int("monsters_per_team", c.monsters_per_team);
  c.modifiers = reader.get_int("modifiers", c.modifiers);
  c.item_nouns = reader.get_int("item_nouns", c.item_nouns);
  c.chase_period = reader.get_int("chase_period", c.chase_period);
  return c;
}

void Config::validate() const {
  if (height < 3 || width < 3 || height > 16 || width > 16) {
    fail(ErrorCode::kInvalidArgument, "rtfm: grid sides must be in [3, 16]");
  }
  if (monster_pool > static_cast<int>(monster_names().size()) || monsters_per_team < 1 ||
      monster_pool < kNumTeams * monsters_per_team) {
    fail(ErrorCode::kInvalidArgument, "rtfm: monster_pool must hold two disjoint rosters (max 6)");
  }
  if (modifiers < 2 || modifiers > static_cast<int>(modifier_names().size())) {
    fail(ErrorCode::kInvalidArgument, "rtfm: modifiers must be in [2, 4]");
  }
  if (item_nouns < 2 || item_nouns > static_cast<int>(item_noun_names().size())) {
    fail(ErrorCode::kInvalidArgument, "rtfm: item_nouns must be in [2, 6]");
  }
  if (chase_period < 0) fail(ErrorCode::kInvalidArgument, "rtfm: chase_period must be >= 0");
  if (horizon < 1) fail(ErrorCode::kInvalidArgument, "rtfm: horizon must be positive");
}

std::uint64_t Dynamics::rule_hash() const {
  StableHasher h;
  h.add_string("rtfm");
  for (const auto& team : teams) {
    h.add_i64(static_cast<std::int64_t>(team.size()));
    for (int m : team) h.add_i64(m);
  }
  h.add_i64(static_cast<std::int64_t>(beats.size()));
  for (int b : beats) h.add_i64(b);
  h.add_i64(target_team);
  return h.digest();
}

std::uint64_t State::key() const {
  auto cell = [](Cell c) { return static_cast<std::uint64_t>(c.row * 16 + c.col); };
  std::uint64_t k = cell(agent);
  for (const auto& m : monsters) k = k * 256 + cell(m);
  for (const auto& it : items) k = k * 257 + (it ? cell(*it) : 256);
  k = k * 3 + (inventory ? *inventory + 1 : 0);
  return k;
}

Dynamics generate_dynamics(Rng& rng, Split split, const Config& config) {
  Dynamics dyn;
  const int m = config.monsters_per_team;
  for (;;) {
    std::vector<int> perm(config.monster_pool);
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm);
    for (int t = 0; t < kNumTeams; ++t) {
      dyn.teams[t].assign(perm.begin() + t * m, perm.begin() + (t + 1) * m);
      std::sort(dyn.teams[t].begin(), dyn.teams[t].end());
    }
    dyn.beats.resize(config.modifiers);
    std::iota(dyn.beats.begin(), dyn.beats.end(), 0);
    rng.shuffle(dyn.beats);
    dyn.target_team = rng.uniform(kNumTeams);
    if (split_for_hash(dyn.rule_hash()) == split) break;
  }

  for (int t = 0; t < kNumTeams; ++t) dyn.monster_name[t] = rng.pick(dyn.teams[t]);
  const int elements = config.modifiers;
  const int target_element = rng.uniform(elements);
  const int other_element = (target_element + 1 + rng.uniform(elements - 1)) % elements;
  dyn.monster_element[dyn.target_team] = target_element;
  dyn.monster_element[1 - dyn.target_team] = other_element;

  std::vector<int> modifier_for(elements);
  for (int mod = 0; mod < elements; ++mod) modifier_for[dyn.beats[mod]] = mod;

  std::vector<int> nouns(config.item_nouns);
  std::iota(nouns.begin(), nouns.end(), 0);
  rng.shuffle(nouns);
  dyn.winning_item = rng.uniform(2);
  dyn.item_modifier[dyn.winning_item] = modifier_for[target_element];
  dyn.item_modifier[1 - dyn.winning_item] = modifier_for[other_element];
  dyn.item_noun = {nouns[0], nouns[1]};
  return dyn;
}

std::vector<std::string> draw_manual_sentences(const Dynamics& dyn, Rng& rng, const Config& config) {
  std::vector<std::string> sentences;
  for (int t = 0; t < kNumTeams; ++t) {
    std::vector<std::string> names;
    for (int m : dyn.teams[t]) names.push_back(monster_names()[m]);
    const auto& tmpl = kTeamTemplates[rng.uniform(static_cast<int>(kTeamTemplates.size()))];
    sentences.push_back(text::fill(tmpl, {{"list", text::join_list(names)}, {"team", team_names()[t]}}));
  }
  for (int mod = 0; mod < config.modifiers; ++mod) {
    const auto& tmpl = kBeatTemplates[rng.uniform(static_cast<int>(kBeatTemplates.size()))];
    sentences.push_back(
        text::fill(tmpl, {{"mod", modifier_names()[mod]}, {"elem", element_names()[dyn.beats[mod]]}}));
  }
  rng.shuffle(sentences);
  return sentences;
}

TextBundle compose_manual(const Dynamics& dyn, const State& state, const Vocabulary& vocab,
                          const std::vector<std::string>& manual_sentences) {
  std::string manual;
  for (const auto& s : manual_sentences) manual += s + ". ";
  if (!manual.empty()) manual.pop_back();
  const std::string goal = text::fill(kGoalTemplate, {{"team", team_names()[dyn.target_team]}});
  std::string inventory = kEmptyInventory;
  if (state.inventory) {
    const int i = *state.inventory;
    inventory = text::fill(kInventoryTemplate, {{"mod", modifier_names()[dyn.item_modifier[i]]},
                                                {"noun", item_noun_names()[dyn.item_noun[i]]}});
  }
  return make_text_bundle(vocab, {{"manual", manual}, {"goal", goal}, {"inventory", inventory}});
}

Outcome advance(const Dynamics& dyn, const Config& config, State& state, int action) {
  require(action >= 0 && action < static_cast<int>(kMoves.size()), "rtfm: invalid action");
  Cell target{std::clamp(state.agent.row + kMoves[action].row, 0, config.height - 1),
              std::clamp(state.agent.col + kMoves[action].col, 0, config.width - 1)};
  ++state.steps;
  for (int t = 0; t < kNumTeams; ++t) {
    if (state.monsters[t] == target) return combat(dyn, state, t);
  }
  state.agent = target;
  for (int i = 0; i < 2; ++i) {
    if (state.items[i] && *state.items[i] == target) {
      if (state.inventory) state.items[*state.inventory] = target;
      state.items[i].reset();
      state.inventory = i;
      break;
    }
  }

  if (config.chase_period > 0 && state.steps % config.chase_period == 0) {
    for (int t = 0; t < kNumTeams; ++t) {
      Cell& m = state.monsters[t];
      const int dr = state.agent.row - m.row;
      const int dc = state.agent.col - m.col;
      const Cell row_step{dr > 0 ? 1 : (dr < 0 ? -1 : 0), 0};
      const Cell col_step{0, dc > 0 ? 1 : (dc < 0 ? -1 : 0)};
      std::array<Cell, 2> order = std::abs(dr) >= std::abs(dc) ? std::array{row_step, col_step}
                                                               : std::array{col_step, row_step};
      for (const Cell& s : order) {
        if (s.row == 0 && s.col == 0) continue;
        const Cell next{m.row + s.row, m.col + s.col};
        if (next == state.agent) return combat(dyn, state, t);
        bool blocked = next == state.monsters[1 - t];
        for (const auto& it : state.items) blocked = blocked || (it && *it == next);
        if (blocked) continue;
        m = next;
        break;
      }
    }
  }
  return Outcome::kNone;
}

int grid_path_length(int height, int width, Cell from, Cell to, const std::vector<Cell>& blocked) {
  std::vector<int> dist(static_cast<std::size_t>(height) * width, -1);
  auto idx = [width](Cell c) { return static_cast<std::size_t>(c.row) * width + c.col; };
  for (const Cell& b : blocked) dist[idx(b)] = -2;
  std::deque<Cell> queue{from};
  dist[idx(from)] = 0;
  while (!queue.empty()) {
    Cell c = queue.front();
    queue.pop_front();
    if (c == to) return dist[idx(c)];
    for (int a = 0; a < 4; ++a) {
      Cell n{c.row + kMoves[a].row, c.col + kMoves[a].col};
      if (n.row < 0 || n.col < 0 || n.row >= height || n.col >= width || dist[idx(n)] != -1) continue;
      dist[idx(n)] = dist[idx(c)] + 1;
      queue.push_back(n);
    }
  }
  return -1;
}

Resolution resolve_target(const Dynamics& dyn) {
  Resolution res;
  const auto& roster = dyn.teams[dyn.target_team];
  for (int slot = 0; slot < kNumTeams; ++slot) {
    if (std::find(roster.begin(), roster.end(), dyn.monster_name[slot]) != roster.end()) res.target_monster = slot;
  }
  const int element = dyn.monster_element[res.target_monster];
  int modifier = -1;
  for (int m = 0; m < static_cast<int>(dyn.beats.size()); ++m) {
    if (dyn.beats[m] == element) modifier = m;
  }
  for (int i = 0; i < 2; ++i) {
    if (dyn.item_modifier[i] == modifier) res.winning_item = i;
  }
  return res;
}

std::vector<int> oracle_solve(const Dynamics& dyn, const Config& config, const State& start) {
  struct Node {
    State state;
    int parent;
    int action;
  };
  const int budget = config.horizon - start.steps;
  if (budget <= 0) return {};
  const int period = std::max(config.chase_period, 1);
  auto key_of = [period](const State& s) { return s.key() * static_cast<std::uint64_t>(period) + s.steps % period; };

  std::vector<Node> nodes{{start, -1, -1}};
  std::vector<int> depth{0};
  std::unordered_map<std::uint64_t, int> seen{{key_of(start), 0}};
  for (std::size_t head = 0; head < nodes.size(); ++head) {
    if (depth[head] >= budget) continue;
    for (int a = 0; a < static_cast<int>(kMoves.size()); ++a) {
      State next = nodes[head].state;
      const Outcome outcome = advance(dyn, config, next, a);
      if (outcome == Outcome::kLoss) continue;
      if (outcome == Outcome::kWin) {
        std::vector<int> plan{a};
        for (int n = static_cast<int>(head); nodes[n].parent >= 0; n = nodes[n].parent) plan.push_back(nodes[n].action);
        std::reverse(plan.begin(), plan.end());
        return plan;
      }
      if (seen.emplace(key_of(next), static_cast<int>(nodes.size())).second) {
        nodes.push_back({next, static_cast<int>(head), a});
        depth.push_back(depth[head] + 1);
      }
    }
  }
  return {};
}

// ---------------------------------------------------------------------------

RtfmGame::RtfmGame(Config config, Split split)
    : config_(config), split_(split), vocab_(build_vocabulary(validated(config))) {}

Observation RtfmGame::reset(std::uint64_t seed) {
  Rng rng(mix_seed(seed, 0x7274666d));
  dyn_ = generate_dynamics(rng, split_, config_);
  sentences_ = draw_manual_sentences(dyn_, rng, config_);

  const int cells = config_.height * config_.width;
  for (int attempt = 0;; ++attempt) {
    if (attempt >= 1000) fail(ErrorCode::kContractViolation, "rtfm: could not place a winnable layout");
    std::vector<int> order(cells);
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    auto cell_of = [this](int i) { return Cell{i / config_.width, i % config_.width}; };
    State s;
    s.agent = cell_of(order[0]);
    s.monsters = {cell_of(order[1]), cell_of(order[2])};
    s.items = {cell_of(order[3]), cell_of(order[4])};
    if (manhattan(s.agent, s.monsters[0]) < 2 || manhattan(s.agent, s.monsters[1]) < 2) continue;
    if (oracle_solve(dyn_, config_, s).empty()) continue;
    state_ = s;
    break;
  }
  done_ = false;
  return observe();
}

StepResult RtfmGame::step(int action) {
  if (done_) fail(ErrorCode::kBadState, "rtfm: step after done");
  if (action < 0 || action >= static_cast<int>(kMoves.size())) {
    fail(ErrorCode::kInvalidArgument, "rtfm: invalid action " + std::to_string(action));
  }
  const Outcome outcome = advance(dyn_, config_, state_, action);
  StepResult result;
  if (outcome != Outcome::kNone) {
    done_ = true;
    result.done = true;
    result.info.win = outcome == Outcome::kWin;
    result.reward = result.info.win ? 1.0 : -1.0;
  }
  result.observation = observe();
  return result;
}

Observation RtfmGame::observe() const {
  Observation obs;
  obs.grid = SymbolGrid(config_.height, config_.width, 2);
  const TokenId you = vocab_.id("you");
  obs.grid.set_cell(state_.agent.row, state_.agent.col, std::array{you});
  for (int t = 0; t < kNumTeams; ++t) {
    const Cell m = state_.monsters[t];
    obs.grid.set_cell(m.row, m.col,
                      std::array{vocab_.id(element_names()[dyn_.monster_element[t]]),
                                 vocab_.id(monster_names()[dyn_.monster_name[t]])});
  }
  for (int i = 0; i < 2; ++i) {
    if (!state_.items[i]) continue;
    const Cell c = *state_.items[i];
    // The agent standing on a dropped item hides it.
    if (c == state_.agent) continue;
    obs.grid.set_cell(c.row, c.col,
                      std::array{vocab_.id(modifier_names()[dyn_.item_modifier[i]]),
                                 vocab_.id(item_noun_names()[dyn_.item_noun[i]])});
  }
  obs.text = compose_manual(dyn_, state_, vocab_, sentences_);
  obs.relpos = relative_position(config_.height, config_.width, state_.agent);
  obs.actions = ActionSpaceDescriptor::fixed(static_cast<int>(kMoves.size()));
  obs.legend = legend_for(obs.grid, vocab_);
  obs.agent = state_.agent;
  return obs;
}

}  // namespace silg::rtfm
