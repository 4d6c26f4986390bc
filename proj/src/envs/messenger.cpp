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

#include "silg/messenger.hpp"

#include <algorithm>
#include <deque>
#include <numeric>

#include "envs/text_util.hpp"

namespace silg::messenger {

namespace {

constexpr std::array<Cell, 5> kMoves = {Cell{-1, 0}, Cell{1, 0}, Cell{0, -1}, Cell{0, 1}, Cell{0, 0}};

int manhattan(Cell a, Cell b) { return std::abs(a.row - b.row) + std::abs(a.col - b.col); }

// Fixed permutation of the pool so the pair partition is not tied to list order.
std::vector<int> entity_rank(int pool) {
  std::vector<int> order(pool);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(0x6d657373656e6765ULL);
  rng.shuffle(order);
  std::vector<int> rank(pool);
  for (int i = 0; i < pool; ++i) rank[order[i]] = i;
  return rank;
}

const Config& validated(const Config& config) {
  config.validate();
  return config;
}

Vocabulary build_vocabulary(const Config& config) {
  std::vector<std::string> lexicon;
  for (int r = 0; r < kNumRoles; ++r) {
    for (const auto& t : role_templates(static_cast<Role>(r))) lexicon.push_back(text::fill(t, {}));
  }
  std::vector<std::string> symbols{"agent", "agent_message"};
  for (int e = 0; e < config.pool; ++e) {
    const auto& ent = entity_pool()[e];
    symbols.push_back(ent.symbol);
    for (int s = 0; s < config.synonyms; ++s) lexicon.push_back(ent.synonyms[s]);
  }
  return Vocabulary::from_lexicon(lexicon, symbols);
}

// BFS on the grid avoiding `blocked`; returns the move list.
std::vector<int> bfs_moves(int size, Cell from, Cell to, Cell blocked) {
  const auto idx = [size](Cell c) { return c.row * size + c.col; };
  std::vector<int> prev(size * size, -1);
  std::vector<int> via(size * size, -1);
  std::deque<Cell> queue{from};
  prev[idx(from)] = idx(from);
  while (!queue.empty()) {
    const Cell c = queue.front();
    queue.pop_front();
    if (c == to) break;
    for (int a = 0; a < 4; ++a) {
      const Cell n{c.row + kMoves[a].row, c.col + kMoves[a].col};
      if (n.row < 0 || n.col < 0 || n.row >= size || n.col >= size) continue;
      if (n == blocked || prev[idx(n)] != -1) continue;
      prev[idx(n)] = idx(c);
      via[idx(n)] = a;
      queue.push_back(n);
    }
  }
  if (prev[idx(to)] == -1) return {};
  std::vector<int> moves;
  for (int at = idx(to); at != idx(from); at = prev[at]) moves.push_back(via[at]);
  std::reverse(moves.begin(), moves.end());
  return moves;
}

}  // namespace

const std::vector<Entity>& entity_pool() {
  static const std::vector<Entity> pool = {
      {"e0", {"airplane", "plane", "jet", "aircraft"}},
      {"e1", {"mage", "wizard", "sorcerer", "magician"}},
      {"e2", {"dog", "hound", "canine", "puppy"}},
      {"e3", {"bird", "sparrow", "finch", "songbird"}},
      {"e4", {"fish", "trout", "salmon", "minnow"}},
      {"e5", {"scientist", "researcher", "chemist", "professor"}},
      {"e6", {"thief", "robber", "burglar", "bandit"}},
      {"e7", {"ship", "boat", "vessel", "yacht"}},
      {"e8", {"ball", "sphere", "orb", "globe"}},
      {"e9", {"robot", "android", "automaton", "droid"}},
      {"e10", {"queen", "monarch", "empress", "duchess"}},
      {"e11", {"sword", "blade", "saber", "rapier"}},
  };
  return pool;
}

const std::vector<std::string>& role_templates(Role role) {
  static const std::array<std::vector<std::string>, kNumRoles> templates = {
      std::vector<std::string>{"the {x} has the secret message that you need",
                               "the {x} is carrying a classified document",
                               "the important note is held by the {x}"},
      std::vector<std::string>{"the {x} is the receiver of the message",
                               "deliver the message to the {x} as soon as possible",
                               "the {x} is waiting for the important news"},
      std::vector<std::string>{"the {x} is a deadly enemy of yours",
                               "stay away from the {x} because it is dangerous",
                               "the {x} will attack you on sight"},
  };
  return templates[role];
}

Config Config::from_overrides(OverrideReader& reader) {
  Config c;
  c.size = reader.get_int("size", c.size);
  c.pool = reader.get_int("pool", c.pool);
  c.synonyms = reader.get_int("synonyms", c.synonyms);
  return c;
}

void Config::validate() const {
  if (size < 5 || size > 32) fail(ErrorCode::kInvalidArgument, "messenger: size must be in [5, 32]");
  if (pool < 6 || pool > static_cast<int>(entity_pool().size())) {
    fail(ErrorCode::kInvalidArgument, "messenger: pool must be in [6, 12]");
  }
  if (synonyms < 1 || synonyms > 4) fail(ErrorCode::kInvalidArgument, "messenger: synonyms must be in [1, 4]");
}

Split pair_split(int entity, Role role, int pool) {
  require(entity >= 0 && entity < pool, "messenger: entity outside pool");
  const int q = entity_rank(pool)[entity];
  if ((q + role) % 3 != 2) return Split::kTrain;
  return q % 2 == 0 ? Split::kVal : Split::kTest;
}

RoleAssignment sample_assignment(Rng& rng, Split split, const Config& config) {
  std::array<std::vector<int>, kNumRoles> candidates;
  for (int r = 0; r < kNumRoles; ++r) {
    for (int e = 0; e < config.pool; ++e) {
      if (pair_split(e, static_cast<Role>(r), config.pool) == split) candidates[r].push_back(e);
    }
    require(!candidates[r].empty(), "messenger: pool too small for split");
  }
  for (;;) {
    RoleAssignment a;
    for (int r = 0; r < kNumRoles; ++r) a.entity[r] = rng.pick(candidates[r]);
    if (a.entity[0] != a.entity[1] && a.entity[0] != a.entity[2] && a.entity[1] != a.entity[2]) return a;
  }
}

TextBundle compose_manual(const RoleAssignment& assignment, const Config& config, Rng& rng,
                          const Vocabulary& vocab) {
  std::vector<std::string> sentences;
  for (int r = 0; r < kNumRoles; ++r) {
    const auto& ent = entity_pool()[assignment.entity[r]];
    const std::string& name = ent.synonyms[rng.uniform(config.synonyms)];
    const auto& tmpls = role_templates(static_cast<Role>(r));
    sentences.push_back(text::fill(tmpls[rng.uniform(static_cast<int>(tmpls.size()))], {{"x", name}}));
  }
  rng.shuffle(sentences);
  return make_text_bundle(vocab, {{"text1", sentences[0]}, {"text2", sentences[1]}, {"text3", sentences[2]}});
}

Outcome advance(const Config& config, State& state, int action) {
  require(action >= 0 && action < static_cast<int>(kMoves.size()), "messenger: invalid action");
  state.agent = {std::clamp(state.agent.row + kMoves[action].row, 0, config.size - 1),
                 std::clamp(state.agent.col + kMoves[action].col, 0, config.size - 1)};
  if (state.agent == state.entities[kEnemy]) return Outcome::kLoss;
  if (!state.has_message && state.agent == state.entities[kMessage]) {
    state.has_message = true;
    return Outcome::kNone;
  }
  if (state.has_message && state.agent == state.entities[kGoal]) return Outcome::kWin;
  return Outcome::kNone;
}

std::vector<int> oracle_solve(const Config& config, const State& state) {
  std::vector<int> plan;
  Cell at = state.agent;
  if (!state.has_message) {
    plan = bfs_moves(config.size, at, state.entities[kMessage], state.entities[kEnemy]);
    if (plan.empty() && at != state.entities[kMessage]) return {};
    at = state.entities[kMessage];
  }
  auto rest = bfs_moves(config.size, at, state.entities[kGoal], state.entities[kEnemy]);
  if (rest.empty()) return {};
  plan.insert(plan.end(), rest.begin(), rest.end());
  return plan;
}

// ---------------------------------------------------------------------------

MessengerGame::MessengerGame(Config config, Split split)
    : config_(config), split_(split), vocab_(build_vocabulary(validated(config))) {}

Observation MessengerGame::reset(std::uint64_t seed) {
  Rng rng(mix_seed(seed, 0x6d736772));
  assignment_ = sample_assignment(rng, split_, config_);
  text_ = compose_manual(assignment_, config_, rng, vocab_);
  const int n = config_.size;
  for (int attempt = 0;; ++attempt) {
    if (attempt >= 10000) fail(ErrorCode::kContractViolation, "messenger: could not place entities");
    std::array<Cell, 4> spots;
    for (auto& c : spots) c = {rng.uniform(n), rng.uniform(n)};
    bool ok = true;
    for (int i = 0; i < 4 && ok; ++i) {
      for (int j = i + 1; j < 4 && ok; ++j) ok = manhattan(spots[i], spots[j]) >= config_.min_spawn_distance;
    }
    if (!ok) continue;
    State s;
    s.agent = spots[0];
    s.entities = {spots[1], spots[2], spots[3]};
    const auto plan = oracle_solve(config_, s);
    if (plan.empty() || static_cast<int>(plan.size()) > config_.horizon) continue;
    state_ = s;
    break;
  }
  done_ = false;
  return observe();
}

StepResult MessengerGame::step(int action) {
  if (done_) fail(ErrorCode::kBadState, "messenger: step after done");
  if (action < 0 || action >= static_cast<int>(kMoves.size())) {
    fail(ErrorCode::kInvalidArgument, "messenger: invalid action " + std::to_string(action));
  }
  const Outcome outcome = advance(config_, state_, action);
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

Observation MessengerGame::observe() const {
  Observation obs;
  obs.grid = SymbolGrid(config_.size, config_.size, 1);
  for (int r = 0; r < kNumRoles; ++r) {
    if (r == kMessage && state_.has_message) continue;
    const Cell c = state_.entities[r];
    obs.grid.at(c.row, c.col) = vocab_.id(entity_pool()[assignment_.entity[r]].symbol);
  }
  obs.grid.at(state_.agent.row, state_.agent.col) = vocab_.id(state_.has_message ? "agent_message" : "agent");
  obs.text = text_;
  obs.relpos = relative_position(config_.size, config_.size, state_.agent);
  obs.actions = ActionSpaceDescriptor::fixed(static_cast<int>(kMoves.size()));
  obs.legend = legend_for(obs.grid, vocab_);
  obs.agent = state_.agent;
  return obs;
}

}  // namespace silg::messenger
