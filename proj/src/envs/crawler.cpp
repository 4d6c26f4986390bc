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

#include "silg/crawler.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

#include "envs/text_util.hpp"

namespace silg::crawler {

namespace {

constexpr std::array<Cell, 8> kDirs = {Cell{-1, 0}, Cell{1, 0},  Cell{0, -1}, Cell{0, 1},
                                       Cell{-1, -1}, Cell{-1, 1}, Cell{1, -1}, Cell{1, 1}};

constexpr int kDescendPoints = 50;

const char* tile_word(Tile t) {
  switch (t) {
    case Tile::kStone: return "stone";
    case Tile::kWall: return "wall";
    case Tile::kFloor: return "floor";
    case Tile::kCorridor: return "corridor";
    case Tile::kDoor: return "door";
    case Tile::kStairs: return "stairs";
  }
  return "stone";
}

const std::vector<std::string>& feedback_templates() {
  static const std::vector<std::string> v = {
      "you enter the dungeon",        "you move",
      "it is solid stone",            "you kill the {monster}",
      "you pick up {n} gold pieces",  "you descend the stairs",
      "you can not go down here",     "you wait",
      "you can not descend any further",
  };
  return v;
}

Vocabulary build_vocabulary() {
  std::vector<std::string> lexicon;
  for (const auto& t : feedback_templates()) lexicon.push_back(text::fill(t, {}));
  for (int k = 0; k < kNumTasks; ++k) lexicon.push_back(task_prompt(static_cast<TaskKind>(k)));
  lexicon.push_back("depth gold score");
  for (int n = 0; n < 100; ++n) lexicon.push_back(std::to_string(n));
  std::vector<std::string> symbols = {"unseen", "agent", "gold"};
  for (Tile t : {Tile::kStone, Tile::kWall, Tile::kFloor, Tile::kCorridor, Tile::kDoor, Tile::kStairs}) {
    symbols.emplace_back(tile_word(t));
  }
  for (const auto& m : monster_kinds()) symbols.push_back(m.name);
  return Vocabulary::from_lexicon(lexicon, symbols);
}

std::size_t index_of(const DungeonFloor& f, Cell c) { return static_cast<std::size_t>(c.row) * f.width + c.col; }

void carve(DungeonFloor& f, Cell c) {
  Tile& t = f.tiles[index_of(f, c)];
  if (t == Tile::kStone) t = Tile::kCorridor;
  else if (t == Tile::kWall) t = Tile::kDoor;
}

Cell random_room_cell(Rng& rng, const Room& room) {
  return {room.top + rng.uniform(room.height), room.left + rng.uniform(room.width)};
}

}  // namespace

const char* task_name(TaskKind kind) {
  switch (kind) {
    case TaskKind::kScore: return "score";
    case TaskKind::kGold: return "gold";
    case TaskKind::kScout: return "scout";
  }
  return "?";
}

std::string task_prompt(TaskKind kind) {
  switch (kind) {
    case TaskKind::kScore: return "get a higher score";
    case TaskKind::kGold: return "get more gold";
    case TaskKind::kScout: return "explore more of the dungeon";
  }
  return "";
}

double Thresholds::for_task(TaskKind kind) const {
  switch (kind) {
    case TaskKind::kScore: return score;
    case TaskKind::kGold: return gold;
    case TaskKind::kScout: return scout;
  }
  return 0;
}

Thresholds default_thresholds() {
  // Lower medians of GreedyExplorer achievement (train seeds 0..99, 64 steps).
  return Thresholds{60, 28, 234};
}

const std::vector<MonsterKind>& monster_kinds() {
  static const std::vector<MonsterKind> v = {
      {"newt", 5}, {"rat", 10}, {"jackal", 10}, {"kobold", 15}, {"gnome", 20}};
  return v;
}

const std::vector<std::string>& action_labels() {
  static const std::vector<std::string> v = {"north", "south", "west", "east", "northwest",
                                             "northeast", "southwest", "southeast", "descend", "wait"};
  return v;
}

Cell action_delta(int action) {
  require(action >= 0 && action < 8, "crawler: not a move action");
  return kDirs[action];
}

Config Config::from_overrides(OverrideReader& reader) {
  Config c;
  c.floors = reader.get_int("floors", c.floors);
  c.gold_min = reader.get_int("gold_min", c.gold_min);
  c.gold_max = reader.get_int("gold_max", c.gold_max);
  c.monsters_min = reader.get_int("monsters_min", c.monsters_min);
  c.monsters_max = reader.get_int("monsters_max", c.monsters_max);
  c.visibility_radius = reader.get_int("visibility_radius", c.visibility_radius);
  c.thresholds.score = reader.get_double("threshold_score", c.thresholds.score);
  c.thresholds.gold = reader.get_double("threshold_gold", c.thresholds.gold);
  c.thresholds.scout = reader.get_double("threshold_scout", c.thresholds.scout);
  return c;
}

void Config::validate() const {
  if (floors < 1 || floors > 16) fail(ErrorCode::kInvalidArgument, "crawler: floors must be in [1, 16]");
  if (gold_min < 0 || gold_max < gold_min) fail(ErrorCode::kInvalidArgument, "crawler: bad gold range");
  if (monsters_min < 0 || monsters_max < monsters_min) fail(ErrorCode::kInvalidArgument, "crawler: bad monster range");
  if (visibility_radius < 1) fail(ErrorCode::kInvalidArgument, "crawler: visibility_radius must be >= 1");
  if (!(thresholds.score > 0 && thresholds.gold > 0 && thresholds.scout > 0)) {
    fail(ErrorCode::kInvalidArgument, "crawler: thresholds must be positive");
  }
}

bool DungeonFloor::walkable(Cell c) const {
  if (!inside(c)) return false;
  const Tile t = tile(c);
  return t == Tile::kFloor || t == Tile::kCorridor || t == Tile::kDoor || t == Tile::kStairs;
}

int DungeonFloor::walkable_count() const {
  int n = 0;
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) n += walkable({r, c}) ? 1 : 0;
  }
  return n;
}

int DungeonFloor::reachable_from_start() const {
  std::vector<std::uint8_t> mark(tiles.size(), 0);
  std::deque<Cell> queue{start};
  mark[index_of(*this, start)] = 1;
  int n = 0;
  while (!queue.empty()) {
    const Cell c = queue.front();
    queue.pop_front();
    ++n;
    for (const Cell& d : kDirs) {
      const Cell nb{c.row + d.row, c.col + d.col};
      if (!walkable(nb) || mark[index_of(*this, nb)]) continue;
      mark[index_of(*this, nb)] = 1;
      queue.push_back(nb);
    }
  }
  return n;
}

DungeonFloor generate_floor(Rng& rng, int depth, const Config& config) {
  require(depth >= 0, "crawler: depth must be >= 0");
  for (int attempt = 0; attempt < 100; ++attempt) {
    DungeonFloor f;
    f.height = config.height;
    f.width = config.width;
    f.tiles.assign(static_cast<std::size_t>(f.height) * f.width, Tile::kStone);

    const int wanted = rng.uniform_range(4, 7);
    for (int tries = 0; tries < 200 && static_cast<int>(f.rooms.size()) < wanted; ++tries) {
      Room r;
      r.height = rng.uniform_range(2, 5);
      r.width = rng.uniform_range(3, 12);
      r.top = rng.uniform_range(2, f.height - r.height - 2);
      r.left = rng.uniform_range(2, f.width - r.width - 2);
      bool clear = true;
      for (const Room& o : f.rooms) {
        // keep at least one stone cell between the walls
        if (r.top - 3 < o.top + o.height && o.top - 3 < r.top + r.height && r.left - 3 < o.left + o.width &&
            o.left - 3 < r.left + r.width) {
          clear = false;
        }
      }
      if (clear) f.rooms.push_back(r);
    }
    if (f.rooms.size() < 2) continue;
    std::sort(f.rooms.begin(), f.rooms.end(), [](const Room& a, const Room& b) { return a.left < b.left; });

    for (const Room& r : f.rooms) {
      for (int y = r.top - 1; y <= r.top + r.height; ++y) {
        for (int x = r.left - 1; x <= r.left + r.width; ++x) {
          f.tiles[index_of(f, {y, x})] = r.contains({y, x}) ? Tile::kFloor : Tile::kWall;
        }
      }
    }
    for (std::size_t i = 0; i + 1 < f.rooms.size(); ++i) {
      const Cell a = random_room_cell(rng, f.rooms[i]);
      const Cell b = random_room_cell(rng, f.rooms[i + 1]);
      const bool horizontal_first = rng.bernoulli(0.5);
      Cell c = a;
      auto walk_cols = [&] {
        while (c.col != b.col) {
          c.col += b.col > c.col ? 1 : -1;
          carve(f, c);
        }
      };
      auto walk_rows = [&] {
        while (c.row != b.row) {
          c.row += b.row > c.row ? 1 : -1;
          carve(f, c);
        }
      };
      if (horizontal_first) {
        walk_cols();
        walk_rows();
      } else {
        walk_rows();
        walk_cols();
      }
    }

    const int start_room = rng.uniform(static_cast<int>(f.rooms.size()));
    f.start = random_room_cell(rng, f.rooms[start_room]);
    std::vector<Cell> used{f.start};
    auto free_cell = [&](const Room& room) -> std::optional<Cell> {
      for (int t = 0; t < 50; ++t) {
        const Cell c = random_room_cell(rng, room);
        if (std::find(used.begin(), used.end(), c) == used.end() && f.tile(c) == Tile::kFloor) {
          used.push_back(c);
          return c;
        }
      }
      return std::nullopt;
    };

    if (depth + 1 < config.floors) {
      int stairs_room = rng.uniform(static_cast<int>(f.rooms.size()) - 1);
      if (stairs_room >= start_room) ++stairs_room;
      auto s = free_cell(f.rooms[stairs_room]);
      if (!s) continue;
      f.stairs = *s;
      f.tiles[index_of(f, *s)] = Tile::kStairs;
    }

    const int gold_piles = rng.uniform_range(config.gold_min, config.gold_max);
    bool placed = true;
    for (int g = 0; g < gold_piles && placed; ++g) {
      auto c = free_cell(f.rooms[rng.uniform(static_cast<int>(f.rooms.size()))]);
      if (!c) placed = false;
      else f.gold.push_back({*c, rng.uniform_range(5, 30), false});
    }
    const int monsters = rng.uniform_range(config.monsters_min, config.monsters_max);
    for (int m = 0; m < monsters && placed; ++m) {
      auto c = free_cell(f.rooms[rng.uniform(static_cast<int>(f.rooms.size()))]);
      const int max_kind = std::min(static_cast<int>(monster_kinds().size()) - 1, 2 + depth);
      if (!c) placed = false;
      else f.monsters.push_back({*c, rng.uniform(max_kind + 1), true});
    }
    if (!placed) continue;
    if (f.reachable_from_start() != f.walkable_count()) continue;
    return f;
  }
  fail(ErrorCode::kContractViolation, "crawler: floor generation did not produce a connected map");
}

DungeonFloor floor_for_seed(std::uint64_t seed, int depth, const Config& config) {
  Rng rng(mix_seed(seed, 0x666c6f6f72ULL + static_cast<std::uint64_t>(depth)));
  return generate_floor(rng, depth, config);
}

TaskSpec sample_task(Rng& rng, const Config& config) {
  TaskSpec t;
  t.kind = static_cast<TaskKind>(rng.uniform(kNumTasks));
  t.threshold = config.thresholds.for_task(t.kind);
  t.prompt = task_prompt(t.kind);
  return t;
}

// ---------------------------------------------------------------------------

CrawlerGame::CrawlerGame(Config config, Split split) : config_(config), split_(split), vocab_(build_vocabulary()) {
  config_.validate();
}

void CrawlerGame::set_task(TaskKind kind) {
  task_.kind = kind;
  task_.threshold = config_.thresholds.for_task(kind);
  task_.prompt = task_prompt(kind);
}

Observation CrawlerGame::reset(std::uint64_t seed) {
  const auto splits = default_seed_splits();
  if (split_for_seed(static_cast<std::int64_t>(seed), splits) != split_) {
    fail(ErrorCode::kInvalidArgument, "crawler: seed " + std::to_string(seed) + " is not in the " +
                                          split_name(split_) + " seed range");
  }
  seed_ = seed;
  Rng rng(mix_seed(seed, 0x7461736b));
  task_ = sample_task(rng, config_);
  state_ = State{};
  enter_floor(0);
  state_.feedback = "you enter the dungeon";
  done_ = false;
  return observe();
}

void CrawlerGame::enter_floor(int depth) {
  state_.depth = depth;
  state_.floors.push_back(floor_for_seed(seed_, depth, config_));
  const auto& f = state_.floors.back();
  state_.seen.emplace_back(f.tiles.size(), 0);
  state_.agent = f.start;
  reveal();
}

void CrawlerGame::reveal() {
  const auto& f = state_.floors[state_.depth];
  auto& seen = state_.seen[state_.depth];
  const int r = config_.visibility_radius;
  for (int dy = -r; dy <= r; ++dy) {
    for (int dx = -r; dx <= r; ++dx) {
      if (dy * dy + dx * dx > r * r) continue;
      const Cell c{state_.agent.row + dy, state_.agent.col + dx};
      if (!f.inside(c)) continue;
      auto& s = seen[index_of(f, c)];
      if (!s) {
        s = 1;
        ++state_.scouted;
      }
    }
  }
}

double CrawlerGame::metric(TaskKind kind) const {
  switch (kind) {
    case TaskKind::kScore: return state_.score;
    case TaskKind::kGold: return state_.gold;
    case TaskKind::kScout: return state_.scouted;
  }
  return 0;
}

StepResult CrawlerGame::step(int action) {
  if (done_) fail(ErrorCode::kBadState, "crawler: step after done");
  if (action < 0 || action >= kNumActions) {
    fail(ErrorCode::kInvalidArgument, "crawler: invalid action " + std::to_string(action));
  }
  auto& f = state_.floors[state_.depth];
  if (action < 8) {
    const Cell target{state_.agent.row + kDirs[action].row, state_.agent.col + kDirs[action].col};
    auto monster = std::find_if(f.monsters.begin(), f.monsters.end(),
                                [&](const Monster& m) { return m.alive && m.at == target; });
    if (!f.walkable(target)) {
      state_.feedback = "it is solid stone";
    } else if (monster != f.monsters.end()) {
      monster->alive = false;
      state_.score += monster_kinds()[monster->kind].points;
      ++state_.kills;
      state_.feedback = "you kill the " + monster_kinds()[monster->kind].name;
    } else {
      state_.agent = target;
      state_.feedback = "you move";
      for (auto& g : f.gold) {
        if (!g.taken && g.at == target) {
          g.taken = true;
          state_.gold += g.amount;
          state_.score += g.amount;
          state_.feedback = "you pick up " + std::to_string(g.amount) + " gold pieces";
        }
      }
      reveal();
    }
  } else if (action == kDescend) {
    if (f.tile(state_.agent) != Tile::kStairs) {
      state_.feedback = "you can not go down here";
    } else if (state_.depth + 1 >= config_.floors) {
      state_.feedback = "you can not descend any further";
    } else {
      state_.score += kDescendPoints;
      enter_floor(state_.depth + 1);
      state_.feedback = "you descend the stairs";
    }
  } else {
    state_.feedback = "you wait";
  }

  StepResult result;
  if (metric(task_.kind) > task_.threshold) {
    done_ = true;
    result.done = true;
    result.reward = 1.0;
    result.info.win = true;
  }
  result.info.stats = {{"score", static_cast<double>(state_.score)},
                       {"gold", static_cast<double>(state_.gold)},
                       {"scouted", static_cast<double>(state_.scouted)},
                       {"depth", static_cast<double>(state_.depth)}};
  result.observation = observe();
  return result;
}

Observation CrawlerGame::observe() const {
  const auto& f = state_.floors[state_.depth];
  const auto& seen = state_.seen[state_.depth];
  Observation obs;
  obs.grid = SymbolGrid(f.height, f.width, 1);
  const TokenId unseen = vocab_.id("unseen");
  std::array<TokenId, 6> tile_ids{};
  for (int t = 0; t < 6; ++t) tile_ids[t] = vocab_.id(tile_word(static_cast<Tile>(t)));
  for (std::size_t i = 0; i < f.tiles.size(); ++i) {
    obs.grid.cells[i] = seen[i] ? tile_ids[static_cast<int>(f.tiles[i])] : unseen;
  }
  const TokenId gold = vocab_.id("gold");
  for (const auto& g : f.gold) {
    if (!g.taken && seen[index_of(f, g.at)]) obs.grid.at(g.at.row, g.at.col) = gold;
  }
  for (const auto& m : f.monsters) {
    if (m.alive && seen[index_of(f, m.at)]) obs.grid.at(m.at.row, m.at.col) = vocab_.id(monster_kinds()[m.kind].name);
  }
  obs.grid.at(state_.agent.row, state_.agent.col) = vocab_.id("agent");

  const std::string stats = "depth " + std::to_string(state_.depth + 1) + " gold " + std::to_string(state_.gold) +
                            " score " + std::to_string(state_.score);
  obs.text = make_text_bundle(vocab_, {{"goal", task_.prompt}, {"stats", stats}, {"feedback", state_.feedback}});
  obs.relpos = relative_position(f.height, f.width, state_.agent);
  obs.actions = ActionSpaceDescriptor::fixed(kNumActions);
  obs.legend = legend_for(obs.grid, vocab_);
  obs.agent = state_.agent;
  return obs;
}

// ---------------------------------------------------------------------------

int GreedyExplorer::act(const CrawlerGame& game) {
  const auto& s = game.state();
  const auto& f = s.floors[s.depth];
  const auto& seen = s.seen[s.depth];
  const TaskKind kind = game.task().kind;
  auto known = [&](Cell c) { return f.inside(c) && seen[index_of(f, c)] != 0; };

  auto is_monster = [&](Cell c) {
    return std::any_of(f.monsters.begin(), f.monsters.end(), [&](const Monster& m) { return m.alive && m.at == c; });
  };
  auto is_gold = [&](Cell c) {
    return std::any_of(f.gold.begin(), f.gold.end(), [&](const GoldPile& g) { return !g.taken && g.at == c; });
  };
  auto is_frontier = [&](Cell c) {
    for (const Cell& d : kDirs) {
      const Cell n{c.row + d.row, c.col + d.col};
      if (f.inside(n) && !known(n)) return true;
    }
    return false;
  };
  const bool more_floors = s.depth + 1 < game.config().floors;
  auto is_stairs = [&](Cell c) { return more_floors && f.tile(c) == Tile::kStairs; };

  // BFS over known walkable cells; returns first move toward the nearest cell
  // satisfying `goal`, or -1.
  auto first_step_to = [&](auto goal) -> int {
    std::vector<int> first(f.tiles.size(), -2);
    std::deque<Cell> queue{s.agent};
    first[index_of(f, s.agent)] = -1;
    while (!queue.empty()) {
      const Cell c = queue.front();
      queue.pop_front();
      if (!(c == s.agent) && goal(c)) return first[index_of(f, c)];
      if (!(c == s.agent) && is_monster(c)) continue;  // attacking stops movement
      for (int a = 0; a < 8; ++a) {
        const Cell n{c.row + kDirs[a].row, c.col + kDirs[a].col};
        if (!known(n) || !f.walkable(n) || first[index_of(f, n)] != -2) continue;
        first[index_of(f, n)] = c == s.agent ? a : first[index_of(f, c)];
        queue.push_back(n);
      }
    }
    return -1;
  };

  auto head_for_stairs = [&]() -> int {
    if (is_stairs(s.agent)) return kDescend;
    return first_step_to(is_stairs);
  };

  int move = -1;
  switch (kind) {
    case TaskKind::kGold:
      move = first_step_to(is_gold);
      if (move < 0) move = first_step_to(is_frontier);
      if (move < 0) move = head_for_stairs();
      break;
    case TaskKind::kScore:
      move = first_step_to([&](Cell c) { return is_gold(c) || is_monster(c); });
      if (move < 0) move = head_for_stairs();
      if (move < 0) move = first_step_to(is_frontier);
      break;
    case TaskKind::kScout:
      move = first_step_to(is_frontier);
      if (move < 0) move = head_for_stairs();
      break;
  }
  return move < 0 ? kWait : move;
}

double explorer_median(TaskKind kind, int episodes, int steps, const Config& config) {
  Config unbounded = config;
  unbounded.thresholds = {1e18, 1e18, 1e18};
  std::vector<double> achieved;
  for (int e = 0; e < episodes; ++e) {
    CrawlerGame game(unbounded, Split::kTrain);
    game.reset(static_cast<std::uint64_t>(e));
    game.set_task(kind);
    GreedyExplorer explorer;
    for (int t = 0; t < steps; ++t) game.step(explorer.act(game));
    achieved.push_back(game.metric(kind));
  }
  std::sort(achieved.begin(), achieved.end());
  return achieved[(achieved.size() - 1) / 2];
}

}  // namespace silg::crawler
