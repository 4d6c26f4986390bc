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

#include <array>
#include <string>
#include <vector>

#include "silg/env.hpp"

namespace silg::crawler {

enum class Tile : std::uint8_t { kStone, kWall, kFloor, kCorridor, kDoor, kStairs };

enum class TaskKind { kScore = 0, kGold = 1, kScout = 2 };
inline constexpr int kNumTasks = 3;

const char* task_name(TaskKind kind);

// Achievement thresholds. An episode is won when the task's metric strictly
// exceeds its threshold. Defaults are the median achievement of
// `GreedyExplorer` over train seeds 0..99 within 64 steps; a unit test
// recomputes them.
struct Thresholds {
  double score = 0;
  double gold = 0;
  double scout = 0;
  double for_task(TaskKind kind) const;
};

Thresholds default_thresholds();

struct Config {
  int height = 21;
  int width = 79;
  int floors = 3;
  int gold_min = 2;
  int gold_max = 6;
  int monsters_min = 2;
  int monsters_max = 5;
  int visibility_radius = 2;
  Thresholds thresholds = default_thresholds();

  static Config from_overrides(OverrideReader& reader);
  void validate() const;
};

struct Room {
  int top = 0, left = 0, height = 0, width = 0;
  bool contains(Cell c) const {
    return c.row >= top && c.row < top + height && c.col >= left && c.col < left + width;
  }
};

struct Monster {
  Cell at;
  int kind = 0;  // index into monster_kinds()
  bool alive = true;
};

struct GoldPile {
  Cell at;
  int amount = 0;
  bool taken = false;
};

struct DungeonFloor {
  int height = 0;
  int width = 0;
  std::vector<Tile> tiles;
  std::vector<Room> rooms;
  std::vector<Monster> monsters;
  std::vector<GoldPile> gold;
  std::optional<Cell> stairs;
  Cell start;

  Tile tile(Cell c) const { return tiles[static_cast<std::size_t>(c.row) * width + c.col]; }
  bool walkable(Cell c) const;
  bool inside(Cell c) const { return c.row >= 0 && c.col >= 0 && c.row < height && c.col < width; }
  // Cells reachable from `start` by 8-connected moves over walkable tiles.
  int reachable_from_start() const;
  int walkable_count() const;
};

struct MonsterKind {
  std::string name;
  int points;
};
const std::vector<MonsterKind>& monster_kinds();

DungeonFloor generate_floor(Rng& rng, int depth, const Config& config);

// Floor for a given episode seed and depth; identical inputs give identical floors.
DungeonFloor floor_for_seed(std::uint64_t seed, int depth, const Config& config);

struct TaskSpec {
  TaskKind kind = TaskKind::kScore;
  double threshold = 1;
  std::string prompt;
};

TaskSpec sample_task(Rng& rng, const Config& config);

std::string task_prompt(TaskKind kind);

struct State {
  int depth = 0;
  Cell agent;
  std::vector<DungeonFloor> floors;  // floors visited so far
  std::vector<std::vector<std::uint8_t>> seen;  // fog-of-war per floor
  int score = 0;
  int gold = 0;
  int scouted = 0;
  int kills = 0;
  std::string feedback;
};

// Actions: 0..7 = N, S, W, E, NW, NE, SW, SE; 8 = descend; 9 = wait.
inline constexpr int kNumActions = 10;
inline constexpr int kDescend = 8;
inline constexpr int kWait = 9;
const std::vector<std::string>& action_labels();
Cell action_delta(int action);

class CrawlerGame final : public Game {
 public:
  CrawlerGame(Config config, Split split);

  std::string_view name() const override { return "crawler"; }
  const Vocabulary& vocabulary() const override { return vocab_; }
  Observation reset(std::uint64_t seed) override;
  StepResult step(int action) override;
  int default_step_limit() const override { return 64; }
  std::vector<std::string> action_names() const override { return action_labels(); }

  const State& state() const { return state_; }
  const TaskSpec& task() const { return task_; }
  const Config& config() const { return config_; }
  double metric(TaskKind kind) const;
  // Replaces the sampled task after reset; used for threshold calibration.
  void set_task(TaskKind kind);

 private:
  void reveal();
  void enter_floor(int depth);
  Observation observe() const;

  Config config_;
  Split split_;
  Vocabulary vocab_;
  std::uint64_t seed_ = 0;
  TaskSpec task_;
  State state_;
  bool done_ = false;
};

// Scripted explorer used to derive task thresholds. It sees only revealed
// cells, like a player.
class GreedyExplorer {
 public:
  int act(const CrawlerGame& game);
};

// Median achievement of GreedyExplorer for `kind` over `episodes` train seeds
// within `steps` steps.
double explorer_median(TaskKind kind, int episodes, int steps, const Config& config);

}  // namespace silg::crawler
