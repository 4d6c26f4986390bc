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

#include <optional>
#include <string>
#include <vector>

#include "silg/env.hpp"

namespace silg::textchoice {

inline constexpr int kGridHeight = 12;
inline constexpr int kGridWidth = 16;
inline constexpr int kWordsPerCell = 4;

enum class Regime { kNewInstructions, kNewLayouts };

struct Config {
  Regime regime = Regime::kNewInstructions;
  int objects_min = 16;
  int objects_max = 24;
  double clean_weight = 0.5;  // probability of the clean-then-put family

  static Config from_overrides(OverrideReader& reader);
  void validate() const;
};

enum class Family { kPut = 0, kCleanThenPut = 1 };

struct ReceptacleType {
  std::string noun;  // may be several words, e.g. "metal rack"
  bool inside = false;  // "in" rather than "on" in goal text
};

const std::vector<ReceptacleType>& receptacle_types();

struct ObjectType {
  std::string noun;
  bool cleanable = false;
};

const std::vector<ObjectType>& object_types();

struct Receptacle {
  int type = 0;
  int number = 1;
};

// A room layout is a fixed set of receptacles. Layouts 0..11 form pool A
// (training and new-instruction evaluation) and 12..15 pool B (new layouts).
struct Layout {
  std::vector<Receptacle> receptacles;
};

inline constexpr int kPoolA = 12;
inline constexpr int kPoolB = 4;

const std::vector<Layout>& layouts();

struct Object {
  int type = 0;
  int number = 1;
  bool clean = true;
  int location = -1;  // receptacle index, or -1 while held
};

struct Goal {
  Family family = Family::kPut;
  int object_type = 0;
  int receptacle_type = 0;

  std::uint64_t triple_hash() const;
  friend bool operator==(const Goal&, const Goal&) = default;
  friend auto operator<=>(const Goal&, const Goal&) = default;
};

struct Scene {
  int layout = 0;
  std::vector<Receptacle> receptacles;
  std::vector<Object> objects;
};

struct State {
  Scene scene;
  int location = -1;              // receptacle index, -1 = middle of the room
  std::optional<int> holding;     // object index
};

std::string receptacle_name(const Receptacle& r);
std::string object_name(const Object& o);
std::string goal_text(const Goal& goal);

// Layout indices that a split regime draws from.
std::vector<int> layout_pool(Split split, Regime regime);

// Draws a goal whose triple routes to `split` and a scene from the regime's
// layout pool in which the goal is satisfiable but not already satisfied.
std::pair<Scene, Goal> generate_scene(Rng& rng, Split split, const Config& config);

// Valid commands in canonical order:
//   look, inventory, go to R (R != here), examine R,
//   take O from R (here, hands empty), put O in/on R (here, holding),
//   clean O with sink 1 (at sink 1, holding).
std::vector<std::string> valid_commands(const State& state);

bool goal_satisfied(const State& state, const Goal& goal);

// Applies one command string; returns the feedback text. Unknown commands
// are a contract violation.
std::string apply_command(State& state, const std::string& command);

// Scripted solver: returns the command sequence reaching the goal.
std::vector<std::string> plan(const State& state, const Goal& goal);

// Projects item names row-major into a 12x16 grid, k=4 words per cell.
// More than 192 items is a contract violation.
SymbolGrid grid_projection(const std::vector<std::string>& items, const Vocabulary& vocab);

// Inverse of grid_projection via the vocabulary.
std::vector<std::string> grid_items(const SymbolGrid& grid, const Vocabulary& vocab);

// Names listed in the grid: receptacles in layout order, then objects.
std::vector<std::string> scene_items(const Scene& scene);

class TextChoiceGame final : public Game {
 public:
  TextChoiceGame(Config config, Split split);

  std::string_view name() const override { return "textchoice"; }
  const Vocabulary& vocabulary() const override { return vocab_; }
  Observation reset(std::uint64_t seed) override;
  StepResult step(int action) override;
  int default_step_limit() const override { return 32; }

  const State& state() const { return state_; }
  const Goal& goal() const { return goal_; }
  const std::vector<std::string>& commands() const { return commands_; }

 private:
  Observation observe() const;

  Config config_;
  Split split_;
  Vocabulary vocab_;
  State state_;
  Goal goal_;
  std::string feedback_;
  std::vector<std::string> commands_;
  bool done_ = false;
};

}  // namespace silg::textchoice
