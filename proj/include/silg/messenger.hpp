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

namespace silg::messenger {

enum Role { kMessage = 0, kGoal = 1, kEnemy = 2 };
inline constexpr int kNumRoles = 3;

struct Config {
  int size = 10;
  int pool = 12;
  int synonyms = 3;
  int min_spawn_distance = 3;
  int horizon = 16;

  static Config from_overrides(OverrideReader& reader);
  void validate() const;
};

// entity[role] = pool index.
struct RoleAssignment {
  std::array<int, kNumRoles> entity{};
  friend bool operator==(const RoleAssignment&, const RoleAssignment&) = default;
  friend auto operator<=>(const RoleAssignment&, const RoleAssignment&) = default;
};

struct Entity {
  std::string symbol;                 // grid word, e.g. "e3"
  std::vector<std::string> synonyms;  // text references
};

const std::vector<Entity>& entity_pool();

// Which split an (entity, role) pair belongs to. An assignment belongs to a
// split iff all three of its pairs do, so train and eval never share a pair.
Split pair_split(int entity, Role role, int pool = 12);

RoleAssignment sample_assignment(Rng& rng, Split split, const Config& config);

// One sentence per role using a random synonym and template, shuffled into
// fields text1..text3; joint text is their concatenation.
TextBundle compose_manual(const RoleAssignment& assignment, const Config& config, Rng& rng,
                          const Vocabulary& vocab);

const std::vector<std::string>& role_templates(Role role);

struct State {
  Cell agent;
  std::array<Cell, kNumRoles> entities{};  // indexed by role
  bool has_message = false;
};

enum class Outcome { kNone, kWin, kLoss };

Outcome advance(const Config& config, State& state, int action);

// Shortest plan: message, then goal, never touching the enemy.
std::vector<int> oracle_solve(const Config& config, const State& state);

class MessengerGame final : public Game {
 public:
  MessengerGame(Config config, Split split);

  std::string_view name() const override { return "messenger"; }
  const Vocabulary& vocabulary() const override { return vocab_; }
  Observation reset(std::uint64_t seed) override;
  StepResult step(int action) override;
  int default_step_limit() const override { return 16; }
  std::vector<std::string> action_names() const override { return {"up", "down", "left", "right", "stay"}; }

  const RoleAssignment& assignment() const { return assignment_; }
  const State& state() const { return state_; }
  const Config& config() const { return config_; }

 private:
  Observation observe() const;

  Config config_;
  Split split_;
  Vocabulary vocab_;
  RoleAssignment assignment_;
  State state_;
  TextBundle text_;
  bool done_ = false;
};

}  // namespace silg::messenger
