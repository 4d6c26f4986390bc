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
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "silg/core.hpp"

namespace silg {

// An environment's own dynamics. Rewards returned by `step` are raw (no step
// penalty); step counting and the step limit belong to `Environment`.
class Game {
 public:
  virtual ~Game() = default;

  virtual std::string_view name() const = 0;
  virtual const Vocabulary& vocabulary() const = 0;
  virtual Observation reset(std::uint64_t seed) = 0;
  virtual StepResult step(int action) = 0;
  virtual int default_step_limit() const = 0;
  // Reward assigned when the step limit ends the episode.
  virtual double limit_reward() const { return -1.0; }
  // Human-readable action labels for fixed action spaces.
  virtual std::vector<std::string> action_names() const { return {}; }
};

// Unified environment: owns a game, counts steps, applies the step penalty
// and the step limit, and rejects steps after the episode is done.
class Environment {
 public:
  Environment(std::unique_ptr<Game> game, Split split, std::uint64_t seed, WrapOptions options);

  std::string_view id() const { return id_; }
  Split split() const { return split_; }
  const WrapOptions& options() const { return options_; }

  // Resets with an explicit seed.
  const Observation& reset(std::uint64_t seed);
  // Resets with the construction seed, then seed+1, seed+2, ... on later calls.
  const Observation& reset();

  StepResult step(int action);

  const Observation& observation() const;
  bool done() const { return done_; }
  int steps() const { return steps_; }
  std::uint64_t episode_seed() const { return episode_seed_; }
  const Vocabulary& vocabulary() const { return game_->vocabulary(); }
  std::vector<std::string> action_names() const { return game_->action_names(); }
  Game& game() { return *game_; }
  const Game& game() const { return *game_; }

 private:
  friend std::unique_ptr<Environment> make_env(std::string_view, Split, std::uint64_t, const Overrides&);

  std::string id_;
  std::unique_ptr<Game> game_;
  Split split_;
  std::uint64_t next_seed_;
  std::uint64_t episode_seed_ = 0;
  WrapOptions options_;
  Observation current_;
  bool has_episode_ = false;
  bool done_ = false;
  int steps_ = 0;
};

// Registered ids: rtfm, messenger, crawler, textchoice, navgraph, navgraph_manual.
// Common override keys: time_penalty, step_limit. Remaining keys are
// environment-specific; unknown keys are rejected.
std::unique_ptr<Environment> make_env(std::string_view id, Split split, std::uint64_t seed,
                                      const Overrides& overrides = {});

std::vector<std::string> registered_envs();

// Glyph drawn for cells whose symbol is "unseen" (fog of war).
inline constexpr std::string_view kUnseenGlyph = "~~";

// Renders an observation for the console: grid with legend, then text fields.
std::string render_observation(const Observation& obs, const std::vector<std::string>& action_names = {});

}  // namespace silg
