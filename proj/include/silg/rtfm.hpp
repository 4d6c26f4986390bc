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
#include <optional>
#include <string>
#include <vector>

#include "silg/env.hpp"

namespace silg::rtfm {

// Sizes of the procedural pools. Elements and modifiers share one count
// because the beat table is a bijection between them.
struct Config {
  int height = 6;
  int width = 6;
  int monster_pool = 6;
  int monsters_per_team = 3;
  int modifiers = 4;
  int item_nouns = 6;
  int chase_period = 2;  // monsters step toward the agent every n-th step; 0 disables
  int horizon = 32;      // generated episodes must be winnable within this many steps

  static Config from_overrides(OverrideReader& reader);
  void validate() const;
};

inline constexpr int kNumTeams = 2;

// Per-episode rules: team rosters, the beat table and the on-map cast.
struct Dynamics {
  std::array<std::vector<int>, kNumTeams> teams;  // monster-name indices, sorted
  std::vector<int> beats;                         // beats[modifier] = element it defeats
  int target_team = 0;

  std::array<int, kNumTeams> monster_name{};     // slot t holds a monster from team t
  std::array<int, kNumTeams> monster_element{};
  std::array<int, 2> item_modifier{};
  std::array<int, 2> item_noun{};
  int winning_item = 0;

  // Canonical (rosters, beat table, target team) tuple hash used for splits.
  std::uint64_t rule_hash() const;
};

struct State {
  Cell agent;
  std::array<Cell, kNumTeams> monsters{};
  std::array<std::optional<Cell>, 2> items;  // nullopt while held
  std::optional<int> inventory;              // item index
  int steps = 0;

  std::uint64_t key() const;
};

enum class Outcome { kNone, kWin, kLoss };

// Word pools; exposed so tests can build independent oracles.
const std::vector<std::string>& team_names();
const std::vector<std::string>& monster_names();
const std::vector<std::string>& element_names();
const std::vector<std::string>& modifier_names();
const std::vector<std::string>& item_noun_names();

Dynamics generate_dynamics(Rng& rng, Split split, const Config& config);

// manual / goal / inventory fields.
TextBundle compose_manual(const Dynamics& dyn, const State& state, const Vocabulary& vocab,
                          const std::vector<std::string>& manual_sentences);

// Draws the paraphrased manual sentences for an episode.
std::vector<std::string> draw_manual_sentences(const Dynamics& dyn, Rng& rng, const Config& config);

// Pure transition: applies an action and, on chase steps, monster moves.
Outcome advance(const Dynamics& dyn, const Config& config, State& state, int action);

// Shortest 4-connected path length on an empty grid, or -1 when unreachable.
int grid_path_length(int height, int width, Cell from, Cell to, const std::vector<Cell>& blocked = {});

struct Resolution {
  int target_monster = 0;  // slot index on the map
  int winning_item = 0;    // item index
};

// goal -> team -> on-map monster -> element -> beating modifier -> item.
Resolution resolve_target(const Dynamics& dyn);

// Shortest winning action sequence from `state`, or empty if none within
// `horizon - state.steps` steps.
std::vector<int> oracle_solve(const Dynamics& dyn, const Config& config, const State& state);

class RtfmGame final : public Game {
 public:
  explicit RtfmGame(Config config, Split split);

  std::string_view name() const override { return "rtfm"; }
  const Vocabulary& vocabulary() const override { return vocab_; }
  Observation reset(std::uint64_t seed) override;
  StepResult step(int action) override;
  int default_step_limit() const override { return 32; }
  std::vector<std::string> action_names() const override { return {"up", "down", "left", "right", "stay"}; }

  const Dynamics& dynamics() const { return dyn_; }
  const State& state() const { return state_; }
  const Config& config() const { return config_; }
  const std::vector<std::string>& manual_sentences() const { return sentences_; }

 private:
  Observation observe() const;

  Config config_;
  Split split_;
  Vocabulary vocab_;
  Dynamics dyn_;
  State state_;
  std::vector<std::string> sentences_;
  bool done_ = false;
};

}  // namespace silg::rtfm
