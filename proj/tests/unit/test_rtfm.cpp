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

#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "oracles.hpp"
#include "silg/rtfm.hpp"

namespace silg::rtfm {
namespace {

using silg::testing::game_of;

std::vector<std::string> sentences_of(const std::string& manual) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : manual) {
    if (c == '.') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (cur.find_first_not_of(' ') != std::string::npos) out.push_back(cur);
  return out;
}

bool has_word(const std::string& sentence, const std::string& word) {
  const auto words = split_words(sentence);
  return std::find(words.begin(), words.end(), word) != words.end();
}

bool has_phrase(const std::string& sentence, const std::string& phrase) {
  return (" " + sentence + " ").find(" " + phrase + " ") != std::string::npos;
}

// Resolves the winning item's modifier from the observation alone: goal text
// -> team sentence -> on-map monster -> its element -> beat sentence.
std::string winning_modifier_from_text(const Observation& obs, const Vocabulary& vocab) {
  std::string manual, goal;
  for (int i = 0; i < obs.text.num_fields(); ++i) {
    if (obs.text.field_names[i] == "manual") manual = obs.text.field_text[i];
    if (obs.text.field_names[i] == "goal") goal = obs.text.field_text[i];
  }
  const std::string team = goal.substr(std::string("defeat the ").size());
  std::string team_sentence;
  for (const auto& s : sentences_of(manual)) {
    if (has_phrase(s, team)) team_sentence = s;
  }
  std::string element;
  for (int r = 0; r < obs.grid.height; ++r) {
    for (int c = 0; c < obs.grid.width; ++c) {
      const auto cell = obs.grid.cell(r, c);
      if (cell[1] == kPadId) continue;
      const std::string noun = vocab.word(cell[1]);
      const auto& ms = monster_names();
      if (std::find(ms.begin(), ms.end(), noun) != ms.end() && has_word(team_sentence, noun)) {
        element = vocab.word(cell[0]);
      }
    }
  }
  for (const auto& s : sentences_of(manual)) {
    if (!has_word(s, element)) continue;
    for (const auto& m : modifier_names()) {
      if (has_word(s, m)) return m;
    }
  }
  return "";
}

TEST(RtfmDynamics, WinningItemIsUnique) {
  Config cfg;
  Rng rng(3);
  for (int i = 0; i < 300; ++i) {
    const auto dyn = generate_dynamics(rng, Split::kTrain, cfg);
    ASSERT_NE(dyn.item_modifier[0], dyn.item_modifier[1]);
    const int target_element = dyn.monster_element[dyn.target_team];
    int winners = 0;
    for (int it = 0; it < 2; ++it) winners += dyn.beats[dyn.item_modifier[it]] == target_element ? 1 : 0;
    ASSERT_EQ(winners, 1);
    EXPECT_EQ(dyn.beats[dyn.item_modifier[dyn.winning_item]], target_element);
  }
}

TEST(RtfmDynamics, TeamsDisjointAndBeatTableBijective) {
  Config cfg;
  Rng rng(4);
  for (int i = 0; i < 200; ++i) {
    const auto dyn = generate_dynamics(rng, Split::kVal, cfg);
    std::set<int> all(dyn.teams[0].begin(), dyn.teams[0].end());
    for (int m : dyn.teams[1]) EXPECT_TRUE(all.insert(m).second);
    EXPECT_EQ(std::set<int>(dyn.beats.begin(), dyn.beats.end()).size(), dyn.beats.size());
    EXPECT_EQ(split_for_hash(dyn.rule_hash()), Split::kVal);
  }
}

TEST(RtfmDynamics, FixedSeedIsDeterministic) {
  Rng a(42), b(42);
  const auto da = generate_dynamics(a, Split::kTrain, Config{});
  const auto db = generate_dynamics(b, Split::kTrain, Config{});
  EXPECT_EQ(da.rule_hash(), db.rule_hash());
  EXPECT_EQ(da.monster_name, db.monster_name);
  EXPECT_EQ(da.item_modifier, db.item_modifier);
}

TEST(RtfmDynamics, TrainAndValTuplesDisjoint) {
  std::set<std::uint64_t> train, val;
  Rng rng(9);
  for (int i = 0; i < 500; ++i) {
    train.insert(generate_dynamics(rng, Split::kTrain, Config{}).rule_hash());
    val.insert(generate_dynamics(rng, Split::kVal, Config{}).rule_hash());
  }
  for (auto h : val) EXPECT_EQ(train.count(h), 0u);
}

TEST(RtfmManual, GoalTemplate) {
  auto env = make_env("rtfm", Split::kTrain, 0);
  bool saw_rebel = false;
  for (std::uint64_t s = 0; s < 40 && !saw_rebel; ++s) {
    env->reset(s);
    const auto& g = game_of<RtfmGame>(*env);
    if (g.dynamics().target_team != 0) continue;
    const auto& obs = env->observation();
    EXPECT_EQ(obs.text.field_text[1], "defeat the rebel enclave");
    saw_rebel = true;
  }
  EXPECT_TRUE(saw_rebel);
}

TEST(RtfmManual, EveryOnMapMonsterTeamMentionedOnce) {
  auto env = make_env("rtfm", Split::kTrain, 0);
  for (std::uint64_t s = 0; s < 100; ++s) {
    env->reset(s);
    const auto& g = game_of<RtfmGame>(*env);
    for (int slot = 0; slot < kNumTeams; ++slot) {
      const auto& name = monster_names()[g.dynamics().monster_name[slot]];
      int mentions = 0;
      for (const auto& sentence : g.manual_sentences()) mentions += has_word(sentence, name) ? 1 : 0;
      EXPECT_EQ(mentions, 1) << name;
    }
  }
}

TEST(RtfmManual, MeanJointLengthInBand) {
  auto env = make_env("rtfm", Split::kTrain, 0);
  double total = 0;
  const int n = 1000;
  for (int s = 0; s < n; ++s) total += static_cast<double>(env->reset(s).text.joint.size());
  const double mean = total / n;
  EXPECT_GE(mean, 20.0);
  EXPECT_LE(mean, 45.0);
}

TEST(RtfmManual, TextOracleAgreesWithResolver) {
  auto env = make_env("rtfm", Split::kTrain, 0);
  for (std::uint64_t s = 0; s < 300; ++s) {
    const auto& obs = env->reset(s);
    const auto& g = game_of<RtfmGame>(*env);
    const auto res = resolve_target(g.dynamics());
    const std::string want = modifier_names()[g.dynamics().item_modifier[res.winning_item]];
    ASSERT_EQ(winning_modifier_from_text(obs, env->vocabulary()), want) << "seed " << s;
    EXPECT_EQ(res.winning_item, g.dynamics().winning_item);
  }
}

State two_monster_state(const Dynamics& dyn) {
  State st;
  st.agent = {2, 2};
  st.monsters[dyn.target_team] = {2, 3};
  st.monsters[1 - dyn.target_team] = {5, 5};
  st.items = {Cell{0, 0}, Cell{0, 5}};
  return st;
}

TEST(RtfmStep, WinAndLossRules) {
  Config cfg;
  cfg.chase_period = 0;
  Rng rng(1);
  const auto dyn = generate_dynamics(rng, Split::kTrain, cfg);

  State win = two_monster_state(dyn);
  win.inventory = dyn.winning_item;
  win.items[dyn.winning_item].reset();
  EXPECT_EQ(advance(dyn, cfg, win, 3), Outcome::kWin);

  State empty = two_monster_state(dyn);
  EXPECT_EQ(advance(dyn, cfg, empty, 3), Outcome::kLoss);

  State wrong = two_monster_state(dyn);
  wrong.inventory = 1 - dyn.winning_item;
  wrong.items[1 - dyn.winning_item].reset();
  EXPECT_EQ(advance(dyn, cfg, wrong, 3), Outcome::kLoss);

  // Right item, wrong team.
  State distractor = two_monster_state(dyn);
  std::swap(distractor.monsters[0], distractor.monsters[1]);
  distractor.inventory = dyn.winning_item;
  distractor.items[dyn.winning_item].reset();
  EXPECT_EQ(advance(dyn, cfg, distractor, 3), Outcome::kLoss);
}

TEST(RtfmStep, WallsClampAndItemsSwap) {
  Config cfg;
  cfg.chase_period = 0;
  Rng rng(2);
  const auto dyn = generate_dynamics(rng, Split::kTrain, cfg);
  State st;
  st.agent = {0, 1};
  st.monsters = {Cell{5, 5}, Cell{5, 0}};
  st.items = {Cell{0, 0}, Cell{0, 2}};
  EXPECT_EQ(advance(dyn, cfg, st, 0), Outcome::kNone);  // up into the wall
  EXPECT_EQ(st.agent, (Cell{0, 1}));
  advance(dyn, cfg, st, 2);  // onto item 0
  EXPECT_EQ(st.inventory, 0);
  EXPECT_FALSE(st.items[0].has_value());
  advance(dyn, cfg, st, 3);
  advance(dyn, cfg, st, 3);  // onto item 1, dropping item 0 there
  EXPECT_EQ(st.inventory, 1);
  EXPECT_EQ(st.items[0], (Cell{0, 2}));
}

TEST(RtfmStep, ChaseKeepsOneEntityPerCell) {
  auto env = make_env("rtfm", Split::kTrain, 0);
  Rng rng(8);
  for (int ep = 0; ep < 200; ++ep) {
    env->reset(ep);
    while (!env->done()) {
      env->step(rng.uniform(5));
      if (env->done()) break;
      // The agent may stand on the item it just dropped; nothing else shares.
      const auto& st = game_of<RtfmGame>(*env).state();
      std::set<Cell> cells{st.monsters[0], st.monsters[1]};
      std::size_t expected = 2;
      for (const auto& it : st.items) {
        if (it) {
          cells.insert(*it);
          ++expected;
        }
      }
      ASSERT_EQ(cells.size(), expected);
      ASSERT_EQ(cells.count(st.agent) > 0, std::count(st.items.begin(), st.items.end(), st.agent) > 0);
    }
  }
}

TEST(RtfmOracle, EmptyGridPath) { EXPECT_EQ(grid_path_length(6, 6, {0, 0}, {5, 5}), 10); }

TEST(RtfmOracle, WinsTrainAndVal) {
  for (Split split : {Split::kTrain, Split::kVal}) {
    auto env = make_env("rtfm", split, 0);
    for (int ep = 0; ep < 60; ++ep) {
      env->reset(static_cast<std::uint64_t>(split_base_seed(split)) + ep);
      const auto out = silg::testing::play_episode(*env, silg::testing::rtfm_oracle_action);
      ASSERT_TRUE(out.win) << split_name(split) << " episode " << ep;
      EXPECT_LE(out.steps, 32);
    }
  }
}

TEST(RtfmConfig, Overrides) {
  auto env = make_env("rtfm", Split::kTrain, 0,
                      {{"height", "4"}, {"width", "4"}, {"monster_pool", "4"}, {"monsters_per_team", "2"},
                       {"modifiers", "2"}});
  const auto& obs = env->reset(0);
  EXPECT_EQ(obs.grid.height, 4);
  EXPECT_EQ(obs.grid.width, 4);
  EXPECT_EQ(obs.grid.words_per_cell, 2);
  EXPECT_THROW(make_env("rtfm", Split::kTrain, 0, {{"modifiers", "9"}}), Error);
}

}  // namespace
}  // namespace silg::rtfm
