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

#include "oracles.hpp"
#include "silg/navgraph.hpp"

namespace silg::navgraph {
namespace {

using silg::testing::game_of;

// Direct histogram argmax with smallest-id tie-break; class 0 never votes.
int majority(const std::vector<int>& cells) {
  std::map<int, int> hist;
  for (int c : cells) {
    if (c != kVoid) ++hist[c];
  }
  int best = kVoid, count = 0;
  for (const auto& [c, n] : hist) {
    if (n > count) {
      best = c;
      count = n;
    }
  }
  return best;
}

TEST(Downsample, UniformPatch) {
  SegMap m{4, 4, std::vector<int>(16, 7)};
  const auto out = downsample(m, 4, std::vector<double>(kNumClasses, 1.0), 1.0);
  ASSERT_EQ(out.height, 1);
  EXPECT_EQ(out.classes[0], 7);
}

TEST(Downsample, AlphaZeroIsMajority) {
  Rng rng(23);
  std::vector<double> freq(kNumClasses);
  for (auto& f : freq) f = 1.0 + rng.uniform(10000);
  for (int t = 0; t < 100; ++t) {
    SegMap m{23, 23, std::vector<int>(23 * 23)};
    for (auto& c : m.classes) c = 1 + rng.uniform(kNumClasses - 1);
    EXPECT_EQ(downsample(m, 23, freq, 0.0).classes[0], majority(m.classes));
  }
}

TEST(Downsample, InverseFrequencyWorkedExample) {
  // 400 cells of class A (f = 10000) against 129 of class B (f = 500).
  const int a = kRoad, b = kTrafficLight;
  SegMap m{23, 23, std::vector<int>(23 * 23, a)};
  for (int i = 0; i < 129; ++i) m.classes[i] = b;
  std::vector<double> freq(kNumClasses, 1.0);
  freq[a] = 10000;
  freq[b] = 500;
  EXPECT_EQ(downsample(m, 23, freq, 1.0).classes[0], b);
  EXPECT_EQ(downsample(m, 23, freq, 0.0).classes[0], a);
}

TEST(Downsample, TiesGoToSmallerIdAndPaddingDoesNotVote) {
  SegMap tie{2, 2, {kCar, kTree, kCar, kTree}};
  EXPECT_EQ(downsample(tie, 2, std::vector<double>(kNumClasses, 1.0), 1.0).classes[0], kTree);
  SegMap ragged{3, 3, std::vector<int>(9, kSky)};
  const auto out = downsample(ragged, 2, std::vector<double>(kNumClasses, 1.0), 1.0);
  EXPECT_EQ(out.height, 2);
  EXPECT_EQ(out.width, 2);
  for (int c : out.classes) EXPECT_EQ(c, kSky);
  EXPECT_THROW(downsample(SegMap{}, 2, std::vector<double>(kNumClasses, 1.0), 1.0), Error);
}

TEST(Heading, ColumnExamples) {
  EXPECT_EQ(heading_to_column(30, 100), 8);
  EXPECT_EQ(heading_to_column(0, 100), 0);
  EXPECT_EQ(heading_to_column(180, 128), 64);
  EXPECT_EQ(heading_to_column(359.999, 100), 99);
}

TEST(Heading, RelposExamples) {
  const auto z = relpos_heading(2, 100, 10);
  EXPECT_DOUBLE_EQ(z.at(0, 10, 0), 0.0);
  EXPECT_DOUBLE_EQ(z.at(1, 60, 0), 0.5);
  EXPECT_DOUBLE_EQ(relpos_heading(2, 100, 90).at(0, 10, 0), 0.2);
  EXPECT_DOUBLE_EQ(z.at(1, 60, 1), 0.0);
}

TEST(ShapedReward, Examples) {
  EXPECT_EQ(shaped_reward(5, 4, 1.0), 1.0);
  EXPECT_EQ(shaped_reward(3, 4, 1.0), -1.0);
  EXPECT_EQ(shaped_reward(3, 3, 2.5), 0.0);
}

TEST(ShapedReward, TelescopesOnRandomPaths) {
  const auto graph = shared_graph(GraphConfig{});
  Rng rng(44);
  for (int t = 0; t < 100; ++t) {
    const int goal = rng.uniform(graph->num_nodes());
    const auto dist = graph->distances_to(goal);
    int node = rng.uniform(graph->num_nodes());
    const int start = node;
    double sum = 0;
    for (int hop = 0; hop < 12; ++hop) {
      const int next = rng.pick(graph->adjacency[node]);
      sum += shaped_reward(dist[node], dist[next], 0.5);
      node = next;
    }
    EXPECT_EQ(sum, 0.5 * (dist[start] - dist[node]));
  }
}

TEST(Graph, InvariantsHold) {
  const auto g = shared_graph(GraphConfig{});
  EXPECT_TRUE(g->connected());
  EXPECT_GE(g->num_nodes(), 150);
  for (int v = 0; v < g->num_nodes(); ++v) {
    EXPECT_GE(g->adjacency[v].size(), 1u);
    EXPECT_LE(g->adjacency[v].size(), 5u);
    std::set<int> cols;
    for (int w : g->adjacency[v]) cols.insert(g->edge_column(v, w));
    EXPECT_EQ(cols.size(), g->adjacency[v].size());
    EXPECT_EQ(g->panoramas[v].height, 24);
    EXPECT_EQ(g->panoramas[v].width, 100);
  }
}

TEST(Graph, ArchiveRoundTrip) {
  const auto g = shared_graph(GraphConfig{});
  const std::string text = export_archive(*g);
  const NavGraph back = import_archive(text);
  EXPECT_EQ(export_archive(back), text);
  EXPECT_THROW(import_archive("{\"format\":\"other\"}"), Error);
  EXPECT_THROW(import_archive("not json"), Error);
}

TEST(Graph, ShortestPathIsShortest) {
  const auto g = shared_graph(GraphConfig{});
  Rng rng(3);
  for (int t = 0; t < 50; ++t) {
    const int a = rng.uniform(g->num_nodes()), b = rng.uniform(g->num_nodes());
    const auto path = shortest_path(*g, a, b);
    ASSERT_EQ(static_cast<int>(path.size()) - 1, g->distances_to(b)[a]);
    EXPECT_EQ(path.front(), a);
    EXPECT_EQ(path.back(), b);
  }
}

TEST(Instances, InstructionSplitDisjoint) {
  const auto g = shared_graph(GraphConfig{});
  Rng rng(5);
  std::set<std::uint64_t> train;
  for (int i = 0; i < 500; ++i) train.insert(sample_instance(*g, rng, Split::kTrain, Config{}).instruction_hash());
  for (int i = 0; i < 500; ++i) {
    const auto inst = sample_instance(*g, rng, Split::kTest, Config{});
    EXPECT_EQ(train.count(inst.instruction_hash()), 0u);
    EXPECT_GE(inst.landmarks.size(), inst.turns.size());
  }
}

TEST(NavStep, GoldPathEarnsPositiveShapingAndWins) {
  auto env = make_env("navgraph", Split::kTrain, 0);
  for (int ep = 0; ep < 50; ++ep) {
    env->reset(ep);
    while (!env->done()) {
      const auto r = env->step(silg::testing::navgraph_gold_action(*env));
      if (!r.done) EXPECT_GT(r.info.raw_reward, 0.0);
      else EXPECT_TRUE(r.info.win);
    }
  }
}

TEST(NavStep, ActionColumnsHaveOneToFiveEntries) {
  auto env = make_env("navgraph", Split::kTrain, 0);
  Rng rng(9);
  for (int ep = 0; ep < 50; ++ep) {
    env->reset(ep);
    while (!env->done()) {
      const auto& a = env->observation().actions;
      ASSERT_EQ(a.kind, ActionKind::kNavCoordinates);
      ASSERT_GE(a.columns.size(), 1u);
      ASSERT_LE(a.columns.size(), 5u);
      EXPECT_FALSE(a.stop_option);
      env->step(rng.uniform(a.arity()));
    }
  }
}

TEST(NavStep, ManualStopSemantics) {
  auto env = make_env("navgraph_manual", Split::kTrain, 0);
  env->reset(1);
  const auto& a = env->observation().actions;
  ASSERT_TRUE(a.stop_option);
  const auto early = env->step(static_cast<int>(a.columns.size()));
  EXPECT_TRUE(early.done);
  EXPECT_EQ(early.reward, -1.0);
  EXPECT_FALSE(early.info.win);

  env->reset(2);
  const auto out = silg::testing::play_episode(*env, silg::testing::navgraph_gold_action);
  EXPECT_TRUE(out.win);
}

TEST(NavStep, ArrivingWithoutStopDoesNotEndManualEpisode) {
  auto env = make_env("navgraph_manual", Split::kTrain, 0);
  env->reset(4);
  auto& g = game_of<NavGame>(*env);
  while (g.node() != g.instance().goal) {
    const auto r = env->step(g.gold_action());
    ASSERT_FALSE(r.done);
  }
  EXPECT_FALSE(env->done());
}

}  // namespace
}  // namespace silg::navgraph
