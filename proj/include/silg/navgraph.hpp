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

#include <memory>
#include <string>
#include <vector>

#include "silg/env.hpp"

namespace silg::navgraph {

// Landmark classes. Id 0 is reserved for padding and never wins a vote.
enum ClassId : int {
  kVoid = 0,
  kSky,
  kBuilding,
  kTree,
  kSidewalk,
  kRoad,
  kCar,
  kTrafficLight,
  kPerson,
  kNumClasses
};

const std::vector<std::string>& class_names();

// ---------------------------------------------------------------------------
// Inverse-frequency weighted vote downsampling

struct SegMap {
  int height = 0;
  int width = 0;
  std::vector<int> classes;  // row-major class ids

  int at(int r, int c) const { return classes[static_cast<std::size_t>(r) * width + c]; }
};

// Vote of class c in a patch: count(c) / f(c)^alpha. The winner is the
// argmax; ties go to the smaller id. Maps whose sides are not multiples of
// `patch` are padded with kVoid, which does not vote. A patch with no votes
// yields kVoid.
SegMap downsample(const SegMap& map, int patch, const std::vector<double>& frequency, double alpha);

// Per-class pixel counts over a corpus of maps.
std::vector<double> class_frequency(const std::vector<const SegMap*>& corpus, int num_classes = kNumClasses);

// ---------------------------------------------------------------------------
// Geometry helpers

// floor(heading * width / 360) for heading in [0, 360).
int heading_to_column(double heading_degrees, int width);

// scale * (dist_before - dist_after).
double shaped_reward(int dist_before, int dist_after, double scale);

// Channel 0: signed wrap-around column distance to `heading_column` divided
// by width, in (-0.5, 0.5]. Channel 1 is zero.
RelPosition relpos_heading(int height, int width, int heading_column);

// Bearing from a to b in degrees, 0 = north (+y), clockwise.
double bearing(double ax, double ay, double bx, double by);

// ---------------------------------------------------------------------------
// Graph

struct Node {
  double x = 0;
  double y = 0;
  std::vector<int> landmarks;  // class ids of the node's landmarks, first is primary
};

struct Edge {
  int a = 0;
  int b = 0;
};

struct GraphConfig {
  int lattice = 14;         // lattice side; nodes = lattice^2
  double jitter = 0.2;      // uniform jitter of node coordinates, lattice units
  double drop_rate = 0.2;   // fraction of edges the generator tries to delete
  int pano_height = 24;
  int pano_width = 100;
  int raw_patch = 8;        // raw pixels per panorama cell on each side
  double alpha = 1.0;
  std::uint64_t seed = 0x6e6176;
};

struct NavGraph {
  GraphConfig config;
  std::vector<Node> nodes;
  std::vector<Edge> edges;
  std::vector<std::vector<int>> adjacency;  // neighbour node ids, sorted
  std::vector<SegMap> panoramas;          // per node, pano_height x pano_width
  std::vector<double> frequency;            // corpus class frequency used when downsampling

  int num_nodes() const { return static_cast<int>(nodes.size()); }
  // Column of the edge a->b in a's panorama.
  int edge_column(int a, int b) const;
  double edge_bearing(int a, int b) const;
  // Hop distances from `target` to every node.
  std::vector<int> distances_to(int target) const;
  bool connected() const;
};

NavGraph generate_graph(const GraphConfig& config);

// The raw (pre-downsampling) panorama of a node.
SegMap raw_panorama(const NavGraph& graph, int node);

// Shared immutable graph per config; generated once per process.
std::shared_ptr<const NavGraph> shared_graph(const GraphConfig& config);

// JSON archive (layout documented in schema/navgraph_archive.md).
std::string export_archive(const NavGraph& graph);
NavGraph import_archive(const std::string& json_text);

// ---------------------------------------------------------------------------
// Instances

enum class Turn { kStraight, kLeft, kRight, kAround };

const char* turn_word(Turn t);
Turn classify_turn(double from_bearing, double to_bearing);

struct Instance {
  int start = 0;
  int goal = 0;
  double start_bearing = 0;
  std::vector<int> path;  // gold shortest path, start..goal
  std::vector<Turn> turns;
  std::vector<int> landmarks;  // landmark mentioned per sentence
  std::string instruction;

  // Hash of the (landmark sequence, turn sequence) pair used for splits.
  std::uint64_t instruction_hash() const;
};

struct Config {
  GraphConfig graph;
  std::string graph_file;  // optional archive to load instead of generating
  int min_hops = 3;
  int max_hops = 8;
  double reward_scale = 1.0;
  bool manual_stop = false;

  static Config from_overrides(OverrideReader& reader);
  void validate() const;
};

// Gold path by BFS with neighbours in ascending id order.
std::vector<int> shortest_path(const NavGraph& graph, int from, int to);

Instance make_instance(const NavGraph& graph, int start, int goal, double start_bearing);

Instance sample_instance(const NavGraph& graph, Rng& rng, Split split, const Config& config);

class NavGame final : public Game {
 public:
  NavGame(Config config, Split split);
  NavGame(Config config, Split split, std::shared_ptr<const NavGraph> graph);

  std::string_view name() const override { return config_.manual_stop ? "navgraph_manual" : "navgraph"; }
  const Vocabulary& vocabulary() const override { return vocab_; }
  Observation reset(std::uint64_t seed) override;
  StepResult step(int action) override;
  int default_step_limit() const override { return 64; }

  const NavGraph& graph() const { return *graph_; }
  const Instance& instance() const { return instance_; }
  int node() const { return node_; }
  int heading_column() const { return heading_column_; }
  // Neighbours in the order of the current action columns.
  const std::vector<int>& options() const { return options_; }
  // Action index that follows the gold path from the current node, or the
  // stop index at the goal in the manual variant.
  int gold_action() const;

 private:
  Observation observe() const;
  void refresh_options();

  Config config_;
  Split split_;
  std::shared_ptr<const NavGraph> graph_;
  Vocabulary vocab_;
  std::vector<int> goal_distance_;
  Instance instance_;
  int node_ = 0;
  int heading_column_ = 0;
  std::vector<int> options_;
  std::vector<int> columns_;
  bool done_ = false;
};

}  // namespace silg::navgraph
