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

#include "silg/navgraph.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <mutex>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "envs/text_util.hpp"

namespace silg::navgraph {

namespace {

constexpr double kPi = 3.14159265358979323846;

const std::vector<int>& landmark_classes() {
  static const std::vector<int> v = {kTree, kCar, kTrafficLight, kPerson};
  return v;
}

// Surface form of a class in instructions ("traffic light").
std::string landmark_phrase(int cls) {
  std::string s = class_names()[cls];
  std::replace(s.begin(), s.end(), '_', ' ');
  return s;
}

void paint(SegMap& m, int r0, int r1, int c0, int c1, int cls, Rng* rng = nullptr, double density = 1.0) {
  for (int r = std::max(0, r0); r < std::min(m.height, r1); ++r) {
    for (int c = c0; c < c1; ++c) {
      const int cc = ((c % m.width) + m.width) % m.width;
      if (rng && !rng->bernoulli(density)) continue;
      m.classes[static_cast<std::size_t>(r) * m.width + cc] = cls;
    }
  }
}

std::vector<std::vector<int>> build_adjacency(int n, const std::vector<Edge>& edges) {
  std::vector<std::vector<int>> adj(n);
  for (const auto& e : edges) {
    adj[e.a].push_back(e.b);
    adj[e.b].push_back(e.a);
  }
  for (auto& a : adj) std::sort(a.begin(), a.end());
  return adj;
}

bool adjacency_connected(const std::vector<std::vector<int>>& adj) {
  if (adj.empty()) return true;
  std::vector<char> seen(adj.size(), 0);
  std::deque<int> queue{0};
  seen[0] = 1;
  std::size_t count = 0;
  while (!queue.empty()) {
    const int v = queue.front();
    queue.pop_front();
    ++count;
    for (int w : adj[v]) {
      if (!seen[w]) {
        seen[w] = 1;
        queue.push_back(w);
      }
    }
  }
  return count == adj.size();
}

void check_columns(const NavGraph& g) {
  for (int v = 0; v < g.num_nodes(); ++v) {
    std::vector<int> cols;
    for (int w : g.adjacency[v]) cols.push_back(g.edge_column(v, w));
    std::sort(cols.begin(), cols.end());
    if (std::adjacent_find(cols.begin(), cols.end()) != cols.end()) {
      fail(ErrorCode::kContractViolation, "navgraph: two edges of node " + std::to_string(v) + " share a column");
    }
  }
}

Vocabulary build_vocabulary() {
  std::vector<std::string> lexicon = {"go straight past the", "turn left at the", "turn right at the",
                                      "turn around at the", "and stop at the", "then"};
  for (int c : landmark_classes()) lexicon.push_back(landmark_phrase(c));
  std::vector<std::string> symbols;
  for (int c = 1; c < kNumClasses; ++c) symbols.push_back(class_names()[c]);
  return Vocabulary::from_lexicon(lexicon, symbols);
}

}  // namespace

const std::vector<std::string>& class_names() {
  static const std::vector<std::string> v = {"void",     "sky",  "building",      "tree",  "sidewalk",
                                             "road",     "car",  "traffic_light", "person"};
  return v;
}

SegMap downsample(const SegMap& map, int patch, const std::vector<double>& frequency, double alpha) {
  if (map.height <= 0 || map.width <= 0 || map.classes.empty()) {
    fail(ErrorCode::kInvalidArgument, "downsample: empty map");
  }
  if (map.classes.size() != static_cast<std::size_t>(map.height) * map.width) {
    fail(ErrorCode::kInvalidArgument, "downsample: class array does not match map size");
  }
  if (patch < 1) fail(ErrorCode::kInvalidArgument, "downsample: patch must be >= 1");
  if (alpha < 0) fail(ErrorCode::kInvalidArgument, "downsample: alpha must be >= 0");
  const int num_classes = static_cast<int>(frequency.size());
  std::vector<double> weight(num_classes, 0.0);
  for (int c = 1; c < num_classes; ++c) weight[c] = frequency[c] > 0 ? std::pow(frequency[c], -alpha) : 0.0;

  SegMap out;
  out.height = (map.height + patch - 1) / patch;
  out.width = (map.width + patch - 1) / patch;
  out.classes.assign(static_cast<std::size_t>(out.height) * out.width, kVoid);
  std::vector<int> counts(num_classes);
  for (int pr = 0; pr < out.height; ++pr) {
    for (int pc = 0; pc < out.width; ++pc) {
      std::fill(counts.begin(), counts.end(), 0);
      for (int r = pr * patch; r < std::min(map.height, (pr + 1) * patch); ++r) {
        for (int c = pc * patch; c < std::min(map.width, (pc + 1) * patch); ++c) {
          const int cls = map.at(r, c);
          if (cls < 0 || cls >= num_classes) {
            fail(ErrorCode::kInvalidArgument, "downsample: class id " + std::to_string(cls) + " has no frequency");
          }
          ++counts[cls];
        }
      }
      int best = kVoid;
      double best_vote = 0.0;
      for (int c = 1; c < num_classes; ++c) {
        if (counts[c] == 0) continue;
        if (frequency[c] <= 0) fail(ErrorCode::kInvalidArgument, "downsample: present class has zero frequency");
        const double vote = weight[c] * counts[c];
        if (vote > best_vote) {
          best_vote = vote;
          best = c;
        }
      }
      out.classes[static_cast<std::size_t>(pr) * out.width + pc] = best;
    }
  }
  return out;
}

std::vector<double> class_frequency(const std::vector<const SegMap*>& corpus, int num_classes) {
  std::vector<double> f(num_classes, 0.0);
  for (const SegMap* m : corpus) {
    for (int c : m->classes) {
      require(c >= 0 && c < num_classes, "class_frequency: class id out of range");
      f[c] += 1.0;
    }
  }
  return f;
}

int heading_to_column(double heading_degrees, int width) {
  require(heading_degrees >= 0 && heading_degrees < 360, "heading_to_column: heading must be in [0, 360)");
  require(width > 0, "heading_to_column: width must be positive");
  const int col = static_cast<int>(std::floor(heading_degrees * width / 360.0));
  return std::min(col, width - 1);
}

double shaped_reward(int dist_before, int dist_after, double scale) {
  require(dist_before >= 0 && dist_after >= 0, "shaped_reward: unreachable goal");
  return scale * (dist_before - dist_after);
}

RelPosition relpos_heading(int height, int width, int heading_column) {
  require(heading_column >= 0 && heading_column < width, "relpos_heading: heading column out of range");
  RelPosition rp;
  rp.height = height;
  rp.width = width;
  rp.offsets.assign(static_cast<std::size_t>(height) * width * 2, 0.0);
  std::vector<double> row(width);
  for (int c = 0; c < width; ++c) {
    int d = ((c - heading_column) % width + width) % width;
    if (2 * d > width) d -= width;
    row[c] = static_cast<double>(d) / width;
  }
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) rp.offsets[(static_cast<std::size_t>(r) * width + c) * 2] = row[c];
  }
  return rp;
}

double bearing(double ax, double ay, double bx, double by) {
  double deg = std::atan2(bx - ax, by - ay) * 180.0 / kPi;
  if (deg < 0) deg += 360.0;
  if (deg >= 360.0) deg -= 360.0;
  return deg;
}

// ---------------------------------------------------------------------------

int NavGraph::edge_column(int a, int b) const { return heading_to_column(edge_bearing(a, b), config.pano_width); }

double NavGraph::edge_bearing(int a, int b) const { return bearing(nodes[a].x, nodes[a].y, nodes[b].x, nodes[b].y); }

std::vector<int> NavGraph::distances_to(int target) const {
  std::vector<int> dist(nodes.size(), -1);
  std::deque<int> queue{target};
  dist[target] = 0;
  while (!queue.empty()) {
    const int v = queue.front();
    queue.pop_front();
    for (int w : adjacency[v]) {
      if (dist[w] < 0) {
        dist[w] = dist[v] + 1;
        queue.push_back(w);
      }
    }
  }
  return dist;
}

bool NavGraph::connected() const { return adjacency_connected(adjacency); }

SegMap raw_panorama(const NavGraph& graph, int node) {
  const auto& cfg = graph.config;
  const int p = cfg.raw_patch;
  SegMap m;
  m.height = cfg.pano_height * p;
  m.width = cfg.pano_width * p;
  m.classes.assign(static_cast<std::size_t>(m.height) * m.width, kSky);
  Rng rng(mix_seed(cfg.seed, 0x70616e6fULL + static_cast<std::uint64_t>(node)));
  const int h = cfg.pano_height;
  auto row = [&](double frac) { return static_cast<int>(std::lround(frac * h)) * p; };

  // Skyline: building tops vary in blocks of 10 columns.
  for (int block = 0; block * 10 < cfg.pano_width; ++block) {
    const int top = row(0.25) + rng.uniform_range(-2, 2) * p;
    paint(m, top, row(0.67), block * 10 * p, std::min(cfg.pano_width, (block + 1) * 10) * p, kBuilding);
  }
  paint(m, row(0.67), row(0.79), 0, m.width, kSidewalk);
  paint(m, row(0.79), m.height, 0, m.width, kRoad);

  // Street openings toward each neighbour.
  for (int w : graph.adjacency[node]) {
    const double centre = graph.edge_bearing(node, w) / 360.0 * m.width;
    const int c0 = static_cast<int>(std::floor(centre)) - 2 * p;
    const int c1 = static_cast<int>(std::floor(centre)) + 2 * p;
    paint(m, 0, row(0.5), c0, c1, kSky);
    paint(m, row(0.5), m.height, c0, c1, kRoad);
  }

  // Landmarks. Thin ones cover only part of their cells, so a plain majority
  // vote would erase them.
  for (int cls : graph.nodes[node].landmarks) {
    const int col = rng.uniform(cfg.pano_width) * p;
    switch (cls) {
      case kTree:
        paint(m, row(0.25), row(0.7), col, col + 3 * p, kTree);
        break;
      case kCar:
        paint(m, row(0.7), row(0.9), col, col + 4 * p, kCar);
        break;
      case kTrafficLight:
        paint(m, row(0.2), row(0.55), col, col + p, kTrafficLight, &rng, 0.4);
        break;
      case kPerson:
        paint(m, row(0.55), row(0.85), col, col + 2 * p, kPerson, &rng, 0.45);
        break;
      default:
        break;
    }
  }
  return m;
}

NavGraph generate_graph(const GraphConfig& config) {
  if (config.lattice < 2 || config.lattice > 64) fail(ErrorCode::kInvalidArgument, "navgraph: lattice must be in [2, 64]");
  if (config.jitter < 0 || config.jitter > 0.3) fail(ErrorCode::kInvalidArgument, "navgraph: jitter must be in [0, 0.3]");
  if (config.drop_rate < 0 || config.drop_rate > 0.5) {
    fail(ErrorCode::kInvalidArgument, "navgraph: drop_rate must be in [0, 0.5]");
  }
  if (config.pano_height < 4 || config.pano_width < 8 || config.raw_patch < 1) {
    fail(ErrorCode::kInvalidArgument, "navgraph: bad panorama geometry");
  }
  NavGraph g;
  g.config = config;
  Rng rng(config.seed);
  const int n = config.lattice;
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      Node node;
      node.x = c + rng.uniform_real(-config.jitter, config.jitter);
      node.y = r + rng.uniform_real(-config.jitter, config.jitter);
      auto classes = landmark_classes();
      rng.shuffle(classes);
      const int count = rng.uniform_range(1, 2);
      node.landmarks.assign(classes.begin(), classes.begin() + count);
      g.nodes.push_back(std::move(node));
    }
  }
  std::vector<Edge> edges;
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      if (c + 1 < n) edges.push_back({r * n + c, r * n + c + 1});
      if (r + 1 < n) edges.push_back({r * n + c, (r + 1) * n + c});
    }
  }
  std::vector<int> order(edges.size());
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);
  std::vector<char> removed(edges.size(), 0);
  const int attempts = static_cast<int>(config.drop_rate * static_cast<double>(edges.size()));
  for (int i = 0; i < attempts; ++i) {
    removed[order[i]] = 1;
    std::vector<Edge> kept;
    for (std::size_t e = 0; e < edges.size(); ++e) {
      if (!removed[e]) kept.push_back(edges[e]);
    }
    if (!adjacency_connected(build_adjacency(n * n, kept))) removed[order[i]] = 0;
  }
  for (std::size_t e = 0; e < edges.size(); ++e) {
    if (!removed[e]) g.edges.push_back(edges[e]);
  }
  g.adjacency = build_adjacency(n * n, g.edges);
  check_columns(g);

  // Corpus frequencies first, then the downsampled panoramas.
  g.frequency.assign(kNumClasses, 0.0);
  for (int v = 0; v < g.num_nodes(); ++v) {
    const SegMap raw = raw_panorama(g, v);
    for (int c : raw.classes) g.frequency[c] += 1.0;
  }
  for (int v = 0; v < g.num_nodes(); ++v) {
    g.panoramas.push_back(downsample(raw_panorama(g, v), config.raw_patch, g.frequency, config.alpha));
  }
  return g;
}

namespace {

std::mutex& cache_mutex() {
  static std::mutex m;
  return m;
}

std::map<std::string, std::shared_ptr<const NavGraph>>& cache() {
  static std::map<std::string, std::shared_ptr<const NavGraph>> c;
  return c;
}

std::string cache_key(const GraphConfig& c) {
  std::ostringstream k;
  k.precision(17);
  k << c.lattice << '/' << c.jitter << '/' << c.drop_rate << '/' << c.pano_height << '/' << c.pano_width << '/'
    << c.raw_patch << '/' << c.alpha << '/' << c.seed;
  return k.str();
}

std::shared_ptr<const NavGraph> load_file_graph(const std::string& path) {
  std::lock_guard<std::mutex> lock(cache_mutex());
  auto& c = cache();
  const std::string key = "file:" + path;
  if (auto it = c.find(key); it != c.end()) return it->second;
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "navgraph: cannot open graph file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  auto g = std::make_shared<const NavGraph>(import_archive(ss.str()));
  c.emplace(key, g);
  return g;
}

}  // namespace

std::shared_ptr<const NavGraph> shared_graph(const GraphConfig& config) {
  std::lock_guard<std::mutex> lock(cache_mutex());
  auto& c = cache();
  const std::string key = cache_key(config);
  if (auto it = c.find(key); it != c.end()) return it->second;
  auto g = std::make_shared<const NavGraph>(generate_graph(config));
  c.emplace(key, g);
  return g;
}

std::string export_archive(const NavGraph& graph) {
  using nlohmann::json;
  json j;
  j["format"] = "silg-navgraph";
  j["version"] = 1;
  const auto& c = graph.config;
  j["config"] = {{"lattice", c.lattice},         {"jitter", c.jitter},         {"drop_rate", c.drop_rate},
                 {"pano_height", c.pano_height}, {"pano_width", c.pano_width}, {"raw_patch", c.raw_patch},
                 {"alpha", c.alpha},             {"seed", c.seed}};
  j["classes"] = class_names();
  json nodes = json::array();
  for (const auto& n : graph.nodes) nodes.push_back({{"x", n.x}, {"y", n.y}, {"landmarks", n.landmarks}});
  j["nodes"] = std::move(nodes);
  json edges = json::array();
  for (const auto& e : graph.edges) edges.push_back({e.a, e.b});
  j["edges"] = std::move(edges);
  j["frequency"] = graph.frequency;
  json panos = json::array();
  for (const auto& p : graph.panoramas) panos.push_back(p.classes);
  j["panoramas"] = std::move(panos);
  return j.dump();
}

NavGraph import_archive(const std::string& json_text) {
  using nlohmann::json;
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    fail(ErrorCode::kParse, std::string("navgraph archive: ") + e.what());
  }
  try {
    if (j.at("format") != "silg-navgraph" || j.at("version") != 1) {
      fail(ErrorCode::kParse, "navgraph archive: unsupported format or version");
    }
    NavGraph g;
    const auto& c = j.at("config");
    g.config.lattice = c.at("lattice");
    g.config.jitter = c.at("jitter");
    g.config.drop_rate = c.at("drop_rate");
    g.config.pano_height = c.at("pano_height");
    g.config.pano_width = c.at("pano_width");
    g.config.raw_patch = c.at("raw_patch");
    g.config.alpha = c.at("alpha");
    g.config.seed = c.at("seed");
    for (const auto& n : j.at("nodes")) {
      Node node;
      node.x = n.at("x");
      node.y = n.at("y");
      node.landmarks = n.at("landmarks").get<std::vector<int>>();
      for (int l : node.landmarks) {
        if (l <= kVoid || l >= kNumClasses) fail(ErrorCode::kParse, "navgraph archive: bad landmark class");
      }
      g.nodes.push_back(std::move(node));
    }
    const int nn = g.num_nodes();
    if (nn == 0) fail(ErrorCode::kParse, "navgraph archive: no nodes");
    for (const auto& e : j.at("edges")) {
      Edge edge{e.at(0).get<int>(), e.at(1).get<int>()};
      if (edge.a < 0 || edge.b < 0 || edge.a >= nn || edge.b >= nn || edge.a == edge.b) {
        fail(ErrorCode::kParse, "navgraph archive: bad edge");
      }
      g.edges.push_back(edge);
    }
    g.frequency = j.at("frequency").get<std::vector<double>>();
    const auto& panos = j.at("panoramas");
    if (static_cast<int>(panos.size()) != nn) fail(ErrorCode::kParse, "navgraph archive: panorama count mismatch");
    for (const auto& p : panos) {
      SegMap m;
      m.height = g.config.pano_height;
      m.width = g.config.pano_width;
      m.classes = p.get<std::vector<int>>();
      if (m.classes.size() != static_cast<std::size_t>(m.height) * m.width) {
        fail(ErrorCode::kParse, "navgraph archive: panorama size mismatch");
      }
      for (int cls : m.classes) {
        if (cls < 0 || cls >= kNumClasses) fail(ErrorCode::kParse, "navgraph archive: bad panorama class");
      }
      g.panoramas.push_back(std::move(m));
    }
    g.adjacency = build_adjacency(nn, g.edges);
    if (!g.connected()) fail(ErrorCode::kParse, "navgraph archive: graph is not connected");
    check_columns(g);
    return g;
  } catch (const json::exception& e) {
    fail(ErrorCode::kParse, std::string("navgraph archive: ") + e.what());
  }
}

// ---------------------------------------------------------------------------

const char* turn_word(Turn t) {
  switch (t) {
    case Turn::kStraight: return "straight";
    case Turn::kLeft: return "left";
    case Turn::kRight: return "right";
    case Turn::kAround: return "around";
  }
  return "?";
}

Turn classify_turn(double from_bearing, double to_bearing) {
  double d = std::fmod(to_bearing - from_bearing + 540.0, 360.0) - 180.0;  // (-180, 180]
  if (std::abs(d) <= 45.0) return Turn::kStraight;
  if (d > 45.0 && d <= 135.0) return Turn::kRight;
  if (d < -45.0 && d >= -135.0) return Turn::kLeft;
  return Turn::kAround;
}

std::uint64_t Instance::instruction_hash() const {
  StableHasher h;
  h.add_string("navgraph-instruction");
  h.add_u64(landmarks.size());
  for (int l : landmarks) h.add_i64(l);
  h.add_u64(turns.size());
  for (Turn t : turns) h.add_i64(static_cast<int>(t));
  return h.digest();
}

Config Config::from_overrides(OverrideReader& reader) {
  Config c;
  c.graph.lattice = reader.get_int("lattice", c.graph.lattice);
  c.graph.jitter = reader.get_double("jitter", c.graph.jitter);
  c.graph.drop_rate = reader.get_double("drop_rate", c.graph.drop_rate);
  c.graph.raw_patch = reader.get_int("raw_patch", c.graph.raw_patch);
  c.graph.alpha = reader.get_double("alpha", c.graph.alpha);
  c.graph.seed = static_cast<std::uint64_t>(reader.get_int("graph_seed", static_cast<int>(c.graph.seed)));
  c.graph_file = reader.get_string("graph_file", "");
  c.min_hops = reader.get_int("min_hops", c.min_hops);
  c.max_hops = reader.get_int("max_hops", c.max_hops);
  c.reward_scale = reader.get_double("reward_scale", c.reward_scale);
  return c;
}

void Config::validate() const {
  if (min_hops < 1 || max_hops < min_hops) fail(ErrorCode::kInvalidArgument, "navgraph: need 1 <= min_hops <= max_hops");
  if (!(reward_scale >= 0)) fail(ErrorCode::kInvalidArgument, "navgraph: reward_scale must be >= 0");
}

std::vector<int> shortest_path(const NavGraph& graph, int from, int to) {
  std::vector<int> prev(graph.nodes.size(), -1);
  std::deque<int> queue{from};
  prev[from] = from;
  while (!queue.empty()) {
    const int v = queue.front();
    queue.pop_front();
    if (v == to) break;
    for (int w : graph.adjacency[v]) {
      if (prev[w] < 0) {
        prev[w] = v;
        queue.push_back(w);
      }
    }
  }
  require(prev[to] >= 0, "navgraph: goal unreachable");
  std::vector<int> path;
  for (int v = to; v != from; v = prev[v]) path.push_back(v);
  path.push_back(from);
  std::reverse(path.begin(), path.end());
  return path;
}

Instance make_instance(const NavGraph& graph, int start, int goal, double start_bearing) {
  Instance inst;
  inst.start = start;
  inst.goal = goal;
  inst.start_bearing = start_bearing;
  inst.path = shortest_path(graph, start, goal);
  std::vector<std::string> sentences;
  double heading = start_bearing;
  for (std::size_t i = 0; i + 1 < inst.path.size(); ++i) {
    const double out = graph.edge_bearing(inst.path[i], inst.path[i + 1]);
    const Turn t = classify_turn(heading, out);
    const int landmark = graph.nodes[inst.path[i]].landmarks.front();
    inst.turns.push_back(t);
    inst.landmarks.push_back(landmark);
    const std::string l = landmark_phrase(landmark);
    switch (t) {
      case Turn::kStraight: sentences.push_back("go straight past the " + l); break;
      case Turn::kLeft: sentences.push_back("turn left at the " + l); break;
      case Turn::kRight: sentences.push_back("turn right at the " + l); break;
      case Turn::kAround: sentences.push_back("turn around at the " + l); break;
    }
    heading = out;
  }
  const int final_landmark = graph.nodes[goal].landmarks.front();
  inst.landmarks.push_back(final_landmark);
  inst.instruction = text::join(sentences, " then ") + " and stop at the " + landmark_phrase(final_landmark);
  return inst;
}

Instance sample_instance(const NavGraph& graph, Rng& rng, Split split, const Config& config) {
  const int n = graph.num_nodes();
  for (int attempt = 0; attempt < 100000; ++attempt) {
    const int start = rng.uniform(n);
    const int goal = rng.uniform(n);
    const auto dist = graph.distances_to(goal);
    if (dist[start] < config.min_hops || dist[start] > config.max_hops) continue;
    const auto& adj = graph.adjacency[start];
    const double start_bearing = graph.edge_bearing(start, adj[rng.uniform(static_cast<int>(adj.size()))]);
    Instance inst = make_instance(graph, start, goal, start_bearing);
    if (split_for_hash(inst.instruction_hash()) == split) return inst;
  }
  fail(ErrorCode::kContractViolation, "navgraph: no instance found for split");
}

// ---------------------------------------------------------------------------

namespace {

std::shared_ptr<const NavGraph> graph_for(const Config& config) {
  if (!config.graph_file.empty()) return load_file_graph(config.graph_file);
  return shared_graph(config.graph);
}

}  // namespace

NavGame::NavGame(Config config, Split split) : NavGame(config, split, nullptr) {}

NavGame::NavGame(Config config, Split split, std::shared_ptr<const NavGraph> graph)
    : config_(std::move(config)), split_(split), vocab_(build_vocabulary()) {
  config_.validate();
  graph_ = graph ? std::move(graph) : graph_for(config_);
}

Observation NavGame::reset(std::uint64_t seed) {
  Rng rng(mix_seed(seed, 0x6e61766967));
  instance_ = sample_instance(*graph_, rng, split_, config_);
  goal_distance_ = graph_->distances_to(instance_.goal);
  node_ = instance_.start;
  heading_column_ = heading_to_column(instance_.start_bearing, graph_->config.pano_width);
  done_ = false;
  refresh_options();
  return observe();
}

void NavGame::refresh_options() {
  std::vector<std::pair<int, int>> opts;
  for (int w : graph_->adjacency[node_]) opts.emplace_back(graph_->edge_column(node_, w), w);
  std::sort(opts.begin(), opts.end());
  options_.clear();
  columns_.clear();
  for (const auto& [col, w] : opts) {
    columns_.push_back(col);
    options_.push_back(w);
  }
}

int NavGame::gold_action() const {
  if (config_.manual_stop && node_ == instance_.goal) return static_cast<int>(options_.size());
  int best = -1;
  for (int i = 0; i < static_cast<int>(options_.size()); ++i) {
    if (goal_distance_[options_[i]] == goal_distance_[node_] - 1 && (best < 0 || options_[i] < options_[best])) {
      best = i;
    }
  }
  return best;
}

StepResult NavGame::step(int action) {
  if (done_) fail(ErrorCode::kBadState, "navgraph: step after done");
  const int n_opts = static_cast<int>(options_.size());
  const int arity = n_opts + (config_.manual_stop ? 1 : 0);
  if (action < 0 || action >= arity) fail(ErrorCode::kInvalidArgument, "navgraph: invalid choice " + std::to_string(action));
  StepResult result;
  if (action == n_opts) {
    done_ = true;
    result.done = true;
    result.info.win = node_ == instance_.goal;
    result.reward = result.info.win ? 1.0 : -1.0;
  } else {
    const int next = options_[action];
    const int before = goal_distance_[node_];
    heading_column_ = columns_[action];
    node_ = next;
    if (!config_.manual_stop && node_ == instance_.goal) {
      done_ = true;
      result.done = true;
      result.info.win = true;
      result.reward = 1.0;
    } else {
      result.reward = shaped_reward(before, goal_distance_[node_], config_.reward_scale);
    }
    refresh_options();
  }
  result.info.stats = {{"distance", static_cast<double>(goal_distance_[node_])}};
  result.observation = observe();
  return result;
}

Observation NavGame::observe() const {
  const auto& pano = graph_->panoramas[node_];
  Observation obs;
  obs.grid = SymbolGrid(pano.height, pano.width, 1);
  std::vector<TokenId> ids(kNumClasses, kPadId);
  for (int c = 1; c < kNumClasses; ++c) ids[c] = vocab_.id(class_names()[c]);
  for (std::size_t i = 0; i < pano.classes.size(); ++i) obs.grid.cells[i] = ids[pano.classes[i]];
  obs.text = make_text_bundle(vocab_, {{"instruction", instance_.instruction}});
  obs.relpos = relpos_heading(pano.height, pano.width, heading_column_);
  obs.actions.kind = ActionKind::kNavCoordinates;
  obs.actions.columns = columns_;
  obs.actions.stop_option = config_.manual_stop;
  obs.legend = legend_for(obs.grid, vocab_);
  return obs;
}

}  // namespace silg::navgraph
