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

// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fail.
//
//   silg_acceptance [--only 1,4,9] [--smoke-config PATH]
//   silg_acceptance --digest-child ENV SEED STEPS   (helper for criterion 8)

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <limits>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "silg/crawler.hpp"
#include "silg/messenger.hpp"
#include "silg/navgraph.hpp"
#include "silg/rtfm.hpp"
#include "silg/service.hpp"
#include "silg/sir_model.hpp"
#include "silg/textchoice.hpp"
#include "silg/trainer.hpp"

#ifndef SILG_SMOKE_CONFIG
#define SILG_SMOKE_CONFIG "smoke_rtfm.cfg"
#endif

namespace {

using namespace silg;
using Clock = std::chrono::steady_clock;

struct Verdict {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double v, int digits = 3) {
  std::ostringstream s;
  s.precision(digits);
  s << std::fixed << v;
  return s.str();
}

std::string sci(double v) {
  std::ostringstream s;
  s.precision(2);
  s << std::scientific << v;
  return s.str();
}

// ---------------------------------------------------------------------------

Verdict gradient_correctness() {
  const auto t0 = Clock::now();
  const std::vector<std::pair<std::string, sir::Variants>> variants = {
      {"base", {}},
      {"state", {true, false, false, false}},
      {"local_conv", {false, true, false, false}},
      {"entity_attn", {false, false, true, false}},
      {"concat_fields", {false, false, false, true}},
  };
  std::size_t checked = 0, failed = 0;
  double worst = 0;
  std::string first_failure;
  for (auto head : {sir::HeadKind::kFixed, sir::HeadKind::kChoices, sir::HeadKind::kNav}) {
    for (const auto& [name, v] : variants) {
      sir::SirModel model(sir::tiny_config(head, v), 101);
      Rng rng(202);
      const auto obs = sir::random_observation(model.config(), rng);
      sir::RecurrentState prev;
      if (v.state) {
        prev.h.assign(model.config().final_dim, 0.25);
        prev.c.assign(model.config().final_dim, -0.5);
      }
      const auto rep = sir::gradient_check(model, obs, obs.actions.arity() - 1, v.state ? &prev : nullptr);
      checked += rep.checked;
      failed += rep.failed;
      worst = std::max(worst, rep.max_error);
      if (!rep.passed() && first_failure.empty()) {
        first_failure = std::string(sir::head_kind_name(head)) + "/" + name +
                        (rep.failures.empty() ? "" : ": " + rep.failures.front());
      }
    }
  }
  const double secs = seconds_since(t0);
  Verdict v;
  v.pass = failed == 0 && checked > 0 && secs < 120.0;
  v.detail = std::to_string(checked) + " entries over 15 head/variant configs, " + std::to_string(failed) +
             " failed, max rel err " + sci(worst) + ", " + fmt(secs, 1) + " s";
  if (!first_failure.empty()) v.detail += "; first failure " + first_failure;
  return v;
}

Verdict film_identity() {
  Rng rng(7);
  auto values = [&](int n) {
    std::vector<double> v(n);
    for (auto& x : v) x = rng.uniform_real(-1.0, 1.0);
    return v;
  };
  int exact = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const int h = 2 + rng.uniform(5), w = 2 + rng.uniform(5), cin = 1 + rng.uniform(6), ch = 1 + rng.uniform(8);
    const int r3 = 3 * (2 + 2 * rng.uniform(4));
    nn::Tape t;
    sir::Film2Params p;
    p.gamma_w = t.zeros(r3, ch);
    p.gamma_b = t.zeros(1, ch);
    p.beta_w = t.zeros(r3, ch);
    p.beta_b = t.zeros(1, ch);
    p.conv_vis = t.constant(9 * cin, ch, values(9 * cin * ch));
    p.conv_vis_b = t.constant(1, ch, values(ch));
    p.conv_gamma = t.zeros(9 * cin, ch);
    p.conv_gamma_b = t.zeros(1, ch);
    p.conv_beta = t.zeros(9 * cin, ch);
    p.conv_beta_b = t.zeros(1, ch);
    p.text_w = t.zeros(r3, ch);
    p.text_b = t.zeros(1, ch);
    const auto x = values(h * w * cin);
    const auto out = sir::film2_layer(t, p, t.constant(h * w, cin, x), t.constant(1, r3, values(r3)), h, w);

    // Direct 3x3 same-padding convolution followed by ReLU.
    const auto& k = t.value(p.conv_vis);
    const auto& b = t.value(p.conv_vis_b);
    std::vector<double> expected(static_cast<std::size_t>(h) * w * ch);
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < w; ++c) {
        for (int o = 0; o < ch; ++o) {
          double acc = b[o];
          for (int tap = 0; tap < 9; ++tap) {
            const int rr = r + tap / 3 - 1, cc = c + tap % 3 - 1;
            if (rr < 0 || cc < 0 || rr >= h || cc >= w) continue;
            for (int i = 0; i < cin; ++i) acc += x[(rr * w + cc) * cin + i] * k[(tap * cin + i) * ch + o];
          }
          expected[(r * w + c) * ch + o] = std::max(acc, 0.0);
        }
      }
    }
    exact += t.value(out.v) == expected ? 1 : 0;
  }
  return {exact == 50, std::to_string(exact) + "/50 random inputs bit-identical to ReLU(conv_vis(X))"};
}

Verdict oracle_equivalence() {
  auto run = [](const std::string& env_id, Split split, const std::function<int(Environment&)>& policy) {
    auto env = make_env(env_id, split, 0);
    int wins = 0;
    for (int ep = 0; ep < 200; ++ep) {
      env->reset(static_cast<std::uint64_t>(split_base_seed(split)) + ep);
      wins += testing::play_episode(*env, policy).win ? 1 : 0;
    }
    return wins;
  };
  const int rtfm_train = run("rtfm", Split::kTrain, testing::rtfm_oracle_action);
  const int rtfm_eval = run("rtfm", Split::kTest, testing::rtfm_oracle_action);
  const int messenger = run("messenger", Split::kTest, testing::messenger_oracle_action);
  const int textchoice = run("textchoice", Split::kTest, testing::textchoice_planner_action);
  return {rtfm_train == 200 && rtfm_eval == 200 && messenger == 200 && textchoice == 200,
          "wins of 200: rtfm train " + std::to_string(rtfm_train) + ", rtfm eval " + std::to_string(rtfm_eval) +
              ", messenger " + std::to_string(messenger) + ", textchoice planner " + std::to_string(textchoice)};
}

template <typename T>
std::size_t overlap(const std::set<T>& a, const std::set<T>& b) {
  std::size_t n = 0;
  for (const auto& x : b) n += a.count(x);
  return n;
}

Verdict split_disjointness() {
  const int draws = 1000;
  std::ostringstream detail;
  bool ok = true;
  auto report = [&](const std::string& name, std::size_t shared) {
    detail << name << " " << shared << " shared; ";
    ok = ok && shared == 0;
  };
  {
    Rng rng(1);
    std::set<std::uint64_t> train, eval;
    for (int i = 0; i < draws; ++i) {
      train.insert(rtfm::generate_dynamics(rng, Split::kTrain, rtfm::Config{}).rule_hash());
      eval.insert(rtfm::generate_dynamics(rng, i % 2 ? Split::kVal : Split::kTest, rtfm::Config{}).rule_hash());
    }
    report("rtfm rule sets", overlap(train, eval));
  }
  {
    Rng rng(2);
    std::set<std::pair<int, int>> train, eval;
    for (int i = 0; i < draws; ++i) {
      const auto a = messenger::sample_assignment(rng, Split::kTrain, messenger::Config{});
      const auto b = messenger::sample_assignment(rng, i % 2 ? Split::kVal : Split::kTest, messenger::Config{});
      for (int r = 0; r < messenger::kNumRoles; ++r) {
        train.insert({a.entity[r], r});
        eval.insert({b.entity[r], r});
      }
    }
    report("messenger entity-role pairs", overlap(train, eval));
  }
  {
    auto train_env = make_env("crawler", Split::kTrain, 0);
    auto eval_env = make_env("crawler", Split::kTest, 0);
    std::set<std::uint64_t> train, eval;
    train_env->reset(static_cast<std::uint64_t>(split_base_seed(Split::kTrain)));
    eval_env->reset(static_cast<std::uint64_t>(split_base_seed(Split::kTest)));
    for (int i = 0; i < draws; ++i) {
      train.insert(train_env->episode_seed());
      eval.insert(eval_env->episode_seed());
      train_env->reset();
      eval_env->reset();
    }
    report("crawler episode seeds", overlap(train, eval));
  }
  {
    Rng rng(3);
    std::set<std::uint64_t> train, eval;
    for (int i = 0; i < draws; ++i) {
      train.insert(textchoice::generate_scene(rng, Split::kTrain, textchoice::Config{}).second.triple_hash());
      eval.insert(textchoice::generate_scene(rng, i % 2 ? Split::kVal : Split::kTest, textchoice::Config{})
                      .second.triple_hash());
    }
    report("textchoice goal triples", overlap(train, eval));
  }
  {
    const auto graph = navgraph::shared_graph(navgraph::GraphConfig{});
    Rng rng(4);
    std::set<std::uint64_t> train, eval;
    for (int i = 0; i < draws; ++i) {
      train.insert(navgraph::sample_instance(*graph, rng, Split::kTrain, navgraph::Config{}).instruction_hash());
      eval.insert(navgraph::sample_instance(*graph, rng, i % 2 ? Split::kVal : Split::kTest, navgraph::Config{})
                      .instruction_hash());
    }
    report("navgraph instructions", overlap(train, eval));
  }
  std::string d = detail.str();
  d.resize(d.size() - 2);
  return {ok, d + " (" + std::to_string(draws) + " draws per side)"};
}

Verdict crawler_rewards() {
  auto env = make_env("crawler", Split::kTrain, 0);
  Rng rng(55);
  int bad_terminal = 0, bad_interior = 0, wins = 0, losses = 0;
  for (int ep = 0; ep < 500; ++ep) {
    env->reset(static_cast<std::uint64_t>(ep));
    while (!env->done()) {
      const auto r = env->step(rng.uniform(env->observation().actions.arity()));
      if (r.done) {
        if (r.info.raw_reward == 1.0) ++wins;
        else if (r.info.raw_reward == -1.0) ++losses;
        else ++bad_terminal;
      } else if (r.info.raw_reward != 0.0) {
        ++bad_interior;
      }
    }
  }
  return {bad_terminal == 0 && bad_interior == 0,
          "500 random episodes: " + std::to_string(wins) + " at +1, " + std::to_string(losses) + " at -1, " +
              std::to_string(bad_terminal) + " other terminal, " + std::to_string(bad_interior) +
              " nonzero interior"};
}

Verdict downsampler() {
  using namespace navgraph;
  Rng rng(23);
  std::vector<double> freq(kNumClasses);
  for (auto& f : freq) f = 1.0 + rng.uniform(10000);
  int agree = 0;
  for (int t = 0; t < 100; ++t) {
    SegMap m{23, 23, std::vector<int>(23 * 23)};
    for (auto& c : m.classes) c = 1 + rng.uniform(kNumClasses - 1);
    std::vector<int> hist(kNumClasses, 0);
    for (int c : m.classes) ++hist[c];
    int best = 1;
    for (int c = 1; c < kNumClasses; ++c) {
      if (hist[c] > hist[best]) best = c;
    }
    agree += downsample(m, 23, freq, 0.0).classes[0] == best ? 1 : 0;
  }
  SegMap worked{23, 23, std::vector<int>(23 * 23, kRoad)};
  for (int i = 0; i < 129; ++i) worked.classes[i] = kTrafficLight;
  std::vector<double> wf(kNumClasses, 1.0);
  wf[kRoad] = 10000;
  wf[kTrafficLight] = 500;
  const bool minority = downsample(worked, 23, wf, 1.0).classes[0] == kTrafficLight;
  return {agree == 100 && minority, "alpha=0 matches majority on " + std::to_string(agree) +
                                        "/100 patches; worked example picks the " +
                                        (minority ? "minority" : "majority") + " class"};
}

Verdict nav_indexing() {
  using namespace navgraph;
  const int column = heading_to_column(30, 100);
  const auto graph = shared_graph(GraphConfig{});
  Rng rng(77);
  int exact = 0;
  for (int t = 0; t < 100; ++t) {
    const int goal = rng.uniform(graph->num_nodes());
    const auto dist = graph->distances_to(goal);
    int node = rng.uniform(graph->num_nodes());
    const int start = node;
    const double weight = 0.5 + rng.uniform(4) * 0.25;
    double sum = 0;
    const int hops = 1 + rng.uniform(20);
    for (int i = 0; i < hops; ++i) {
      const int next = rng.pick(graph->adjacency[node]);
      sum += shaped_reward(dist[node], dist[next], weight);
      node = next;
    }
    exact += sum == weight * (dist[start] - dist[node]) ? 1 : 0;
  }
  return {column == 8 && exact == 100,
          "heading_to_column(30, 100) = " + std::to_string(column) + "; telescoping exact on " +
              std::to_string(exact) + "/100 random paths"};
}

std::vector<std::string> digest_sequence(const std::string& env_id, std::uint64_t seed, int steps) {
  auto env = make_env(env_id, Split::kTrain, seed);
  std::vector<std::string> out{digest_hex(observation_digest(env->reset(seed)))};
  Rng rng(seed ^ 0x5eed);
  for (int i = 0; i < steps; ++i) {
    if (env->done()) out.push_back(digest_hex(observation_digest(env->reset())));
    const auto r = env->step(rng.uniform(env->observation().actions.arity()));
    out.push_back(digest_hex(observation_digest(r.observation)));
  }
  return out;
}

std::vector<std::string> child_digests(const std::string& self, const std::string& env_id, std::uint64_t seed,
                                       int steps) {
  const std::string cmd = "'" + self + "' --digest-child " + env_id + " " + std::to_string(seed) + " " +
                          std::to_string(steps);
  std::vector<std::string> out;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return out;
  char line[64];
  while (std::fgets(line, sizeof line, pipe)) {
    std::string s(line);
    while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.pop_back();
    out.push_back(s);
  }
  pclose(pipe);
  return out;
}

train::TrainConfig load_smoke(const std::string& path) { return train::TrainConfig::load(path); }

Verdict determinism(const std::string& self, const std::string& smoke_path) {
  int matching = 0;
  const auto envs = registered_envs();
  for (const auto& id : envs) {
    const auto here = digest_sequence(id, 12345, 300);
    matching += here == child_digests(self, id, 12345, 300) ? 1 : 0;
  }
  auto cfg = load_smoke(smoke_path);
  cfg.total_frames = 100'000;
  cfg.target_win_rate = 0.0;
  cfg.out_dir.clear();
  const auto a = train::train(cfg);
  const auto b = train::train(cfg);
  bool same = a.metrics.size() == b.metrics.size() && !a.metrics.empty() && a.last_checkpoint == b.last_checkpoint;
  for (std::size_t i = 0; same && i < a.metrics.size(); ++i) same = a.metrics[i].same_run_values(b.metrics[i]);
  return {matching == static_cast<int>(envs.size()) && same,
          std::to_string(matching) + "/" + std::to_string(envs.size()) +
              " envs give identical 300-step digest streams in a child process; two 100k-frame runs give " +
              (same ? "identical" : "different") + " metrics (" + std::to_string(a.metrics.size()) +
              " records, fps excluded)"};
}

Verdict throughput() {
  struct Target {
    const char* env;
    double min_fps;
  };
  bool ok = true;
  std::ostringstream detail;
  for (const Target& t : {Target{"rtfm", 1000}, Target{"messenger", 1000}, Target{"crawler", 1000},
                          Target{"navgraph", 300}}) {
    const auto r = service::bench_fps(t.env, 20'000, 3, 1);
    ok = ok && r.p50 >= t.min_fps;
    detail << t.env << " " << static_cast<long>(r.p50) << " (>= " << t.min_fps << ") ";
  }
  std::string d = detail.str();
  d.pop_back();
  return {ok, "random-policy FPS p50: " + d};
}

Verdict smoke(const std::string& smoke_path) {
  const auto base_cfg = load_smoke(smoke_path);
  const std::vector<std::uint64_t> seeds{1, 2, 3};
  const std::int64_t never = std::numeric_limits<std::int64_t>::max();
  std::vector<std::int64_t> base_frames, state_frames;
  std::ostringstream detail;
  const auto t0 = Clock::now();
  for (bool state : {false, true}) {
    detail << (state ? "+state" : "base") << " frames-to-80%:";
    for (auto seed : seeds) {
      auto cfg = base_cfg;
      cfg.seed = seed;
      cfg.variants.state = state;
      cfg.out_dir.clear();
      const auto r = train::train(cfg);
      double last = 0;
      for (const auto& m : r.metrics) {
        if (m.split == "train") last = m.win_rate;
      }
      const std::int64_t f = r.frames_to_target.value_or(never);
      (state ? state_frames : base_frames).push_back(f);
      detail << " seed" << seed << "=" << (f == never ? "not reached (final " + fmt(last, 2) + ")" : std::to_string(f));
    }
    detail << "; ";
  }
  int reached = 0;
  for (auto f : base_frames) reached += f != never ? 1 : 0;
  auto median = [](std::vector<std::int64_t> v) {
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
  };
  const bool base_median_reached = median(base_frames) != never;
  const bool state_ok = base_median_reached && median(state_frames) <= median(base_frames);
  detail << "base reached in " << reached << "/3 seeds; ";
  if (base_median_reached) {
    detail << "+state median " << (state_ok ? "<=" : ">") << " base median; ";
  } else {
    detail << "+state comparison undefined (base median not reached); ";
  }
  detail << fmt(seconds_since(t0) / 60, 1) << " min";
  return {reached >= 2 && state_ok, detail.str()};
}

std::set<int> parse_only(const std::string& list) {
  std::set<int> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) out.insert(std::stoi(item));
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  const std::string self = "/proc/self/exe";
  std::string smoke_path = SILG_SMOKE_CONFIG;
  std::set<int> only;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--digest-child" && i + 3 < argc) {
      for (const auto& d : digest_sequence(argv[i + 1], std::stoull(argv[i + 2]), std::stoi(argv[i + 3]))) {
        std::cout << d << "\n";
      }
      return 0;
    }
    if (arg == "--only" && i + 1 < argc) only = parse_only(argv[++i]);
    else if (arg == "--smoke-config" && i + 1 < argc) smoke_path = argv[++i];
    else {
      std::cerr << "usage: silg_acceptance [--only 1,2,...] [--smoke-config PATH]\n";
      return 2;
    }
  }
  // Resolve the executable path once so children do not depend on the cwd.
  char resolved[4096];
  const ssize_t n = readlink(self.c_str(), resolved, sizeof resolved - 1);
  const std::string exe = n > 0 ? std::string(resolved, static_cast<std::size_t>(n)) : std::string(argv[0]);

  struct Criterion {
    const char* name;
    std::function<Verdict()> run;
  };
  const std::vector<Criterion> criteria = {
      {"gradient correctness", gradient_correctness},
      {"FiLM2 identity case", film_identity},
      {"oracle equivalence", oracle_equivalence},
      {"split disjointness", split_disjointness},
      {"crawler reward semantics", crawler_rewards},
      {"downsampler", downsampler},
      {"navigation head indexing", nav_indexing},
      {"determinism", [&] { return determinism(exe, smoke_path); }},
      {"throughput", throughput},
      {"desk-scale learning smoke", [&] { return smoke(smoke_path); }},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    Verdict v;
    try {
      v = criteria[i].run();
    } catch (const std::exception& e) {
      v = {false, std::string("threw: ") + e.what()};
    }
    failures += v.pass ? 0 : 1;
    std::cout << (v.pass ? "PASS" : "FAIL") << " [" << id << "] " << criteria[i].name << ": " << v.detail
              << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
