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

#include <chrono>
#include <ctime>
#include <fstream>
#include <sstream>

#include "silg/service.hpp"

namespace silg::service {

namespace {

constexpr const char* kFormat = "silg-trajectory";
constexpr int kVersion = 1;

double now_seconds() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
}

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

[[noreturn]] void bad(int line, const std::string& what) {
  fail(ErrorCode::kParse, "trajectory line " + std::to_string(line) + ": " + what);
}

}  // namespace

std::string Trajectory::to_jsonl() const {
  std::string out;
  Json header;
  header["kind"] = "header";
  header["format"] = kFormat;
  header["version"] = kVersion;
  header["env"] = env;
  header["split"] = split_name(split);
  header["seed"] = seed;
  header["overrides"] = Json(overrides);
  header["initial_digest"] = initial_digest;
  header["started_at"] = started_at;
  header["recorder"] = recorder;
  out += header.dump() + "\n";
  for (const auto& s : steps) {
    Json j;
    j["kind"] = "step";
    j["t"] = s.t;
    j["action"] = s.action;
    j["reward"] = s.reward;
    j["done"] = s.done;
    j["digest"] = s.digest;
    out += j.dump() + "\n";
  }
  Json end;
  end["kind"] = "end";
  end["outcome"] = outcome;
  end["steps"] = steps.size();
  end["wall_seconds"] = wall_seconds;
  out += end.dump() + "\n";
  return out;
}

Trajectory Trajectory::from_jsonl(const std::string& text) {
  Trajectory tr;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  bool have_header = false, have_end = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::exception& e) {
      bad(lineno, std::string("malformed JSON: ") + e.what());
    }
    if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string()) bad(lineno, "missing 'kind'");
    const std::string kind = j["kind"];
    if (have_end) bad(lineno, "content after the end line");
    try {
      if (kind == "header") {
        if (have_header) bad(lineno, "duplicate header");
        if (j.at("format") != kFormat) bad(lineno, "not a silg trajectory");
        if (j.at("version") != kVersion) bad(lineno, "unsupported version");
        tr.env = j.at("env").get<std::string>();
        tr.split = split_from_name(j.at("split").get<std::string>());
        tr.seed = j.at("seed").get<std::uint64_t>();
        tr.overrides = j.at("overrides").get<Overrides>();
        tr.initial_digest = j.at("initial_digest").get<std::string>();
        tr.started_at = j.value("started_at", "");
        tr.recorder = j.value("recorder", "cli");
        have_header = true;
      } else if (kind == "step") {
        if (!have_header) bad(lineno, "step before header");
        TrajectoryStep s;
        s.t = j.at("t").get<int>();
        s.action = j.at("action").get<int>();
        s.reward = j.at("reward").get<double>();
        s.done = j.at("done").get<bool>();
        s.digest = j.at("digest").get<std::string>();
        if (s.t != static_cast<int>(tr.steps.size()) + 1) bad(lineno, "step index out of sequence");
        tr.steps.push_back(std::move(s));
      } else if (kind == "end") {
        if (!have_header) bad(lineno, "end before header");
        tr.outcome = j.at("outcome").get<std::string>();
        tr.wall_seconds = j.value("wall_seconds", 0.0);
        if (j.at("steps").get<std::size_t>() != tr.steps.size()) bad(lineno, "step count mismatch");
        have_end = true;
      } else {
        bad(lineno, "unknown kind '" + kind + "'");
      }
    } catch (const Json::exception& e) {
      bad(lineno, e.what());
    }
  }
  if (!have_header) fail(ErrorCode::kParse, "trajectory has no header line");
  return tr;
}

Trajectory Trajectory::load(const std::string& path) {
  std::ifstream f(path);
  if (!f) fail(ErrorCode::kIo, "cannot open trajectory " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return from_jsonl(ss.str());
}

void Trajectory::save(const std::string& path) const {
  std::ofstream f(path, std::ios::trunc);
  if (!f) fail(ErrorCode::kIo, "cannot write trajectory " + path);
  f << to_jsonl();
  if (!f) fail(ErrorCode::kIo, "short write to " + path);
}

// ---------------------------------------------------------------------------
// Recorder

Recorder::Recorder(std::string env_id, Split split, std::uint64_t seed, Overrides overrides, std::string recorder) {
  env_ = make_env(env_id, split, seed, overrides);
  const Observation& obs = env_->reset(seed);
  traj_.env = std::move(env_id);
  traj_.split = split;
  traj_.seed = seed;
  traj_.overrides = std::move(overrides);
  traj_.initial_digest = digest_hex(observation_digest(obs));
  traj_.started_at = utc_now();
  traj_.recorder = std::move(recorder);
  started_ = now_seconds();
}

StepResult Recorder::step(int action) {
  StepResult r = env_->step(action);
  TrajectoryStep s;
  s.t = static_cast<int>(traj_.steps.size()) + 1;
  s.action = action;
  s.reward = r.reward;
  s.done = r.done;
  s.digest = digest_hex(observation_digest(r.observation));
  traj_.steps.push_back(std::move(s));
  total_reward_ += r.reward;
  if (r.done) traj_.outcome = r.info.win ? "win" : r.info.limit_reached ? "limit" : "loss";
  traj_.wall_seconds = now_seconds() - started_;
  return r;
}

// ---------------------------------------------------------------------------
// Replay

ReplayReport replay(const Trajectory& traj) {
  ReplayReport rep;
  auto env = make_env(traj.env, traj.split, traj.seed, traj.overrides);
  const std::string initial = digest_hex(observation_digest(env->reset(traj.seed)));
  if (initial != traj.initial_digest) {
    rep.first_mismatch = 0;
    rep.detail = "initial observation digest " + initial + " != recorded " + traj.initial_digest;
    return rep;
  }
  for (const auto& s : traj.steps) {
    if (env->done()) {
      rep.first_mismatch = s.t;
      rep.detail = "episode already ended before step " + std::to_string(s.t);
      return rep;
    }
    StepResult r;
    try {
      r = env->step(s.action);
    } catch (const Error& e) {
      rep.first_mismatch = s.t;
      rep.detail = std::string("step rejected: ") + e.what();
      return rep;
    }
    const std::string digest = digest_hex(observation_digest(r.observation));
    std::string why;
    if (digest != s.digest) why = "observation digest " + digest + " != recorded " + s.digest;
    else if (r.reward != s.reward) why = "reward " + std::to_string(r.reward) + " != recorded " + std::to_string(s.reward);
    else if (r.done != s.done) why = std::string("done ") + (r.done ? "true" : "false") + " != recorded";
    if (!why.empty()) {
      rep.first_mismatch = s.t;
      rep.detail = "step " + std::to_string(s.t) + ": " + why;
      return rep;
    }
    ++rep.steps;
    rep.win = r.info.win;
  }
  rep.ok = true;
  return rep;
}

ReplaySummary summarize(const std::vector<ReplayReport>& reports) {
  ReplaySummary s;
  s.files = static_cast<int>(reports.size());
  double wins = 0, steps = 0;
  for (const auto& r : reports) {
    if (!r.ok) continue;
    ++s.clean;
    wins += r.win ? 1 : 0;
    steps += r.steps;
  }
  if (s.clean > 0) {
    s.win_rate = wins / s.clean;
    s.mean_steps = steps / s.clean;
  }
  return s;
}

// ---------------------------------------------------------------------------
// Benchmark

BenchResult bench_fps(const std::string& env_id, std::int64_t frames, int trials, std::uint64_t seed,
                      const Overrides& overrides) {
  if (frames < kMinBenchFrames || trials < 1) {
    fail(ErrorCode::kInvalidArgument, "bench needs frames >= " + std::to_string(kMinBenchFrames) + " and trials >= 1");
  }
  BenchResult res;
  auto env = make_env(env_id, Split::kTrain, static_cast<std::uint64_t>(split_base_seed(Split::kTrain)) + seed,
                      overrides);
  Rng rng(mix_seed(seed, 0x62656e6368));
  for (int t = 0; t < trials; ++t) {
    env->reset();
    const auto t0 = std::chrono::steady_clock::now();
    for (std::int64_t i = 0; i < frames; ++i) {
      const int arity = env->observation().actions.arity();
      const StepResult r = env->step(rng.uniform(arity));
      if (r.done) env->reset();
    }
    const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    res.trials.push_back(dt > 0 ? frames / dt : 0.0);
  }
  std::vector<double> sorted = res.trials;
  std::sort(sorted.begin(), sorted.end());
  res.p50 = sorted[sorted.size() / 2];
  return res;
}

// ---------------------------------------------------------------------------
// Console play

Trajectory play_console(const std::string& env_id, Split split, std::uint64_t seed, std::istream& in, std::ostream& out,
                        const Overrides& overrides) {
  Recorder rec(env_id, split, seed, overrides);
  const auto names = rec.env().action_names();
  double last_reward = 0.0;
  while (!rec.done()) {
    out << render_observation(rec.observation(), names);
    out << "step " << rec.env().steps() << "  reward " << last_reward << "  return " << rec.total_reward() << "\n";
    const int arity = rec.observation().actions.arity();
    int action = -1;
    while (action < 0) {
      out << "action [0-" << arity - 1 << ", q to quit]> " << std::flush;
      std::string line;
      if (!std::getline(in, line)) return rec.trajectory();
      const auto b = line.find_first_not_of(" \t\r");
      if (b == std::string::npos) continue;
      line = line.substr(b, line.find_last_not_of(" \t\r") - b + 1);
      if (line == "q" || line == "quit") return rec.trajectory();
      try {
        std::size_t used = 0;
        const int a = std::stoi(line, &used);
        if (used == line.size() && a >= 0 && a < arity) {
          action = a;
          break;
        }
      } catch (const std::exception&) {
      }
      out << "invalid action '" << line << "'\n";
    }
    last_reward = rec.step(action).reward;
  }
  out << render_observation(rec.observation(), names);
  out << "episode over: " << rec.trajectory().outcome << " after " << rec.env().steps() << " steps, return "
      << rec.total_reward() << "\n";
  return rec.trajectory();
}

}  // namespace silg::service
