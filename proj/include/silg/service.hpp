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

// Operator surface: JSON views of observations, the session protocol,
// trajectory recording and replay, throughput benchmarks and console play.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "silg/env.hpp"

namespace silg::service {

using Json = nlohmann::json;

Split split_from_name(std::string_view name);

// ---------------------------------------------------------------------------
// Observation view

// Everything a client needs to draw and act on an observation.
struct ObsView {
  int height = 0;
  int width = 0;
  int words_per_cell = 0;
  std::vector<TokenId> grid;              // height * width * words_per_cell
  std::map<TokenId, std::string> legend;  // id -> word
  std::vector<std::string> field_names;
  std::vector<std::string> field_text;
  std::string joint_text;
  std::string action_kind;                // fixed | text_choices | nav_coordinates
  int fixed_count = 0;
  std::vector<std::string> action_names;  // fixed only, may be empty
  std::vector<std::string> choices;       // text_choices only
  std::vector<int> columns;               // nav_coordinates only
  bool stop_option = false;
  std::optional<Cell> agent;
  std::string digest;                     // observation digest, 16 hex digits

  static ObsView from(const Observation& obs, const std::vector<std::string>& action_names = {});
  int arity() const;

  Json to_json() const;
  static ObsView from_json(const Json& j);
  friend bool operator==(const ObsView&, const ObsView&) = default;
};

// ---------------------------------------------------------------------------
// Session protocol

enum class MessageType { kReset, kStep, kObs, kError, kDone };

const char* message_type_name(MessageType t);

// One protocol message. Which fields are meaningful depends on `type`:
//   reset: env, split, seed (optional), overrides
//   step:  action
//   obs:   obs, reward, done, step
//   error: code, message
//   done:  outcome, steps, total_reward, trajectory (JSONL text)
struct SessionMessage {
  MessageType type = MessageType::kReset;
  std::string env;
  std::string split = "train";
  std::optional<std::uint64_t> seed;
  Overrides overrides;
  int action = 0;
  ObsView obs;
  double reward = 0.0;
  bool done = false;
  int step = 0;
  std::string code;
  std::string message;
  std::string outcome;
  double total_reward = 0.0;
  std::string trajectory;

  Json to_json() const;
  std::string serialize() const { return to_json().dump(); }
  // Validates shape and types; throws kParse with the offending field.
  static SessionMessage from_json(const Json& j);
  static SessionMessage parse(const std::string& text);
  friend bool operator==(const SessionMessage&, const SessionMessage&) = default;
};

// ---------------------------------------------------------------------------
// Trajectories

struct TrajectoryStep {
  int t = 0;  // 1-based step index
  int action = 0;
  double reward = 0.0;
  bool done = false;
  std::string digest;  // digest of the observation after the step
  friend bool operator==(const TrajectoryStep&, const TrajectoryStep&) = default;
};

struct Trajectory {
  std::string env;
  Split split = Split::kTrain;
  std::uint64_t seed = 0;
  Overrides overrides;
  std::string initial_digest;
  std::vector<TrajectoryStep> steps;
  std::string outcome = "incomplete";  // win | loss | limit | incomplete
  std::string started_at;              // UTC, ISO 8601
  double wall_seconds = 0.0;
  std::string recorder = "cli";

  // Header line, one line per step, then an end line.
  std::string to_jsonl() const;
  static Trajectory from_jsonl(const std::string& text);
  static Trajectory load(const std::string& path);
  void save(const std::string& path) const;
};

// Drives an environment and records every step.
class Recorder {
 public:
  Recorder(std::string env_id, Split split, std::uint64_t seed, Overrides overrides = {}, std::string recorder = "cli");

  Environment& env() { return *env_; }
  const Observation& observation() const { return env_->observation(); }
  StepResult step(int action);
  bool done() const { return env_->done(); }
  const Trajectory& trajectory() const { return traj_; }
  double total_reward() const { return total_reward_; }

 private:
  std::unique_ptr<Environment> env_;
  Trajectory traj_;
  double total_reward_ = 0.0;
  double started_ = 0.0;
};

struct ReplayReport {
  bool ok = false;
  int steps = 0;
  bool win = false;
  std::optional<int> first_mismatch;  // step index t (0 = initial observation)
  std::string detail;
};

ReplayReport replay(const Trajectory& traj);

struct ReplaySummary {
  int files = 0;
  int clean = 0;
  double win_rate = 0.0;
  double mean_steps = 0.0;
};

ReplaySummary summarize(const std::vector<ReplayReport>& reports);

// ---------------------------------------------------------------------------
// Benchmarks

struct BenchResult {
  std::vector<double> trials;  // steps per second
  double p50 = 0.0;
};

inline constexpr std::int64_t kMinBenchFrames = 10'000;

// Random valid actions for `frames` steps per trial, resetting on done.
BenchResult bench_fps(const std::string& env_id, std::int64_t frames, int trials = 5, std::uint64_t seed = 0,
                      const Overrides& overrides = {});

// ---------------------------------------------------------------------------
// Console play

// Renders each observation to `out`, reads action indices from `in`
// ("q" or end of input quits), re-prompting on invalid input.
Trajectory play_console(const std::string& env_id, Split split, std::uint64_t seed, std::istream& in, std::ostream& out,
                        const Overrides& overrides = {});

// ---------------------------------------------------------------------------
// Sessions

// Protocol state for one connection: a single environment instance.
class Session {
 public:
  // Handles one client message and returns the replies in order. Malformed
  // input yields an error reply and leaves the session unchanged.
  std::vector<SessionMessage> handle(const std::string& text);
  std::vector<SessionMessage> handle(const SessionMessage& msg);

  bool active() const { return recorder_ != nullptr; }

 private:
  SessionMessage obs_message(double reward, bool done) const;

  std::unique_ptr<Recorder> recorder_;
  std::string env_id_;
  Split split_ = Split::kTrain;
  Overrides overrides_;
  std::uint64_t next_seed_ = 0;
};

SessionMessage error_message(const Error& e);

struct ServerOptions {
  std::string host = "127.0.0.1";
  int port = 8765;        // 0 picks a free port
  int idle_timeout_s = 300;
  int threads = 2;
};

// WebSocket server speaking the session protocol, one Session per connection.
class SessionServer {
 public:
  explicit SessionServer(ServerOptions options);
  ~SessionServer();
  SessionServer(const SessionServer&) = delete;
  SessionServer& operator=(const SessionServer&) = delete;

  // Binds and starts serving in background threads; returns the bound port.
  int start();
  // Blocks until stop() is called from another thread or a signal handler.
  void wait();
  void stop();
  int port() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace silg::service
