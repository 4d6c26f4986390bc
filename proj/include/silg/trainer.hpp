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

// Synchronous advantage actor-critic over a set of environment lanes, plus
// greedy evaluation.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "silg/env.hpp"
#include "silg/sir_model.hpp"

namespace silg::train {

struct Returns {
  std::vector<double> returns;
  std::vector<double> advantages;
};

// R_t = r_t + discount * R_{t+1}, with R_{t+1} = 0 after a done step and
// R_T = bootstrap at the end of the sequence. advantage = R_t - V_t.
Returns compute_returns(const std::vector<double>& rewards, const std::vector<bool>& dones,
                        const std::vector<double>& values, double bootstrap, double discount);

struct TrainConfig {
  std::string env = "rtfm";
  Overrides env_overrides;  // keys given as env.<key> in config files
  std::uint64_t seed = 0;

  // Model
  int embed_dim = 100;
  int rnn_dim = 200;
  int film_layers = 5;
  int film_channels = 0;
  int final_dim = 400;
  sir::Variants variants;

  // Loss and optimizer
  double entropy_cost = 0.05;
  double baseline_cost = 0.5;
  double discount = 0.99;
  double learning_rate = 5e-4;
  double rms_alpha = 0.99;
  double rms_eps = 0.01;
  double grad_clip = 40.0;
  // "sum" adds per-step losses over the batch; "mean" divides by lanes * unroll.
  std::string loss_reduction = "sum";

  // Schedule
  int lanes = 16;
  int unroll = 80;
  std::int64_t total_frames = 1'000'000;
  std::int64_t eval_every = 50'000;  // frames between validations; 0 disables
  int eval_episodes = 100;
  std::int64_t log_every = 10'000;   // frames between train records
  int win_window = 200;              // episodes in the rolling train win rate
  double target_win_rate = 0.0;      // stop once the rolling train win rate reaches this; 0 disables
  std::string out_dir;               // metrics.jsonl, best.ckpt, last.ckpt; empty keeps nothing on disk

  void validate() const;
  sir::ModelConfig model_config(const Observation& first, int vocab_size) const;

  // key=value lines; '#' starts a comment. Unknown keys are rejected.
  static TrainConfig parse(const std::string& text);
  static TrainConfig load(const std::string& path);
  std::string to_text() const;
  // Applies one key=value setting.
  void set(const std::string& key, const std::string& value);
};

struct MetricRecord {
  std::int64_t step = 0;    // optimizer updates so far
  std::int64_t frames = 0;  // environment steps so far, summed over lanes
  std::string split;        // "train" or "val"
  double win_rate = 0.0;
  double mean_return = 0.0;
  double fps = 0.0;         // wall clock; the only field that is not reproducible

  std::string to_json() const;
  // Record equality ignoring fps.
  bool same_run_values(const MetricRecord& other) const;
};

struct TrainResult {
  std::vector<MetricRecord> metrics;
  std::string best_checkpoint;   // checkpoint bytes of the best validation model
  double best_val_win_rate = -1.0;
  std::string last_checkpoint;
  std::int64_t frames = 0;
  std::optional<std::int64_t> frames_to_target;  // first train record at or above target_win_rate
};

using MetricSink = std::function<void(const MetricRecord&)>;

TrainResult train(const TrainConfig& config, const MetricSink& sink = nullptr);

struct EvalResult {
  int episodes = 0;
  double win_rate = 0.0;
  double mean_steps = 0.0;
  double mean_return = 0.0;
};

// Chooses an action for the current observation of `env`.
using Policy = std::function<int(Environment& env, const Observation& obs)>;

// Runs `episodes` episodes with seeds split_base_seed(split) + first_seed + i.
EvalResult evaluate_policy(const std::string& env_id, Split split, int episodes, const Policy& policy,
                           const Overrides& overrides = {}, std::int64_t first_seed = 0);

// Greedy-argmax evaluation of a model.
EvalResult evaluate(sir::SirModel& model, const std::string& env_id, Split split, int episodes,
                    const Overrides& overrides = {}, std::int64_t first_seed = 0);

// Index of the largest logit; ties go to the smallest index.
int argmax(const std::vector<double>& logits);

// RMSProp: v = alpha v + (1 - alpha) g^2; p -= lr g / (sqrt(v) + eps).
class RmsProp {
 public:
  RmsProp(double lr, double alpha, double eps) : lr_(lr), alpha_(alpha), eps_(eps) {}
  void step(nn::ParamStore& params);

 private:
  double lr_, alpha_, eps_;
  std::vector<std::vector<double>> square_avg_;
};

// Scales all gradients so their global L2 norm is at most max_norm; returns
// the norm before clipping.
double clip_grad_norm(nn::ParamStore& params, double max_norm);

}  // namespace silg::train
