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

#include "silg/trainer.hpp"

#include <chrono>
#include <cmath>
#include <deque>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace silg::train {

namespace {

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::int64_t parse_i64(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const long long x = std::stoll(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    fail(ErrorCode::kParse, "config key '" + key + "' expects an integer, got '" + v + "'");
  }
}

double parse_f64(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double x = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    fail(ErrorCode::kParse, "config key '" + key + "' expects a number, got '" + v + "'");
  }
}

int parse_int(const std::string& key, const std::string& v) {
  const std::int64_t x = parse_i64(key, v);
  if (x < INT32_MIN || x > INT32_MAX) fail(ErrorCode::kParse, "config key '" + key + "' out of range");
  return static_cast<int>(x);
}

std::string format_double(double v) {
  std::ostringstream ss;
  ss.precision(17);
  ss << v;
  return ss.str();
}

int sample(const std::vector<double>& probs, double u) {
  double acc = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc) return static_cast<int>(i);
  }
  return static_cast<int>(probs.size()) - 1;
}

}  // namespace

// ---------------------------------------------------------------------------
// Returns

Returns compute_returns(const std::vector<double>& rewards, const std::vector<bool>& dones,
                        const std::vector<double>& values, double bootstrap, double discount) {
  const std::size_t n = rewards.size();
  if (dones.size() != n || values.size() != n) fail(ErrorCode::kInvalidArgument, "compute_returns length mismatch");
  Returns out;
  out.returns.assign(n, 0.0);
  out.advantages.assign(n, 0.0);
  double next = bootstrap;
  for (std::size_t k = n; k-- > 0;) {
    if (dones[k]) next = 0.0;
    next = rewards[k] + discount * next;
    out.returns[k] = next;
    out.advantages[k] = next - values[k];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Config

void TrainConfig::validate() const {
  auto check = [](bool ok, const std::string& what) {
    if (!ok) fail(ErrorCode::kInvalidArgument, "train config: " + what);
  };
  check(entropy_cost >= 0 && baseline_cost >= 0, "loss coefficients must be >= 0");
  check(discount >= 0 && discount <= 1, "discount must be in [0, 1]");
  check(learning_rate > 0, "learning_rate must be > 0");
  check(rms_alpha >= 0 && rms_alpha < 1 && rms_eps > 0, "bad RMSProp settings");
  check(grad_clip > 0, "grad_clip must be > 0");
  check(lanes >= 1 && unroll >= 1, "lanes and unroll must be >= 1");
  check(total_frames >= 0 && eval_every >= 0 && log_every > 0, "bad schedule");
  check(eval_episodes >= 1 && win_window >= 1, "eval_episodes and win_window must be >= 1");
  check(target_win_rate >= 0 && target_win_rate <= 1, "target_win_rate must be in [0, 1]");
}

sir::ModelConfig TrainConfig::model_config(const Observation& first, int vocab_size) const {
  sir::ModelConfig m = sir::ModelConfig::for_observation(first, vocab_size);
  m.embed_dim = embed_dim;
  m.rnn_dim = rnn_dim;
  m.film_layers = film_layers;
  m.film_channels = film_channels;
  m.final_dim = final_dim;
  m.variants = variants;
  return m;
}

void TrainConfig::set(const std::string& key, const std::string& value) {
  if (key.rfind("env.", 0) == 0) {
    env_overrides[key.substr(4)] = value;
  } else if (key == "env") {
    env = value;
  } else if (key == "seed") {
    seed = static_cast<std::uint64_t>(parse_i64(key, value));
  } else if (key == "embed_dim") {
    embed_dim = parse_int(key, value);
  } else if (key == "rnn_dim") {
    rnn_dim = parse_int(key, value);
  } else if (key == "film_layers") {
    film_layers = parse_int(key, value);
  } else if (key == "film_channels") {
    film_channels = parse_int(key, value);
  } else if (key == "final_dim") {
    final_dim = parse_int(key, value);
  } else if (key == "variants") {
    variants = {};
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      if (item.empty() || item == "none") continue;
      if (item == "state") {
        variants.state = true;
      } else if (item == "local_conv") {
        variants.local_conv = true;
      } else if (item == "entity_attn") {
        variants.entity_attn = true;
      } else if (item == "concat_fields") {
        variants.concat_fields = true;
      } else {
        fail(ErrorCode::kParse, "unknown variant '" + item + "'");
      }
    }
  } else if (key == "entropy_cost") {
    entropy_cost = parse_f64(key, value);
  } else if (key == "baseline_cost") {
    baseline_cost = parse_f64(key, value);
  } else if (key == "discount") {
    discount = parse_f64(key, value);
  } else if (key == "learning_rate") {
    learning_rate = parse_f64(key, value);
  } else if (key == "rms_alpha") {
    rms_alpha = parse_f64(key, value);
  } else if (key == "rms_eps") {
    rms_eps = parse_f64(key, value);
  } else if (key == "grad_clip") {
    grad_clip = parse_f64(key, value);
  } else if (key == "loss_reduction") {
    if (value != "sum" && value != "mean") fail(ErrorCode::kParse, "loss_reduction must be sum or mean");
    loss_reduction = value;
  } else if (key == "lanes") {
    lanes = parse_int(key, value);
  } else if (key == "unroll") {
    unroll = parse_int(key, value);
  } else if (key == "total_frames") {
    total_frames = parse_i64(key, value);
  } else if (key == "eval_every") {
    eval_every = parse_i64(key, value);
  } else if (key == "eval_episodes") {
    eval_episodes = parse_int(key, value);
  } else if (key == "log_every") {
    log_every = parse_i64(key, value);
  } else if (key == "win_window") {
    win_window = parse_int(key, value);
  } else if (key == "target_win_rate") {
    target_win_rate = parse_f64(key, value);
  } else if (key == "out_dir") {
    out_dir = value;
  } else {
    fail(ErrorCode::kParse, "unknown train config key '" + key + "'");
  }
}

TrainConfig TrainConfig::parse(const std::string& text) {
  TrainConfig c;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(ErrorCode::kParse, "line " + std::to_string(lineno) + ": expected key=value");
    c.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  c.validate();
  return c;
}

TrainConfig TrainConfig::load(const std::string& path) {
  std::ifstream f(path);
  if (!f) fail(ErrorCode::kIo, "cannot open train config " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse(ss.str());
}

std::string TrainConfig::to_text() const {
  std::ostringstream o;
  o << "env=" << env << "\n";
  for (const auto& [k, v] : env_overrides) o << "env." << k << "=" << v << "\n";
  o << "seed=" << seed << "\n";
  o << "embed_dim=" << embed_dim << "\nrnn_dim=" << rnn_dim << "\nfilm_layers=" << film_layers
    << "\nfilm_channels=" << film_channels << "\nfinal_dim=" << final_dim << "\n";
  std::vector<std::string> vs;
  if (variants.state) vs.push_back("state");
  if (variants.local_conv) vs.push_back("local_conv");
  if (variants.entity_attn) vs.push_back("entity_attn");
  if (variants.concat_fields) vs.push_back("concat_fields");
  o << "variants=";
  for (std::size_t i = 0; i < vs.size(); ++i) o << (i ? "," : "") << vs[i];
  if (vs.empty()) o << "none";
  o << "\n";
  o << "entropy_cost=" << format_double(entropy_cost) << "\nbaseline_cost=" << format_double(baseline_cost)
    << "\ndiscount=" << format_double(discount) << "\nlearning_rate=" << format_double(learning_rate)
    << "\nrms_alpha=" << format_double(rms_alpha) << "\nrms_eps=" << format_double(rms_eps)
    << "\ngrad_clip=" << format_double(grad_clip) << "\nloss_reduction=" << loss_reduction << "\n";
  o << "lanes=" << lanes << "\nunroll=" << unroll << "\ntotal_frames=" << total_frames << "\neval_every=" << eval_every
    << "\neval_episodes=" << eval_episodes << "\nlog_every=" << log_every << "\nwin_window=" << win_window
    << "\ntarget_win_rate=" << format_double(target_win_rate) << "\n";
  if (!out_dir.empty()) o << "out_dir=" << out_dir << "\n";
  return o.str();
}

// ---------------------------------------------------------------------------
// Metrics

std::string MetricRecord::to_json() const {
  nlohmann::json j;
  j["step"] = step;
  j["frames"] = frames;
  j["split"] = split;
  j["win_rate"] = win_rate;
  j["return"] = mean_return;
  j["fps"] = fps;
  return j.dump();
}

bool MetricRecord::same_run_values(const MetricRecord& o) const {
  return step == o.step && frames == o.frames && split == o.split && win_rate == o.win_rate &&
         mean_return == o.mean_return;
}

// ---------------------------------------------------------------------------
// Optimizer

void RmsProp::step(nn::ParamStore& params) {
  auto all = params.all();
  if (square_avg_.empty()) {
    for (const nn::Param* p : all) square_avg_.emplace_back(p->size(), 0.0);
  }
  for (std::size_t k = 0; k < all.size(); ++k) {
    nn::Param& p = *all[k];
    auto& v = square_avg_[k];
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double g = p.grad[i];
      v[i] = alpha_ * v[i] + (1.0 - alpha_) * g * g;
      p.value[i] -= lr_ * g / (std::sqrt(v[i]) + eps_);
    }
  }
}

double clip_grad_norm(nn::ParamStore& params, double max_norm) {
  double total = 0;
  for (const nn::Param* p : params.all()) {
    for (double g : p->grad) total += g * g;
  }
  const double norm = std::sqrt(total);
  if (norm > max_norm) {
    const double s = max_norm / norm;
    for (nn::Param* p : params.all()) {
      for (double& g : p->grad) g *= s;
    }
  }
  return norm;
}

int argmax(const std::vector<double>& logits) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(logits.size()); ++i) {
    if (logits[i] > logits[best]) best = i;
  }
  return best;
}

// ---------------------------------------------------------------------------
// Evaluation

EvalResult evaluate_policy(const std::string& env_id, Split split, int episodes, const Policy& policy,
                           const Overrides& overrides, std::int64_t first_seed) {
  if (episodes < 1) fail(ErrorCode::kInvalidArgument, "evaluate needs at least one episode");
  auto env = make_env(env_id, split, 0, overrides);
  EvalResult r;
  r.episodes = episodes;
  double wins = 0, steps = 0, ret = 0;
  for (int e = 0; e < episodes; ++e) {
    env->reset(static_cast<std::uint64_t>(split_base_seed(split) + first_seed + e));
    bool won = false;
    while (!env->done()) {
      const int a = policy(*env, env->observation());
      const StepResult s = env->step(a);
      ret += s.reward;
      won = s.info.win;
    }
    wins += won ? 1 : 0;
    steps += env->steps();
  }
  r.win_rate = wins / episodes;
  r.mean_steps = steps / episodes;
  r.mean_return = ret / episodes;
  return r;
}

EvalResult evaluate(sir::SirModel& model, const std::string& env_id, Split split, int episodes,
                    const Overrides& overrides, std::int64_t first_seed) {
  // Episode-local context and recurrent state, reset whenever the seed changes.
  std::unique_ptr<sir::ForwardContext> ctx;
  sir::RecurrentState state;
  std::uint64_t current = ~std::uint64_t{0};
  Policy greedy = [&](Environment& env, const Observation& obs) {
    if (!ctx || env.episode_seed() != current || env.steps() == 0) {
      ctx = std::make_unique<sir::ForwardContext>();
      state = {};
      current = env.episode_seed();
    }
    return argmax(model.evaluate(*ctx, obs, &state).logits);
  };
  return evaluate_policy(env_id, split, episodes, greedy, overrides, first_seed);
}

// ---------------------------------------------------------------------------
// Training

TrainResult train(const TrainConfig& cfg, const MetricSink& sink) {
  cfg.validate();
  using Clock = std::chrono::steady_clock;

  std::vector<std::unique_ptr<Environment>> envs;
  for (int l = 0; l < cfg.lanes; ++l) envs.push_back(make_env(cfg.env, Split::kTrain, 0, cfg.env_overrides));
  Rng rng(mix_seed(cfg.seed, 0x747261696e));
  const std::int64_t base = split_base_seed(Split::kTrain);
  auto draw_seed = [&] { return static_cast<std::uint64_t>(base + rng.uniform(1'000'000)); };

  std::vector<Observation> obs;
  for (auto& e : envs) obs.push_back(e->reset(draw_seed()));
  sir::SirModel model(cfg.model_config(obs[0], envs[0]->vocabulary().size()), cfg.seed);

  TrainResult result;
  result.best_checkpoint = sir::checkpoint_bytes(model);
  result.last_checkpoint = result.best_checkpoint;

  std::ofstream metrics_file;
  if (!cfg.out_dir.empty()) {
    std::filesystem::create_directories(cfg.out_dir);
    metrics_file.open(std::filesystem::path(cfg.out_dir) / "metrics.jsonl", std::ios::trunc);
    if (!metrics_file) fail(ErrorCode::kIo, "cannot write metrics under " + cfg.out_dir);
    std::ofstream(std::filesystem::path(cfg.out_dir) / "config.txt") << cfg.to_text();
  }
  auto emit = [&](const MetricRecord& m) {
    result.metrics.push_back(m);
    if (metrics_file.is_open()) metrics_file << m.to_json() << "\n" << std::flush;
    if (sink) sink(m);
  };
  auto save = [&](const std::string& name, const std::string& bytes) {
    if (cfg.out_dir.empty()) return;
    const auto path = std::filesystem::path(cfg.out_dir) / name;
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!f) fail(ErrorCode::kIo, "cannot write " + path.string());
  };
  save("best.ckpt", result.best_checkpoint);
  if (cfg.total_frames == 0) return result;

  RmsProp opt(cfg.learning_rate, cfg.rms_alpha, cfg.rms_eps);
  std::vector<sir::RecurrentState> states(cfg.lanes);
  std::vector<double> episode_return(cfg.lanes, 0.0);
  std::deque<std::pair<bool, double>> window;

  std::int64_t frames = 0, step = 0;
  std::int64_t next_log = cfg.log_every;
  std::int64_t next_eval = cfg.eval_every > 0 ? cfg.eval_every : -1;
  auto last_time = Clock::now();
  std::int64_t last_frames = 0;
  const double norm = cfg.loss_reduction == "mean" ? 1.0 / (static_cast<double>(cfg.lanes) * cfg.unroll) : 1.0;

  while (frames < cfg.total_frames) {
    for (int l = 0; l < cfg.lanes; ++l) {
      Environment& env = *envs[l];
      sir::ForwardContext ctx;
      std::vector<nn::Var> logits, values;
      std::vector<int> actions;
      std::vector<double> rewards, value_numbers;
      std::vector<bool> dones;
      for (int t = 0; t < cfg.unroll; ++t) {
        const sir::Outputs out = model.forward(ctx, obs[l], &states[l]);
        const std::vector<double> probs = nn::softmax(ctx.tape.value(out.logits));
        const int a = sample(probs, rng.uniform01());
        logits.push_back(out.logits);
        values.push_back(out.value);
        value_numbers.push_back(ctx.tape.scalar(out.value));
        actions.push_back(a);
        sir::RecurrentState next = model.next_state(ctx.tape, out);

        StepResult s = env.step(a);
        ++frames;
        rewards.push_back(s.reward);
        dones.push_back(s.done);
        episode_return[l] += s.reward;
        if (s.done) {
          window.emplace_back(s.info.win, episode_return[l]);
          if (static_cast<int>(window.size()) > cfg.win_window) window.pop_front();
          episode_return[l] = 0.0;
          obs[l] = env.reset(draw_seed());
          states[l] = {};
        } else {
          obs[l] = std::move(s.observation);
          states[l] = std::move(next);
        }
      }
      double bootstrap = 0.0;
      if (!dones.back()) {
        sir::RecurrentState copy = states[l];
        bootstrap = model.evaluate(ctx, obs[l], &copy).value;
      }
      const Returns ret = compute_returns(rewards, dones, value_numbers, bootstrap, cfg.discount);
      std::vector<nn::Var> terms;
      for (int t = 0; t < cfg.unroll; ++t) {
        terms.push_back(nn::policy_loss(ctx.tape, logits[t], actions[t], ret.advantages[t], cfg.entropy_cost));
        terms.push_back(nn::value_loss(ctx.tape, values[t], ret.returns[t], cfg.baseline_cost));
      }
      const nn::Var loss = nn::sum(ctx.tape, terms);
      if (!std::isfinite(ctx.tape.scalar(loss))) {
        fail(ErrorCode::kNumerical, "non-finite loss at update " + std::to_string(step) + " lane " +
                                        std::to_string(l) + " (frames " + std::to_string(frames) + ")");
      }
      ctx.tape.backward(loss, norm);
    }
    clip_grad_norm(model.params(), cfg.grad_clip);
    opt.step(model.params());
    model.pin_pad();
    model.params().zero_grad();
    ++step;

    if (frames >= next_log) {
      next_log += cfg.log_every * ((frames - next_log) / cfg.log_every + 1);
      MetricRecord m;
      m.step = step;
      m.frames = frames;
      m.split = "train";
      if (!window.empty()) {
        double wins = 0, total = 0;
        for (const auto& [w, r] : window) {
          wins += w ? 1 : 0;
          total += r;
        }
        m.win_rate = wins / window.size();
        m.mean_return = total / window.size();
      }
      const auto now = Clock::now();
      const double dt = std::chrono::duration<double>(now - last_time).count();
      m.fps = dt > 0 ? (frames - last_frames) / dt : 0.0;
      last_time = now;
      last_frames = frames;
      emit(m);
      if (cfg.target_win_rate > 0 && static_cast<int>(window.size()) >= cfg.win_window &&
          m.win_rate >= cfg.target_win_rate && !result.frames_to_target) {
        result.frames_to_target = frames;
      }
    }
    if (next_eval > 0 && frames >= next_eval) {
      next_eval += cfg.eval_every * ((frames - next_eval) / cfg.eval_every + 1);
      const auto t0 = Clock::now();
      const EvalResult ev = evaluate(model, cfg.env, Split::kVal, cfg.eval_episodes, cfg.env_overrides);
      MetricRecord m;
      m.step = step;
      m.frames = frames;
      m.split = "val";
      m.win_rate = ev.win_rate;
      m.mean_return = ev.mean_return;
      const double dt = std::chrono::duration<double>(Clock::now() - t0).count();
      m.fps = dt > 0 ? ev.mean_steps * ev.episodes / dt : 0.0;
      emit(m);
      if (ev.win_rate > result.best_val_win_rate) {
        result.best_val_win_rate = ev.win_rate;
        result.best_checkpoint = sir::checkpoint_bytes(model);
        save("best.ckpt", result.best_checkpoint);
      }
      last_time = Clock::now();
    }
    if (result.frames_to_target) break;
  }
  result.frames = frames;
  result.last_checkpoint = sir::checkpoint_bytes(model);
  save("last.ckpt", result.last_checkpoint);
  return result;
}

}  // namespace silg::train
