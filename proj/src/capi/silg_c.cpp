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

#include "silg/silg.h"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iostream>
#include <memory>

#include "silg/navgraph.hpp"
#include "silg/service.hpp"
#include "silg/sir_model.hpp"
#include "silg/trainer.hpp"

using silg::ErrorCode;
using silg::service::Json;

struct silg_env {
  std::unique_ptr<silg::Environment> env;
};

struct silg_server {
  std::unique_ptr<silg::service::SessionServer> server;
};

struct silg_session {
  silg::service::Session session;
};

namespace {

thread_local std::string g_last_error;

template <typename F>
silg_status guard(F&& body) {
  try {
    body();
    return SILG_OK;
  } catch (const silg::Error& e) {
    g_last_error = e.what();
    return static_cast<silg_status>(static_cast<int>(e.code()));
  } catch (const Json::exception& e) {
    g_last_error = e.what();
    return SILG_PARSE;
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return SILG_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return SILG_INTERNAL;
  } catch (...) {
    g_last_error = "unknown failure";
    return SILG_INTERNAL;
  }
}

void need(const void* p, const char* what) {
  if (!p) silg::fail(ErrorCode::kInvalidArgument, std::string(what) + " must not be NULL");
}

char* dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void put(char** out, const std::string& s) {
  need(out, "output pointer");
  *out = dup(s);
}

silg::Overrides parse_overrides(const char* json) {
  silg::Overrides out;
  if (!json || !*json) return out;
  Json j;
  try {
    j = Json::parse(json);
  } catch (const Json::exception& e) {
    silg::fail(ErrorCode::kParse, std::string("overrides: ") + e.what());
  }
  if (!j.is_object()) silg::fail(ErrorCode::kParse, "overrides must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (it.value().is_string()) out[it.key()] = it.value().get<std::string>();
    else if (it.value().is_number() || it.value().is_boolean()) out[it.key()] = it.value().dump();
    else silg::fail(ErrorCode::kParse, "override '" + it.key() + "' must be a string or number");
  }
  return out;
}

silg::Split parse_split(const char* split) {
  return silg::service::split_from_name(split ? split : "train");
}

Json report_json(const silg::service::ReplayReport& r) {
  Json j;
  j["ok"] = r.ok;
  j["steps"] = r.steps;
  j["win"] = r.win;
  j["first_mismatch"] = r.first_mismatch ? Json(*r.first_mismatch) : Json(nullptr);
  j["detail"] = r.detail;
  return j;
}

}  // namespace

extern "C" {

const char* silg_version(void) { return "0.1.0"; }

const char* silg_status_name(silg_status status) {
  if (status == SILG_OK) return "ok";
  if (status < SILG_INVALID_ARGUMENT || status > SILG_INTERNAL) return "unknown";
  return silg::error_code_name(static_cast<ErrorCode>(status));
}

const char* silg_last_error(void) { return g_last_error.c_str(); }

void silg_free(char* text) { std::free(text); }

silg_status silg_env_list(char** out_json) {
  return guard([&] { put(out_json, Json(silg::registered_envs()).dump()); });
}

// ---------------------------------------------------------------------------
// Environments

silg_status silg_env_create(const char* env_id, const char* split, uint64_t seed, const char* overrides_json,
                            silg_env** out) {
  return guard([&] {
    need(env_id, "env_id");
    need(out, "out");
    auto h = std::make_unique<silg_env>();
    h->env = silg::make_env(env_id, parse_split(split), seed, parse_overrides(overrides_json));
    *out = h.release();
  });
}

void silg_env_destroy(silg_env* env) { delete env; }

silg_status silg_env_reset(silg_env* env) {
  return guard([&] {
    need(env, "env");
    env->env->reset();
  });
}

silg_status silg_env_reset_seed(silg_env* env, uint64_t seed) {
  return guard([&] {
    need(env, "env");
    env->env->reset(seed);
  });
}

silg_status silg_env_step(silg_env* env, int action, double* reward, int* done, int* win) {
  return guard([&] {
    need(env, "env");
    const silg::StepResult r = env->env->step(action);
    if (reward) *reward = r.reward;
    if (done) *done = r.done ? 1 : 0;
    if (win) *win = r.info.win ? 1 : 0;
  });
}

silg_status silg_env_num_actions(const silg_env* env, int* out) {
  return guard([&] {
    need(env, "env");
    need(out, "out");
    *out = env->env->observation().actions.arity();
  });
}

silg_status silg_env_steps(const silg_env* env, int* out) {
  return guard([&] {
    need(env, "env");
    need(out, "out");
    *out = env->env->steps();
  });
}

silg_status silg_env_observation_json(const silg_env* env, char** out_json) {
  return guard([&] {
    need(env, "env");
    const auto view = silg::service::ObsView::from(env->env->observation(), env->env->action_names());
    put(out_json, view.to_json().dump());
  });
}

silg_status silg_env_digest(const silg_env* env, char** out_hex) {
  return guard([&] {
    need(env, "env");
    put(out_hex, silg::digest_hex(silg::observation_digest(env->env->observation())));
  });
}

silg_status silg_env_render(const silg_env* env, char** out_text) {
  return guard([&] {
    need(env, "env");
    put(out_text, silg::render_observation(env->env->observation(), env->env->action_names()));
  });
}

// ---------------------------------------------------------------------------
// Play, trajectories, benchmark

silg_status silg_play_console(const char* env_id, const char* split, uint64_t seed, const char* overrides_json,
                              const char* trajectory_path, char** out_outcome) {
  return guard([&] {
    need(env_id, "env_id");
    const auto traj = silg::service::play_console(env_id, parse_split(split), seed, std::cin, std::cout,
                                                  parse_overrides(overrides_json));
    if (trajectory_path) traj.save(trajectory_path);
    if (out_outcome) *out_outcome = dup(traj.outcome);
  });
}

silg_status silg_replay_file(const char* path, char** out_report_json) {
  return guard([&] {
    need(path, "path");
    const auto report = silg::service::replay(silg::service::Trajectory::load(path));
    put(out_report_json, report_json(report).dump());
  });
}

silg_status silg_replay_files(const char* const* paths, int count, char** out_summary_json) {
  return guard([&] {
    if (count < 0 || (count > 0 && !paths)) silg::fail(ErrorCode::kInvalidArgument, "bad path list");
    std::vector<silg::service::ReplayReport> reports;
    Json list = Json::array();
    for (int i = 0; i < count; ++i) {
      need(paths[i], "path");
      silg::service::ReplayReport r;
      try {
        r = silg::service::replay(silg::service::Trajectory::load(paths[i]));
      } catch (const silg::Error& e) {
        r.detail = e.what();
      }
      Json j = report_json(r);
      j["file"] = paths[i];
      list.push_back(j);
      reports.push_back(std::move(r));
    }
    const auto s = silg::service::summarize(reports);
    Json out;
    out["files"] = s.files;
    out["clean"] = s.clean;
    out["win_rate"] = s.win_rate;
    out["mean_steps"] = s.mean_steps;
    out["reports"] = list;
    put(out_summary_json, out.dump());
  });
}

silg_status silg_bench(const char* env_id, int64_t frames, int trials, uint64_t seed, const char* overrides_json,
                       char** out_json) {
  return guard([&] {
    need(env_id, "env_id");
    const auto r = silg::service::bench_fps(env_id, frames, trials, seed, parse_overrides(overrides_json));
    Json j;
    j["env"] = env_id;
    j["frames"] = frames;
    j["trials"] = r.trials;
    j["p50"] = r.p50;
    put(out_json, j.dump());
  });
}

// ---------------------------------------------------------------------------
// Training and evaluation

silg_status silg_train(const char* config_text, silg_metric_fn on_metric, void* user, char** out_result_json) {
  return guard([&] {
    need(config_text, "config_text");
    const auto cfg = silg::train::TrainConfig::parse(config_text);
    silg::train::MetricSink sink;
    if (on_metric) sink = [&](const silg::train::MetricRecord& m) { on_metric(m.to_json().c_str(), user); };
    const auto r = silg::train::train(cfg, sink);
    Json j;
    j["frames"] = r.frames;
    j["best_val_win_rate"] = r.best_val_win_rate;
    j["frames_to_target"] = r.frames_to_target ? Json(*r.frames_to_target) : Json(nullptr);
    if (out_result_json) *out_result_json = dup(j.dump());
  });
}

silg_status silg_evaluate(const char* checkpoint_path, const char* env_id, const char* split, int episodes,
                          const char* overrides_json, char** out_json) {
  return guard([&] {
    need(checkpoint_path, "checkpoint_path");
    need(env_id, "env_id");
    if (episodes < 1) silg::fail(ErrorCode::kInvalidArgument, "episodes must be >= 1");
    auto model = silg::sir::load_checkpoint(checkpoint_path);
    const auto r = silg::train::evaluate(model, env_id, parse_split(split), episodes, parse_overrides(overrides_json));
    Json j;
    j["episodes"] = r.episodes;
    j["win_rate"] = r.win_rate;
    j["mean_steps"] = r.mean_steps;
    j["mean_return"] = r.mean_return;
    put(out_json, j.dump());
  });
}

// ---------------------------------------------------------------------------
// Session service

silg_status silg_server_start(const char* host, int port, int idle_timeout_s, int threads, silg_server** out,
                              int* out_port) {
  return guard([&] {
    need(out, "out");
    if (port < 0 || port > 65535) silg::fail(ErrorCode::kInvalidArgument, "port out of range");
    silg::service::ServerOptions opt;
    if (host) opt.host = host;
    opt.port = port;
    opt.idle_timeout_s = idle_timeout_s;
    opt.threads = threads;
    auto h = std::make_unique<silg_server>();
    h->server = std::make_unique<silg::service::SessionServer>(opt);
    const int bound = h->server->start();
    if (out_port) *out_port = bound;
    *out = h.release();
  });
}

silg_status silg_server_wait(silg_server* server) {
  return guard([&] {
    need(server, "server");
    server->server->wait();
  });
}

void silg_server_stop(silg_server* server) {
  if (server) server->server->stop();
}

void silg_server_destroy(silg_server* server) { delete server; }

silg_status silg_session_create(silg_session** out) {
  return guard([&] {
    need(out, "out");
    *out = new silg_session();
  });
}

silg_status silg_session_handle(silg_session* session, const char* message_json, char** out_replies_json) {
  return guard([&] {
    need(session, "session");
    need(message_json, "message_json");
    Json replies = Json::array();
    for (const auto& m : session->session.handle(std::string(message_json))) replies.push_back(m.to_json());
    put(out_replies_json, replies.dump());
  });
}

void silg_session_destroy(silg_session* session) { delete session; }

// ---------------------------------------------------------------------------
// Navigation graph tools

silg_status silg_downsample(const char* map_json, int patch, double alpha, const char* frequency_json,
                            char** out_map_json) {
  return guard([&] {
    namespace ng = silg::navgraph;
    need(map_json, "map_json");
    const Json j = Json::parse(map_json);
    ng::SegMap map;
    map.height = j.at("height").get<int>();
    map.width = j.at("width").get<int>();
    map.classes = j.at("classes").get<std::vector<int>>();
    if (map.height < 1 || map.width < 1 ||
        map.classes.size() != static_cast<std::size_t>(map.height) * map.width) {
      silg::fail(ErrorCode::kInvalidArgument, "map classes must hold height * width ids");
    }
    std::vector<double> freq;
    if (frequency_json) {
      freq = Json::parse(frequency_json).get<std::vector<double>>();
    } else {
      int num_classes = ng::kNumClasses;
      for (int c : map.classes) num_classes = std::max(num_classes, c + 1);
      freq = ng::class_frequency({&map}, num_classes);
    }
    const ng::SegMap out = ng::downsample(map, patch, freq, alpha);
    put(out_map_json, Json{{"height", out.height}, {"width", out.width}, {"classes", out.classes}}.dump());
  });
}

silg_status silg_export_graph(char** out_archive_json) {
  return guard([&] { put(out_archive_json, silg::navgraph::export_archive(*silg::navgraph::shared_graph({}))); });
}

}  // extern "C"
