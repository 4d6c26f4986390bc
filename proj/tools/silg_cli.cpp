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

// silg command line. Talks to the library only through the C API.

#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "silg/silg.h"

namespace {

using Json = nlohmann::json;

struct CliError {
  int exit_code;
};

// Owns a string returned by the library.
struct Owned {
  char* p = nullptr;
  ~Owned() { silg_free(p); }
  std::string str() const { return p ? p : ""; }
};

void check(silg_status s) {
  if (s == SILG_OK) return;
  std::cerr << "error [" << silg_status_name(s) << "]: " << silg_last_error() << "\n";
  throw CliError{2};
}

std::string overrides_json(const std::vector<std::string>& sets) {
  Json o = Json::object();
  for (const auto& kv : sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) {
      std::cerr << "error: --set expects key=value, got '" << kv << "'\n";
      throw CliError{2};
    }
    o[kv.substr(0, eq)] = kv.substr(eq + 1);
  }
  return o.dump();
}

std::string read_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) {
    std::cerr << "error: cannot read " << path << "\n";
    throw CliError{2};
  }
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_or_print(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text << "\n";
    return;
  }
  std::ofstream f(path, std::ios::trunc);
  f << text << "\n";
  if (!f) {
    std::cerr << "error: cannot write " << path << "\n";
    throw CliError{2};
  }
}

void print_metric(const char* record, void*) { std::cout << record << std::endl; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"silg: symbolic interactive language grounding environments, model and tools"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(silg_version()));

  std::string env, split = "train", out, config, ckpt, host = "127.0.0.1", input, frequency;
  std::vector<std::string> sets, files;
  std::uint64_t seed = 0;
  std::int64_t frames = 100000;
  int trials = 5, episodes = 100, port = 8765, idle = 300, threads = 2, patch = 8;
  double alpha = 1.0;

  auto* envs = app.add_subcommand("envs", "List environment ids");

  auto* play = app.add_subcommand("play", "Play an episode in the console and record its trajectory");
  play->add_option("--env", env, "Environment id")->required();
  play->add_option("--split", split, "train, val or test")->capture_default_str();
  play->add_option("--seed", seed, "Episode seed")->capture_default_str();
  play->add_option("--set", sets, "Environment override key=value");
  play->add_option("--out", out, "Trajectory file (JSON lines)");

  auto* train = app.add_subcommand("train", "Train a model with synchronous actor-critic");
  train->add_option("--env", env, "Environment id; overrides the config file");
  train->add_option("--config", config, "key=value training config")->required()->check(CLI::ExistingFile);
  train->add_option("--out", out, "Output directory for metrics and checkpoints");
  train->add_option("--set", sets, "Extra config key=value, applied last");

  auto* eval = app.add_subcommand("eval", "Greedy evaluation of a checkpoint");
  eval->add_option("--ckpt", ckpt, "Checkpoint file")->required()->check(CLI::ExistingFile);
  eval->add_option("--env", env, "Environment id")->required();
  eval->add_option("--split", split, "train, val or test")->capture_default_str();
  eval->add_option("--episodes", episodes, "Episodes")->capture_default_str();
  eval->add_option("--set", sets, "Environment override key=value");

  auto* bench = app.add_subcommand("bench", "Random-policy steps per second, p50 over trials");
  bench->add_option("--env", env, "Environment id")->required();
  bench->add_option("--frames", frames, "Steps per trial (>= 10000)")->capture_default_str();
  bench->add_option("--trials", trials, "Trials")->capture_default_str();
  bench->add_option("--seed", seed, "Seed")->capture_default_str();
  bench->add_option("--set", sets, "Environment override key=value");

  auto* replay = app.add_subcommand("replay", "Verify trajectory files by replaying them");
  replay->add_option("--file,files", files, "Trajectory files")->required()->check(CLI::ExistingFile);

  auto* serve = app.add_subcommand("serve", "Run the websocket session service");
  serve->add_option("--port", port, "Port; 0 picks a free one")->capture_default_str();
  serve->add_option("--host", host, "Bind address")->capture_default_str();
  serve->add_option("--idle-timeout", idle, "Seconds before an idle session is closed")->capture_default_str();
  serve->add_option("--threads", threads, "I/O threads")->capture_default_str();

  auto* down = app.add_subcommand("downsample", "Downsample a class map with inverse-frequency voting");
  down->add_option("--input", input, "Map JSON {height, width, classes}")->required()->check(CLI::ExistingFile);
  down->add_option("--patch", patch, "Patch side")->capture_default_str();
  down->add_option("--alpha", alpha, "Frequency exponent")->capture_default_str();
  down->add_option("--frequency", frequency, "JSON array of per-class counts (default: the map's own)")
      ->check(CLI::ExistingFile);
  down->add_option("--out", out, "Output file (default stdout)");

  auto* graph = app.add_subcommand("export-graph", "Write the navigation graph archive");
  graph->add_option("--out", out, "Output file (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*envs) {
      Owned list;
      check(silg_env_list(&list.p));
      for (const auto& id : Json::parse(list.str())) std::cout << id.get<std::string>() << "\n";
    } else if (*play) {
      Owned outcome;
      check(silg_play_console(env.c_str(), split.c_str(), seed, overrides_json(sets).c_str(),
                              out.empty() ? nullptr : out.c_str(), &outcome.p));
      std::cout << "outcome: " << outcome.str() << "\n";
      if (!out.empty()) std::cout << "trajectory written to " << out << "\n";
    } else if (*train) {
      std::string text = read_file(config);
      text += "\n";
      if (!env.empty()) text += "env=" + env + "\n";
      if (!out.empty()) text += "out_dir=" + out + "\n";
      for (const auto& kv : sets) text += kv + "\n";
      Owned result;
      check(silg_train(text.c_str(), print_metric, nullptr, &result.p));
      std::cout << result.str() << "\n";
    } else if (*eval) {
      Owned result;
      check(silg_evaluate(ckpt.c_str(), env.c_str(), split.c_str(), episodes, overrides_json(sets).c_str(), &result.p));
      std::cout << result.str() << "\n";
    } else if (*bench) {
      Owned result;
      check(silg_bench(env.c_str(), frames, trials, seed, overrides_json(sets).c_str(), &result.p));
      const Json r = Json::parse(result.str());
      std::cout << env << ": p50 " << static_cast<long long>(r["p50"].get<double>()) << " steps/s over "
                << r["trials"].size() << " trials of " << frames << " frames\n";
    } else if (*replay) {
      std::vector<const char*> paths;
      for (const auto& f : files) paths.push_back(f.c_str());
      Owned result;
      check(silg_replay_files(paths.data(), static_cast<int>(paths.size()), &result.p));
      const Json s = Json::parse(result.str());
      for (const auto& r : s["reports"]) {
        const std::string file = r["file"];
        if (r["ok"].get<bool>()) {
          std::cout << "ok       " << file << "  steps " << r["steps"] << (r["win"].get<bool>() ? "  win" : "") << "\n";
        } else {
          std::cout << "MISMATCH " << file;
          if (!r["first_mismatch"].is_null()) std::cout << "  first divergent step " << r["first_mismatch"];
          std::cout << "  " << r["detail"].get<std::string>() << "\n";
        }
      }
      std::printf("%d/%d clean, win rate %.3f, mean steps %.2f\n", s["clean"].get<int>(), s["files"].get<int>(),
                  s["win_rate"].get<double>(), s["mean_steps"].get<double>());
      if (s["clean"] != s["files"]) return 1;
    } else if (*serve) {
      // Block the stop signals in every thread; a dedicated thread waits for them.
      sigset_t stop_signals;
      sigemptyset(&stop_signals);
      sigaddset(&stop_signals, SIGINT);
      sigaddset(&stop_signals, SIGTERM);
      pthread_sigmask(SIG_BLOCK, &stop_signals, nullptr);
      silg_server* server = nullptr;
      int bound = 0;
      check(silg_server_start(host.c_str(), port, idle, threads, &server, &bound));
      std::cout << "listening on ws://" << host << ":" << bound << std::endl;
      std::thread waiter([&] {
        int sig = 0;
        sigwait(&stop_signals, &sig);
        silg_server_stop(server);
      });
      check(silg_server_wait(server));
      waiter.join();
      silg_server_destroy(server);
    } else if (*down) {
      const std::string map = read_file(input);
      const std::string freq = frequency.empty() ? "" : read_file(frequency);
      Owned result;
      check(silg_downsample(map.c_str(), patch, alpha, frequency.empty() ? nullptr : freq.c_str(), &result.p));
      write_or_print(out, result.str());
    } else if (*graph) {
      Owned result;
      check(silg_export_graph(&result.p));
      write_or_print(out, result.str());
    }
  } catch (const CliError& e) {
    return e.exit_code;
  } catch (const Json::exception& e) {
    std::cerr << "error: unexpected library output: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
