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

// Exercises libsilg through the C interface only.

#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <string>

#include "silg/silg.h"

namespace {

using nlohmann::json;

std::string take(char* s) {
  std::string out = s ? s : "";
  silg_free(s);
  return out;
}

TEST(CApi, VersionAndStatusNames) {
  EXPECT_NE(std::string(silg_version()), "");
  EXPECT_STREQ(silg_status_name(SILG_OK), "ok");
  EXPECT_STREQ(silg_status_name(SILG_BAD_STATE), "bad_state");
  char* list = nullptr;
  ASSERT_EQ(silg_env_list(&list), SILG_OK);
  const auto ids = json::parse(take(list));
  EXPECT_EQ(ids.size(), 6u);
}

TEST(CApi, EnvironmentLifecycle) {
  silg_env* env = nullptr;
  ASSERT_EQ(silg_env_create("rtfm", "train", 3, nullptr, &env), SILG_OK);
  EXPECT_EQ(silg_env_step(env, 0, nullptr, nullptr, nullptr), SILG_BAD_STATE);
  EXPECT_NE(std::string(silg_last_error()), "");
  ASSERT_EQ(silg_env_reset(env), SILG_OK);
  int n = 0;
  ASSERT_EQ(silg_env_num_actions(env, &n), SILG_OK);
  EXPECT_EQ(n, 5);
  char* before = nullptr;
  ASSERT_EQ(silg_env_digest(env, &before), SILG_OK);
  const std::string d0 = take(before);
  EXPECT_EQ(d0.size(), 16u);
  EXPECT_EQ(silg_env_step(env, 9, nullptr, nullptr, nullptr), SILG_INVALID_ARGUMENT);
  char* after = nullptr;
  silg_env_digest(env, &after);
  EXPECT_EQ(take(after), d0);

  double reward = 0;
  int done = -1, win = -1;
  ASSERT_EQ(silg_env_step(env, 4, &reward, &done, &win), SILG_OK);
  int steps = 0;
  silg_env_steps(env, &steps);
  EXPECT_EQ(steps, 1);
  EXPECT_EQ(done, 0);
  char* obs = nullptr;
  ASSERT_EQ(silg_env_observation_json(env, &obs), SILG_OK);
  const auto j = json::parse(take(obs));
  EXPECT_EQ(j.at("height").get<int>(), 6);
  char* text = nullptr;
  ASSERT_EQ(silg_env_render(env, &text), SILG_OK);
  EXPECT_FALSE(take(text).empty());
  silg_env_destroy(env);

  silg_env* other = nullptr;
  EXPECT_EQ(silg_env_create("nope", "train", 0, nullptr, &other), SILG_NOT_FOUND);
  EXPECT_EQ(silg_env_create("rtfm", "train", 0, "{\"bogus\":1}", &other), SILG_INVALID_ARGUMENT);
  EXPECT_EQ(silg_env_create("rtfm", "train", 0, "{oops", &other), SILG_PARSE);
  EXPECT_EQ(silg_env_create("rtfm", "train", 0, nullptr, nullptr), SILG_INVALID_ARGUMENT);
}

TEST(CApi, SameSeedSameDigests) {
  silg_env* a = nullptr;
  silg_env* b = nullptr;
  silg_env_create("crawler", "test", 2'000'005, nullptr, &a);
  silg_env_create("crawler", "test", 2'000'005, nullptr, &b);
  silg_env_reset(a);
  silg_env_reset(b);
  for (int i = 0; i < 30; ++i) {
    char* da = nullptr;
    char* db = nullptr;
    silg_env_digest(a, &da);
    silg_env_digest(b, &db);
    ASSERT_EQ(take(da), take(db));
    int done = 0;
    silg_env_step(a, i % 10, nullptr, &done, nullptr);
    silg_env_step(b, i % 10, nullptr, nullptr, nullptr);
    if (done) break;
  }
  silg_env_destroy(a);
  silg_env_destroy(b);
}

TEST(CApi, SessionHandle) {
  silg_session* s = nullptr;
  ASSERT_EQ(silg_session_create(&s), SILG_OK);
  char* out = nullptr;
  ASSERT_EQ(silg_session_handle(s, R"({"type":"reset","env":"messenger","seed":4})", &out), SILG_OK);
  auto replies = json::parse(take(out));
  ASSERT_EQ(replies.size(), 1u);
  EXPECT_EQ(replies[0].at("type"), "obs");
  ASSERT_EQ(silg_session_handle(s, R"({"type":"step","action":42})", &out), SILG_OK);
  replies = json::parse(take(out));
  EXPECT_EQ(replies[0].at("type"), "error");
  silg_session_destroy(s);
}

TEST(CApi, ReplayAndBench) {
  const auto dir = std::filesystem::temp_directory_path() / "silg_capi_test";
  std::filesystem::create_directories(dir);
  silg_session* s = nullptr;
  silg_session_create(&s);
  char* out = nullptr;
  silg_session_handle(s, R"({"type":"reset","env":"rtfm","seed":1,"overrides":{"step_limit":"2"}})", &out);
  silg_free(out);
  silg_session_handle(s, R"({"type":"step","action":4})", &out);
  silg_free(out);
  silg_session_handle(s, R"({"type":"step","action":4})", &out);
  const auto replies = json::parse(take(out));
  silg_session_destroy(s);
  ASSERT_EQ(replies.back().at("type"), "done");
  const auto path = (dir / "t.jsonl").string();
  std::ofstream(path) << replies.back().at("trajectory").get<std::string>();

  char* report = nullptr;
  ASSERT_EQ(silg_replay_file(path.c_str(), &report), SILG_OK);
  const auto rep = json::parse(take(report));
  EXPECT_TRUE(rep.at("ok").get<bool>());
  EXPECT_EQ(rep.at("steps").get<int>(), 2);
  const char* paths[] = {path.c_str(), path.c_str()};
  char* summary = nullptr;
  ASSERT_EQ(silg_replay_files(paths, 2, &summary), SILG_OK);
  EXPECT_EQ(json::parse(take(summary)).at("clean").get<int>(), 2);
  EXPECT_EQ(silg_replay_file((dir / "missing.jsonl").string().c_str(), &report), SILG_IO);
  std::filesystem::remove_all(dir);

  char* bench = nullptr;
  EXPECT_EQ(silg_bench("rtfm", 10, 1, 0, nullptr, &bench), SILG_INVALID_ARGUMENT);
  ASSERT_EQ(silg_bench("rtfm", 10'000, 1, 0, nullptr, &bench), SILG_OK);
  EXPECT_GT(json::parse(take(bench)).at("p50").get<double>(), 0.0);
}

TEST(CApi, DownsampleAndGraph) {
  char* out = nullptr;
  ASSERT_EQ(silg_downsample(R"({"height":2,"width":2,"classes":[3,3,3,5]})", 2, 0.0, nullptr, &out), SILG_OK);
  const auto small = json::parse(take(out));
  EXPECT_EQ(small.at("classes")[0].get<int>(), 3);
  EXPECT_EQ(silg_downsample(R"({"height":2})", 2, 0.0, nullptr, &out), SILG_PARSE);
  ASSERT_EQ(silg_export_graph(&out), SILG_OK);
  EXPECT_EQ(json::parse(take(out)).at("format"), "silg-navgraph");
}

TEST(CApi, TrainAndEvaluate) {
  const auto dir = std::filesystem::temp_directory_path() / "silg_capi_train";
  std::filesystem::remove_all(dir);
  const std::string cfg = "env=messenger\nembed_dim=8\nrnn_dim=8\nfilm_layers=1\nfinal_dim=8\nlanes=2\nunroll=5\n"
                          "total_frames=200\nlog_every=100\neval_every=0\nout_dir=" + dir.string() + "\n";
  int records = 0;
  char* result = nullptr;
  ASSERT_EQ(silg_train(cfg.c_str(), [](const char*, void* user) { ++*static_cast<int*>(user); }, &records, &result),
            SILG_OK)
      << silg_last_error();
  EXPECT_GT(records, 0);
  EXPECT_GE(json::parse(take(result)).at("frames").get<int>(), 200);
  const auto ckpt = (dir / "last.ckpt").string();
  ASSERT_TRUE(std::filesystem::exists(ckpt));
  char* eval = nullptr;
  ASSERT_EQ(silg_evaluate(ckpt.c_str(), "messenger", "val", 3, nullptr, &eval), SILG_OK) << silg_last_error();
  EXPECT_EQ(json::parse(take(eval)).at("episodes").get<int>(), 3);
  EXPECT_EQ(silg_train("bogus=1\n", nullptr, nullptr, &result), SILG_PARSE);
  std::filesystem::remove_all(dir);
}

TEST(CApi, ServerStartStop) {
  silg_server* server = nullptr;
  int port = 0;
  ASSERT_EQ(silg_server_start("127.0.0.1", 0, 5, 1, &server, &port), SILG_OK);
  EXPECT_GT(port, 0);
  silg_server_stop(server);
  EXPECT_EQ(silg_server_wait(server), SILG_OK);
  silg_server_destroy(server);
}

}  // namespace
