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

#include <gtest/gtest.h>

#include <boost/asio/connect.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>
#include <chrono>
#include <filesystem>
#include <sstream>
#include <thread>

#include "oracles.hpp"
#include "silg/service.hpp"

namespace silg::service {
namespace {

namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = boost::asio::ip::tcp;

SessionMessage reset_msg(const std::string& env, std::optional<std::uint64_t> seed = std::nullopt) {
  SessionMessage m;
  m.type = MessageType::kReset;
  m.env = env;
  m.seed = seed;
  return m;
}

SessionMessage step_msg(int action) {
  SessionMessage m;
  m.type = MessageType::kStep;
  m.action = action;
  return m;
}

TEST(Protocol, MessagesRoundTrip) {
  auto env = make_env("rtfm", Split::kTrain, 0);
  const auto& obs = env->reset(3);
  SessionMessage o;
  o.type = MessageType::kObs;
  o.obs = ObsView::from(obs, env->action_names());
  o.reward = -0.02;
  o.step = 4;
  SessionMessage e;
  e.type = MessageType::kError;
  e.code = "bad_state";
  e.message = "step before reset";
  SessionMessage d;
  d.type = MessageType::kDone;
  d.outcome = "win";
  d.step = 7;
  d.total_reward = 0.88;
  d.trajectory = "{}\n";
  SessionMessage r = reset_msg("messenger", 12);
  r.split = "val";
  r.overrides = {{"step_limit", "9"}};
  for (const auto& m : {o, e, d, r, step_msg(3)}) {
    EXPECT_EQ(SessionMessage::parse(m.serialize()), m) << m.serialize();
  }
  EXPECT_EQ(o.obs.arity(), 5);
  EXPECT_EQ(o.obs.digest, digest_hex(observation_digest(obs)));
}

TEST(Protocol, MalformedMessagesRejected) {
  for (const char* text : {"not json", "[]", "{}", R"({"type":"jump"})", R"({"type":"step"})",
                           R"({"type":"step","action":"two"})", R"({"type":"reset","seed":-4})"}) {
    try {
      SessionMessage::parse(text);
      ADD_FAILURE() << text;
    } catch (const Error& err) {
      EXPECT_EQ(err.code(), ErrorCode::kParse) << text;
    }
  }
}

TEST(Session, ResetThenStepsYieldObservations) {
  Session s;
  auto replies = s.handle(reset_msg("rtfm", 10));
  ASSERT_EQ(replies.size(), 1u);
  EXPECT_EQ(replies[0].type, MessageType::kObs);
  int obs_count = 1;
  for (int i = 0; i < 3; ++i) {
    replies = s.handle(step_msg(4));
    ASSERT_FALSE(replies.empty());
    EXPECT_EQ(replies[0].type, MessageType::kObs);
    EXPECT_EQ(replies[0].step, i + 1);
    ++obs_count;
  }
  EXPECT_EQ(obs_count, 4);
}

TEST(Session, InvalidActionLeavesStateUnchanged) {
  Session s;
  const auto first = s.handle(reset_msg("messenger", 2))[0];
  const auto err = s.handle(step_msg(99));
  ASSERT_EQ(err.size(), 1u);
  EXPECT_EQ(err[0].type, MessageType::kError);
  EXPECT_EQ(err[0].code, "invalid_argument");
  const auto next = s.handle(step_msg(4))[0];
  EXPECT_EQ(next.step, 1);

  Session fresh;
  fresh.handle(reset_msg("messenger", 2));
  EXPECT_EQ(fresh.handle(step_msg(4))[0].obs, next.obs);
  EXPECT_EQ(s.handle("{oops")[0].code, "parse");
}

TEST(Session, StepBeforeResetAndRebindingAreBadState) {
  Session s;
  EXPECT_EQ(s.handle(step_msg(0))[0].code, "bad_state");
  s.handle(reset_msg("rtfm"));
  EXPECT_EQ(s.handle(reset_msg("messenger"))[0].code, "bad_state");
  EXPECT_EQ(s.handle(reset_msg("rtfm"))[0].type, MessageType::kObs);
  Session unknown;
  EXPECT_EQ(unknown.handle(reset_msg("chess"))[0].code, "not_found");
  EXPECT_FALSE(unknown.active());
}

TEST(Session, SameSeedSessionsStayIdentical) {
  Session a, b;
  EXPECT_EQ(a.handle(reset_msg("crawler", 77))[0].obs, b.handle(reset_msg("crawler", 77))[0].obs);
  Rng rng(1);
  for (int i = 0; i < 40; ++i) {
    const int action = rng.uniform(10);
    const auto ra = a.handle(step_msg(action));
    const auto rb = b.handle(step_msg(action));
    ASSERT_EQ(ra, rb);
    if (ra.back().type == MessageType::kDone) break;
  }
}

TEST(Session, DoneCarriesReplayableTrajectory) {
  Session s;
  s.handle(reset_msg("rtfm", 5));
  auto env = make_env("rtfm", Split::kTrain, 5);
  env->reset(5);
  std::vector<SessionMessage> replies;
  while (!env->done()) {
    const int a = silg::testing::rtfm_oracle_action(*env);
    env->step(a);
    replies = s.handle(step_msg(a));
  }
  ASSERT_EQ(replies.size(), 2u);
  EXPECT_EQ(replies[1].type, MessageType::kDone);
  EXPECT_EQ(replies[1].outcome, "win");
  const auto traj = Trajectory::from_jsonl(replies[1].trajectory);
  EXPECT_EQ(traj.recorder, "session");
  EXPECT_TRUE(replay(traj).ok);
  EXPECT_EQ(s.handle(step_msg(0))[0].code, "bad_state");
}

Trajectory oracle_trajectory(std::uint64_t seed) {
  Recorder rec("rtfm", Split::kTrain, seed);
  while (!rec.done()) rec.step(silg::testing::rtfm_oracle_action(rec.env()));
  return rec.trajectory();
}

TEST(Trajectory, JsonlRoundTripAndCleanReplay) {
  const auto traj = oracle_trajectory(3);
  const auto back = Trajectory::from_jsonl(traj.to_jsonl());
  EXPECT_EQ(back.to_jsonl(), traj.to_jsonl());
  EXPECT_EQ(back.outcome, "win");
  const auto rep = replay(back);
  EXPECT_TRUE(rep.ok);
  EXPECT_TRUE(rep.win);
  EXPECT_EQ(rep.steps, static_cast<int>(traj.steps.size()));

  const auto path = std::filesystem::temp_directory_path() / "silg_traj_test.jsonl";
  traj.save(path.string());
  EXPECT_EQ(Trajectory::load(path.string()).to_jsonl(), traj.to_jsonl());
  std::filesystem::remove(path);
  EXPECT_THROW(Trajectory::from_jsonl("{\"kind\":\"step\"}\n"), Error);
}

TEST(Trajectory, TamperedActionIsPinpointed) {
  auto traj = oracle_trajectory(8);
  ASSERT_GE(traj.steps.size(), 3u);
  traj.steps[1].action = (traj.steps[1].action + 1) % 5;
  const auto rep = replay(traj);
  EXPECT_FALSE(rep.ok);
  ASSERT_TRUE(rep.first_mismatch.has_value());
  EXPECT_EQ(*rep.first_mismatch, 2);

  auto wrong_start = oracle_trajectory(8);
  wrong_start.initial_digest = "0000000000000000";
  EXPECT_EQ(replay(wrong_start).first_mismatch, 0);
}

TEST(Trajectory, OracleBatchSummary) {
  std::vector<ReplayReport> reports;
  for (std::uint64_t s = 0; s < 50; ++s) reports.push_back(replay(oracle_trajectory(s)));
  const auto sum = summarize(reports);
  EXPECT_EQ(sum.files, 50);
  EXPECT_EQ(sum.clean, 50);
  EXPECT_EQ(sum.win_rate, 1.0);
  EXPECT_GT(sum.mean_steps, 0.0);
}

TEST(Console, ScriptedMessengerWin) {
  const std::uint64_t seed = 6;
  auto env = make_env("messenger", Split::kTrain, seed);
  env->reset(seed);
  std::ostringstream script;
  script << "\n9\nnope\n";  // blank and invalid lines are re-prompted
  while (!env->done()) {
    const int a = silg::testing::messenger_oracle_action(*env);
    env->step(a);
    script << a << "\n";
  }
  std::istringstream in(script.str());
  std::ostringstream out;
  const auto traj = play_console("messenger", Split::kTrain, seed, in, out);
  EXPECT_EQ(traj.outcome, "win");
  EXPECT_NE(out.str().find("invalid action 'nope'"), std::string::npos);
  EXPECT_NE(out.str().find("episode over: win"), std::string::npos);
  EXPECT_TRUE(replay(traj).ok);
}

TEST(Console, QuitRecordsNothing) {
  std::istringstream in("q\n");
  std::ostringstream out;
  const auto traj = play_console("rtfm", Split::kVal, 1'000'001, in, out);
  EXPECT_TRUE(traj.steps.empty());
  EXPECT_EQ(traj.outcome, "incomplete");
  EXPECT_TRUE(replay(traj).ok);
}

TEST(Bench, RejectsTinyRunsAndIsStable) {
  EXPECT_THROW(bench_fps("rtfm", kMinBenchFrames - 1), Error);
  EXPECT_THROW(bench_fps("rtfm", kMinBenchFrames, 0), Error);
  const auto small = bench_fps("messenger", 20'000, 3);
  const auto big = bench_fps("messenger", 40'000, 3);
  ASSERT_EQ(small.trials.size(), 3u);
  EXPECT_GT(small.p50, 0.0);
  EXPECT_LT(std::abs(big.p50 - small.p50) / small.p50, 0.10);
}

class Client {
 public:
  explicit Client(int port) : ws_(ioc_) {
    tcp::resolver resolver(ioc_);
    boost::asio::connect(ws_.next_layer(), resolver.resolve("127.0.0.1", std::to_string(port)));
    ws_.handshake("127.0.0.1", "/");
  }
  void send(const SessionMessage& m) { ws_.write(boost::asio::buffer(m.serialize())); }
  SessionMessage receive() {
    beast::flat_buffer buf;
    ws_.read(buf);
    return SessionMessage::parse(beast::buffers_to_string(buf.data()));
  }
  websocket::stream<tcp::socket>& ws() { return ws_; }

 private:
  boost::asio::io_context ioc_;
  websocket::stream<tcp::socket> ws_;
};

TEST(Server, WebSocketRoundTrip) {
  ServerOptions opt;
  opt.port = 0;
  SessionServer server(opt);
  const int port = server.start();
  ASSERT_GT(port, 0);
  Client a(port), b(port);
  a.send(reset_msg("rtfm", 4));
  b.send(reset_msg("messenger", 4));
  EXPECT_EQ(a.receive().obs.arity(), 5);
  const auto mb = b.receive();
  EXPECT_EQ(mb.type, MessageType::kObs);
  a.send(step_msg(17));
  EXPECT_EQ(a.receive().code, "invalid_argument");
  a.send(step_msg(4));
  const auto ma = a.receive();
  EXPECT_EQ(ma.type, MessageType::kObs);
  EXPECT_EQ(ma.step, 1);

  Session local;
  local.handle(reset_msg("rtfm", 4));
  EXPECT_EQ(local.handle(step_msg(4))[0], ma);
  server.stop();
}

TEST(Server, IdleConnectionsAreClosed) {
  ServerOptions opt;
  opt.port = 0;
  opt.idle_timeout_s = 1;
  SessionServer server(opt);
  Client c(server.start());
  std::this_thread::sleep_for(std::chrono::milliseconds(2500));
  beast::flat_buffer buf;
  beast::error_code ec;
  c.ws().read(buf, ec);
  EXPECT_TRUE(ec);
}

TEST(Server, InvalidOptionsRejected) {
  ServerOptions bad;
  bad.idle_timeout_s = 0;
  EXPECT_THROW(SessionServer{bad}, Error);
  ServerOptions host;
  host.host = "not an address";
  host.port = 0;
  SessionServer s(host);
  EXPECT_THROW(s.start(), Error);
}

}  // namespace
}  // namespace silg::service
