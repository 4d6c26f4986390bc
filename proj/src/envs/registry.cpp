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

#include "silg/crawler.hpp"
#include "silg/env.hpp"
#include "silg/messenger.hpp"
#include "silg/navgraph.hpp"
#include "silg/rtfm.hpp"
#include "silg/textchoice.hpp"

namespace silg {

std::vector<std::string> registered_envs() {
  return {"rtfm", "messenger", "crawler", "textchoice", "navgraph", "navgraph_manual"};
}

std::unique_ptr<Environment> make_env(std::string_view id, Split split, std::uint64_t seed,
                                      const Overrides& overrides) {
  OverrideReader reader(overrides);
  WrapOptions wrap;
  wrap.penalty = reader.get_double("time_penalty", wrap.penalty);
  if (wrap.penalty > 0) fail(ErrorCode::kInvalidArgument, "time_penalty must be <= 0");
  const int limit = reader.get_int("step_limit", 0);
  if (limit < 0) fail(ErrorCode::kInvalidArgument, "step_limit must be > 0");

  std::unique_ptr<Game> game;
  if (id == "rtfm") {
    auto cfg = rtfm::Config::from_overrides(reader);
    if (limit > 0) cfg.horizon = limit;
    game = std::make_unique<rtfm::RtfmGame>(cfg, split);
  } else if (id == "messenger") {
    auto cfg = messenger::Config::from_overrides(reader);
    if (limit > 0) cfg.horizon = limit;
    game = std::make_unique<messenger::MessengerGame>(cfg, split);
  } else if (id == "crawler") {
    game = std::make_unique<crawler::CrawlerGame>(crawler::Config::from_overrides(reader), split);
  } else if (id == "textchoice") {
    game = std::make_unique<textchoice::TextChoiceGame>(textchoice::Config::from_overrides(reader), split);
  } else if (id == "navgraph" || id == "navgraph_manual") {
    auto cfg = navgraph::Config::from_overrides(reader);
    cfg.manual_stop = id == "navgraph_manual";
    game = std::make_unique<navgraph::NavGame>(cfg, split);
  } else {
    fail(ErrorCode::kNotFound, "unknown environment id: " + std::string(id));
  }
  reader.finish(id);
  wrap.limit = limit > 0 ? limit : game->default_step_limit();
  auto env = std::make_unique<Environment>(std::move(game), split, seed, wrap);
  env->id_ = std::string(id);
  return env;
}

}  // namespace silg
