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

#include "silg/service.hpp"

namespace silg::service {

SessionMessage error_message(const Error& e) {
  SessionMessage m;
  m.type = MessageType::kError;
  m.code = error_code_name(e.code());
  m.message = e.what();
  return m;
}

std::vector<SessionMessage> Session::handle(const std::string& text) {
  SessionMessage msg;
  try {
    msg = SessionMessage::parse(text);
  } catch (const Error& e) {
    return {error_message(e)};
  }
  return handle(msg);
}

SessionMessage Session::obs_message(double reward, bool done) const {
  SessionMessage m;
  m.type = MessageType::kObs;
  m.obs = ObsView::from(recorder_->observation(), recorder_->env().action_names());
  m.reward = reward;
  m.done = done;
  m.step = recorder_->env().steps();
  return m;
}

std::vector<SessionMessage> Session::handle(const SessionMessage& msg) {
  try {
    switch (msg.type) {
      case MessageType::kReset: {
        if (env_id_.empty()) {
          if (msg.env.empty()) fail(ErrorCode::kInvalidArgument, "the first reset must name an environment");
          // Validate everything before committing to the session's environment.
          const Split split = split_from_name(msg.split);
          make_env(msg.env, split, 0, msg.overrides);
          env_id_ = msg.env;
          split_ = split;
          overrides_ = msg.overrides;
          next_seed_ = static_cast<std::uint64_t>(split_base_seed(split_));
        } else {
          if (!msg.env.empty() && msg.env != env_id_) {
            fail(ErrorCode::kBadState, "this session is bound to '" + env_id_ + "'; open a new session for '" + msg.env + "'");
          }
          if (split_from_name(msg.split) != split_) fail(ErrorCode::kBadState, "a session keeps its split");
          if (!msg.overrides.empty() && msg.overrides != overrides_) {
            fail(ErrorCode::kBadState, "a session keeps its overrides");
          }
        }
        const std::uint64_t seed = msg.seed.value_or(next_seed_);
        auto rec = std::make_unique<Recorder>(env_id_, split_, seed, overrides_, "session");
        recorder_ = std::move(rec);
        next_seed_ = seed + 1;
        return {obs_message(0.0, false)};
      }
      case MessageType::kStep: {
        if (!recorder_) fail(ErrorCode::kBadState, "step before reset");
        if (recorder_->done()) fail(ErrorCode::kBadState, "episode is over; send reset");
        const StepResult r = recorder_->step(msg.action);
        std::vector<SessionMessage> out{obs_message(r.reward, r.done)};
        if (r.done) {
          SessionMessage d;
          d.type = MessageType::kDone;
          d.outcome = recorder_->trajectory().outcome;
          d.step = recorder_->env().steps();
          d.total_reward = recorder_->total_reward();
          d.trajectory = recorder_->trajectory().to_jsonl();
          out.push_back(std::move(d));
        }
        return out;
      }
      default:
        fail(ErrorCode::kInvalidArgument,
             std::string("clients may send reset or step, not ") + message_type_name(msg.type));
    }
  } catch (const Error& e) {
    return {error_message(e)};
  }
}

}  // namespace silg::service
