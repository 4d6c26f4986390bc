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

#include <algorithm>

#include "silg/service.hpp"

namespace silg::service {

namespace {

[[noreturn]] void bad(const std::string& what) { fail(ErrorCode::kParse, "protocol: " + what); }

const Json& field(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) bad(std::string("missing field '") + key + "'");
  return *it;
}

std::string get_string(const Json& j, const char* key) {
  const Json& v = field(j, key);
  if (!v.is_string()) bad(std::string("field '") + key + "' must be a string");
  return v.get<std::string>();
}

int get_int(const Json& j, const char* key) {
  const Json& v = field(j, key);
  if (!v.is_number_integer()) bad(std::string("field '") + key + "' must be an integer");
  return v.get<int>();
}

double get_number(const Json& j, const char* key) {
  const Json& v = field(j, key);
  if (!v.is_number()) bad(std::string("field '") + key + "' must be a number");
  return v.get<double>();
}

bool get_bool(const Json& j, const char* key) {
  const Json& v = field(j, key);
  if (!v.is_boolean()) bad(std::string("field '") + key + "' must be a boolean");
  return v.get<bool>();
}

std::vector<std::string> get_strings(const Json& j, const char* key) {
  const Json& v = field(j, key);
  if (!v.is_array()) bad(std::string("field '") + key + "' must be an array");
  std::vector<std::string> out;
  for (const auto& e : v) {
    if (!e.is_string()) bad(std::string("field '") + key + "' must hold strings");
    out.push_back(e.get<std::string>());
  }
  return out;
}

std::vector<int> get_ints(const Json& j, const char* key) {
  const Json& v = field(j, key);
  if (!v.is_array()) bad(std::string("field '") + key + "' must be an array");
  std::vector<int> out;
  for (const auto& e : v) {
    if (!e.is_number_integer()) bad(std::string("field '") + key + "' must hold integers");
    out.push_back(e.get<int>());
  }
  return out;
}

void expect_only(const Json& j, std::initializer_list<const char*> keys) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::none_of(keys.begin(), keys.end(), [&](const char* k) { return it.key() == k; })) {
      bad("unexpected field '" + it.key() + "'");
    }
  }
}

}  // namespace

Split split_from_name(std::string_view name) {
  if (name == "eval" || name == "dev") return Split::kVal;
  return parse_split(name);
}

// ---------------------------------------------------------------------------
// ObsView

ObsView ObsView::from(const Observation& obs, const std::vector<std::string>& action_names) {
  ObsView v;
  v.height = obs.grid.height;
  v.width = obs.grid.width;
  v.words_per_cell = obs.grid.words_per_cell;
  v.grid = obs.grid.cells;
  v.legend = obs.legend;
  v.field_names = obs.text.field_names;
  v.field_text = obs.text.field_text;
  v.field_text.resize(v.field_names.size());
  v.joint_text = obs.text.joint_text;
  v.action_kind = action_kind_name(obs.actions.kind);
  switch (obs.actions.kind) {
    case ActionKind::kFixed:
      v.fixed_count = obs.actions.fixed_count;
      v.action_names = action_names;
      break;
    case ActionKind::kTextChoices:
      v.choices = obs.actions.choice_text;
      break;
    case ActionKind::kNavCoordinates:
      v.columns = obs.actions.columns;
      v.stop_option = obs.actions.stop_option;
      break;
  }
  v.agent = obs.agent;
  v.digest = digest_hex(observation_digest(obs));
  return v;
}

int ObsView::arity() const {
  if (action_kind == "fixed") return fixed_count;
  if (action_kind == "text_choices") return static_cast<int>(choices.size());
  return static_cast<int>(columns.size()) + (stop_option ? 1 : 0);
}

Json ObsView::to_json() const {
  Json j;
  j["height"] = height;
  j["width"] = width;
  j["words_per_cell"] = words_per_cell;
  j["grid"] = grid;
  Json legend_json = Json::object();
  for (const auto& [id, word] : legend) legend_json[std::to_string(id)] = word;
  j["legend"] = legend_json;
  Json fields = Json::array();
  for (std::size_t i = 0; i < field_names.size(); ++i) fields.push_back({{"name", field_names[i]}, {"text", field_text[i]}});
  j["fields"] = fields;
  j["joint_text"] = joint_text;
  Json actions;
  actions["kind"] = action_kind;
  if (action_kind == "fixed") {
    actions["count"] = fixed_count;
    actions["names"] = action_names;
  } else if (action_kind == "text_choices") {
    actions["choices"] = choices;
  } else {
    actions["columns"] = columns;
    actions["stop"] = stop_option;
  }
  j["actions"] = actions;
  j["agent"] = agent ? Json{{"row", agent->row}, {"col", agent->col}} : Json(nullptr);
  j["digest"] = digest;
  return j;
}

ObsView ObsView::from_json(const Json& j) {
  if (!j.is_object()) bad("obs must be an object");
  expect_only(j, {"height", "width", "words_per_cell", "grid", "legend", "fields", "joint_text", "actions", "agent",
                  "digest"});
  ObsView v;
  v.height = get_int(j, "height");
  v.width = get_int(j, "width");
  v.words_per_cell = get_int(j, "words_per_cell");
  if (v.height < 1 || v.width < 1 || v.words_per_cell < 1) bad("grid dimensions must be positive");
  v.grid = get_ints(j, "grid");
  if (v.grid.size() != static_cast<std::size_t>(v.height) * v.width * v.words_per_cell) bad("grid size mismatch");
  const Json& legend = field(j, "legend");
  if (!legend.is_object()) bad("legend must be an object");
  for (auto it = legend.begin(); it != legend.end(); ++it) {
    if (!it.value().is_string()) bad("legend values must be strings");
    int id = 0;
    try {
      std::size_t used = 0;
      id = std::stoi(it.key(), &used);
      if (used != it.key().size()) throw std::invalid_argument(it.key());
    } catch (const std::exception&) {
      bad("legend keys must be integer ids");
    }
    v.legend[id] = it.value().get<std::string>();
  }
  const Json& fields = field(j, "fields");
  if (!fields.is_array()) bad("fields must be an array");
  for (const auto& f : fields) {
    if (!f.is_object()) bad("field entries must be objects");
    expect_only(f, {"name", "text"});
    v.field_names.push_back(get_string(f, "name"));
    v.field_text.push_back(get_string(f, "text"));
  }
  v.joint_text = get_string(j, "joint_text");
  const Json& actions = field(j, "actions");
  if (!actions.is_object()) bad("actions must be an object");
  v.action_kind = get_string(actions, "kind");
  if (v.action_kind == "fixed") {
    expect_only(actions, {"kind", "count", "names"});
    v.fixed_count = get_int(actions, "count");
    v.action_names = get_strings(actions, "names");
  } else if (v.action_kind == "text_choices") {
    expect_only(actions, {"kind", "choices"});
    v.choices = get_strings(actions, "choices");
  } else if (v.action_kind == "nav_coordinates") {
    expect_only(actions, {"kind", "columns", "stop"});
    v.columns = get_ints(actions, "columns");
    v.stop_option = get_bool(actions, "stop");
  } else {
    bad("unknown action kind '" + v.action_kind + "'");
  }
  const Json& agent = field(j, "agent");
  if (!agent.is_null()) {
    if (!agent.is_object()) bad("agent must be an object or null");
    v.agent = Cell{get_int(agent, "row"), get_int(agent, "col")};
  }
  v.digest = get_string(j, "digest");
  return v;
}

// ---------------------------------------------------------------------------
// SessionMessage

const char* message_type_name(MessageType t) {
  switch (t) {
    case MessageType::kReset: return "reset";
    case MessageType::kStep: return "step";
    case MessageType::kObs: return "obs";
    case MessageType::kError: return "error";
    case MessageType::kDone: return "done";
  }
  return "?";
}

Json SessionMessage::to_json() const {
  Json j;
  j["type"] = message_type_name(type);
  switch (type) {
    case MessageType::kReset:
      j["env"] = env;
      j["split"] = split;
      if (seed) j["seed"] = *seed;
      j["overrides"] = Json(overrides);
      break;
    case MessageType::kStep:
      j["action"] = action;
      break;
    case MessageType::kObs:
      j["obs"] = obs.to_json();
      j["reward"] = reward;
      j["done"] = done;
      j["step"] = step;
      break;
    case MessageType::kError:
      j["code"] = code;
      j["message"] = message;
      break;
    case MessageType::kDone:
      j["outcome"] = outcome;
      j["steps"] = step;
      j["total_reward"] = total_reward;
      j["trajectory"] = trajectory;
      break;
  }
  return j;
}

SessionMessage SessionMessage::from_json(const Json& j) {
  if (!j.is_object()) bad("message must be a JSON object");
  SessionMessage m;
  const std::string type = get_string(j, "type");
  if (type == "reset") {
    expect_only(j, {"type", "env", "split", "seed", "overrides"});
    m.type = MessageType::kReset;
    if (j.contains("env")) m.env = get_string(j, "env");
    if (j.contains("split")) m.split = get_string(j, "split");
    if (j.contains("seed")) {
      const Json& s = j["seed"];
      if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<std::int64_t>() >= 0)) {
        bad("field 'seed' must be a non-negative integer");
      }
      m.seed = s.get<std::uint64_t>();
    }
    if (j.contains("overrides")) {
      const Json& o = j["overrides"];
      if (!o.is_object()) bad("field 'overrides' must be an object");
      for (auto it = o.begin(); it != o.end(); ++it) {
        if (!it.value().is_string()) bad("override values must be strings");
        m.overrides[it.key()] = it.value().get<std::string>();
      }
    }
  } else if (type == "step") {
    expect_only(j, {"type", "action"});
    m.type = MessageType::kStep;
    m.action = get_int(j, "action");
  } else if (type == "obs") {
    expect_only(j, {"type", "obs", "reward", "done", "step"});
    m.type = MessageType::kObs;
    m.obs = ObsView::from_json(field(j, "obs"));
    m.reward = get_number(j, "reward");
    m.done = get_bool(j, "done");
    m.step = get_int(j, "step");
  } else if (type == "error") {
    expect_only(j, {"type", "code", "message"});
    m.type = MessageType::kError;
    m.code = get_string(j, "code");
    m.message = get_string(j, "message");
  } else if (type == "done") {
    expect_only(j, {"type", "outcome", "steps", "total_reward", "trajectory"});
    m.type = MessageType::kDone;
    m.outcome = get_string(j, "outcome");
    m.step = get_int(j, "steps");
    m.total_reward = get_number(j, "total_reward");
    m.trajectory = get_string(j, "trajectory");
  } else {
    bad("unknown message type '" + type + "'");
  }
  return m;
}

SessionMessage SessionMessage::parse(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::exception& e) {
    bad(std::string("malformed JSON: ") + e.what());
  }
  return from_json(j);
}

}  // namespace silg::service
