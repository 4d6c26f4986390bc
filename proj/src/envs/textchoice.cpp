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

#include "silg/textchoice.hpp"

#include <algorithm>
#include <set>

#include "envs/text_util.hpp"

namespace silg::textchoice {

namespace {

constexpr int kSinkType = 4;

enum class Verb { kLook, kInventory, kGoTo, kExamine, kTake, kPut, kClean };

struct Command {
  Verb verb;
  int receptacle = -1;
  int object = -1;
  std::string text;
};

std::vector<std::string> contents(const State& s, int receptacle) {
  std::vector<std::string> names;
  for (const auto& o : s.scene.objects) {
    if (o.location == receptacle) names.push_back(object_name(o));
  }
  return names;
}

std::string describe(const State& s, int receptacle) {
  const auto names = contents(s, receptacle);
  const std::string r = receptacle_name(s.scene.receptacles[receptacle]);
  if (names.empty()) return "on the " + r + ", you see nothing.";
  std::vector<std::string> withart;
  for (const auto& n : names) withart.push_back("a " + n);
  return "on the " + r + ", you see " + text::join_list(withart) + ".";
}

std::vector<Command> commands_for(const State& s) {
  std::vector<Command> out;
  out.push_back({Verb::kLook, -1, -1, "look"});
  out.push_back({Verb::kInventory, -1, -1, "inventory"});
  const int n = static_cast<int>(s.scene.receptacles.size());
  for (int r = 0; r < n; ++r) {
    if (r != s.location) out.push_back({Verb::kGoTo, r, -1, "go to " + receptacle_name(s.scene.receptacles[r])});
  }
  for (int r = 0; r < n; ++r) {
    out.push_back({Verb::kExamine, r, -1, "examine " + receptacle_name(s.scene.receptacles[r])});
  }
  if (s.location >= 0) {
    const std::string here = receptacle_name(s.scene.receptacles[s.location]);
    if (!s.holding) {
      for (int o = 0; o < static_cast<int>(s.scene.objects.size()); ++o) {
        if (s.scene.objects[o].location == s.location) {
          out.push_back({Verb::kTake, s.location, o, "take " + object_name(s.scene.objects[o]) + " from " + here});
        }
      }
    } else {
      const std::string held = object_name(s.scene.objects[*s.holding]);
      out.push_back({Verb::kPut, s.location, *s.holding, "put " + held + " in/on " + here});
      const auto& rec = s.scene.receptacles[s.location];
      if (rec.type == kSinkType && rec.number == 1) {
        out.push_back({Verb::kClean, s.location, *s.holding, "clean " + held + " with sink 1"});
      }
    }
  }
  return out;
}

std::string apply(State& s, const Command& c) {
  switch (c.verb) {
    case Verb::kLook:
      if (s.location < 0) return "you are in the middle of the room.";
      return "you are at " + receptacle_name(s.scene.receptacles[s.location]) + ".";
    case Verb::kInventory:
      if (!s.holding) return "you are not carrying anything.";
      return "you are carrying: a " + object_name(s.scene.objects[*s.holding]) + ".";
    case Verb::kGoTo: {
      s.location = c.receptacle;
      std::string d = describe(s, c.receptacle);
      return "you arrive at " + receptacle_name(s.scene.receptacles[c.receptacle]) + ". " + d;
    }
    case Verb::kExamine:
      return describe(s, c.receptacle);
    case Verb::kTake:
      s.scene.objects[c.object].location = -1;
      s.holding = c.object;
      return "you pick up the " + object_name(s.scene.objects[c.object]) + " from the " +
             receptacle_name(s.scene.receptacles[c.receptacle]) + ".";
    case Verb::kPut:
      s.scene.objects[c.object].location = c.receptacle;
      s.holding.reset();
      return "you put the " + object_name(s.scene.objects[c.object]) + " in/on the " +
             receptacle_name(s.scene.receptacles[c.receptacle]) + ".";
    case Verb::kClean:
      s.scene.objects[c.object].clean = true;
      return "you clean the " + object_name(s.scene.objects[c.object]) + " using the sink 1.";
  }
  return "";
}

std::vector<std::string> feedback_templates() {
  return {"you are in the middle of the room.",
          "you are at {r}.",
          "you are not carrying anything.",
          "you are carrying: a {o}.",
          "you arrive at {r}. on the {r}, you see nothing. you see a {o} and a {o}.",
          "you pick up the {o} from the {r}.",
          "you put the {o} in/on the {r}.",
          "you clean the {o} using the sink 1.",
          "look inventory go to examine take from put clean with",
          "you are in the middle of a room. looking quickly around you, you see {list}.",
          "put a clean {o} in the {r}",
          "put a {o} on the {r}"};
}

Vocabulary build_vocabulary() {
  std::vector<std::string> lexicon;
  for (const auto& t : feedback_templates()) lexicon.push_back(text::fill(t, {}));
  for (const auto& r : receptacle_types()) lexicon.push_back(r.noun);
  for (const auto& o : object_types()) lexicon.push_back(o.noun);
  for (int n = 1; n <= 99; ++n) lexicon.push_back(std::to_string(n));
  return Vocabulary::from_lexicon(lexicon);
}

std::vector<Layout> build_layouts() {
  Rng rng(0x6c61796f757473ULL);
  std::vector<Layout> out;
  std::set<std::vector<int>> seen;
  const int types = static_cast<int>(receptacle_types().size());
  while (static_cast<int>(out.size()) < kPoolA + kPoolB) {
    std::vector<int> counts(types, 0);
    counts[kSinkType] = 1;
    const int total = rng.uniform_range(25, 30);
    int have = 1;
    while (have < total) {
      const int t = rng.uniform(types);
      if (t == kSinkType || counts[t] >= 4) continue;
      ++counts[t];
      ++have;
    }
    if (!seen.insert(counts).second) continue;
    Layout layout;
    for (int t = 0; t < types; ++t) {
      for (int k = 1; k <= counts[t]; ++k) layout.receptacles.push_back({t, k});
    }
    out.push_back(std::move(layout));
  }
  return out;
}

}  // namespace

const std::vector<ReceptacleType>& receptacle_types() {
  static const std::vector<ReceptacleType> v = {
      {"countertop", false},    {"cabinet", true},      {"drawer", true},       {"shelf", false},
      {"sink", true},           {"fridge", true},       {"microwave", true},    {"stove burner", false},
      {"dining table", false},  {"side table", false},  {"desk", false},        {"dresser", false},
      {"garbage can", true},    {"coffee machine", false}, {"toaster", false},  {"bed", false},
      {"sofa", false},          {"armchair", false},    {"safe", true},         {"bathtub basin", true},
      {"toilet", false},        {"towel holder", false}, {"metal rack", false}, {"cart", false},
  };
  return v;
}

const std::vector<ObjectType>& object_types() {
  static const std::vector<ObjectType> v = {
      {"sponge", true},  {"mug", true},     {"apple", true},    {"cup", true},      {"plate", true},
      {"bowl", true},    {"knife", true},   {"fork", true},     {"spoon", true},    {"pan", true},
      {"pot", true},     {"kettle", true},  {"cloth", true},    {"spatula", true},  {"ladle", true},
      {"potato", true},  {"tomato", true},  {"egg", true},      {"lettuce", true},  {"soapbar", false},
      {"bread", false},  {"book", false},   {"pen", false},     {"pencil", false},  {"candle", false},
      {"vase", false},   {"towel", false},  {"box", false},     {"keychain", false}, {"watch", false},
  };
  return v;
}

const std::vector<Layout>& layouts() {
  static const std::vector<Layout> v = build_layouts();
  return v;
}

Config Config::from_overrides(OverrideReader& reader) {
  Config c;
  const std::string regime = reader.get_string("regime", "new_instr");
  if (regime == "new_instr") {
    c.regime = Regime::kNewInstructions;
  } else if (regime == "new_layout") {
    c.regime = Regime::kNewLayouts;
  } else {
    fail(ErrorCode::kInvalidArgument, "textchoice: regime must be new_instr or new_layout");
  }
  c.objects_min = reader.get_int("objects_min", c.objects_min);
  c.objects_max = reader.get_int("objects_max", c.objects_max);
  c.clean_weight = reader.get_double("clean_weight", c.clean_weight);
  return c;
}

void Config::validate() const {
  if (objects_min < 1 || objects_max < objects_min || objects_max > 100) {
    fail(ErrorCode::kInvalidArgument, "textchoice: objects range must satisfy 1 <= min <= max <= 100");
  }
  if (!(clean_weight >= 0 && clean_weight <= 1)) {
    fail(ErrorCode::kInvalidArgument, "textchoice: clean_weight must be in [0, 1]");
  }
}

std::uint64_t Goal::triple_hash() const {
  StableHasher h;
  h.add_string("textchoice-goal");
  h.add_i64(static_cast<int>(family));
  h.add_string(object_types()[object_type].noun);
  h.add_string(receptacle_types()[receptacle_type].noun);
  return h.digest();
}

std::string receptacle_name(const Receptacle& r) {
  return receptacle_types()[r.type].noun + " " + std::to_string(r.number);
}

std::string object_name(const Object& o) { return object_types()[o.type].noun + " " + std::to_string(o.number); }

std::string goal_text(const Goal& goal) {
  const auto& r = receptacle_types()[goal.receptacle_type];
  return std::string("put a ") + (goal.family == Family::kCleanThenPut ? "clean " : "") +
         object_types()[goal.object_type].noun + (r.inside ? " in the " : " on the ") + r.noun;
}

std::vector<int> layout_pool(Split split, Regime regime) {
  std::vector<int> pool;
  if (split != Split::kTrain && regime == Regime::kNewLayouts) {
    for (int i = kPoolA; i < kPoolA + kPoolB; ++i) pool.push_back(i);
  } else {
    for (int i = 0; i < kPoolA; ++i) pool.push_back(i);
  }
  return pool;
}

std::pair<Scene, Goal> generate_scene(Rng& rng, Split split, const Config& config) {
  const auto pool = layout_pool(split, config.regime);
  Scene scene;
  scene.layout = rng.pick(pool);
  scene.receptacles = layouts()[scene.layout].receptacles;

  std::vector<int> present_types;
  for (const auto& r : scene.receptacles) {
    if (present_types.empty() || present_types.back() != r.type) present_types.push_back(r.type);
  }
  std::vector<int> cleanable;
  for (int t = 0; t < static_cast<int>(object_types().size()); ++t) {
    if (object_types()[t].cleanable) cleanable.push_back(t);
  }

  Goal goal;
  for (int attempt = 0;; ++attempt) {
    require(attempt < 100000, "textchoice: no goal triple for split");
    goal.family = rng.bernoulli(config.clean_weight) ? Family::kCleanThenPut : Family::kPut;
    goal.object_type = goal.family == Family::kCleanThenPut
                           ? rng.pick(cleanable)
                           : rng.uniform(static_cast<int>(object_types().size()));
    goal.receptacle_type = rng.pick(present_types);
    if (split_for_hash(goal.triple_hash()) == split) break;
  }

  const int n_rec = static_cast<int>(scene.receptacles.size());
  const int n_obj = rng.uniform_range(config.objects_min, config.objects_max);
  std::vector<int> next_number(object_types().size(), 1);
  for (int i = 0; i < n_obj; ++i) {
    Object o;
    o.type = i == 0 ? goal.object_type : rng.uniform(static_cast<int>(object_types().size()));
    o.number = next_number[o.type]++;
    do {
      o.location = rng.uniform(n_rec);
    } while (o.type == goal.object_type && scene.receptacles[o.location].type == goal.receptacle_type);
    o.clean = !object_types()[o.type].cleanable || rng.bernoulli(0.5);
    if (goal.family == Family::kCleanThenPut && o.type == goal.object_type) o.clean = false;
    scene.objects.push_back(o);
  }
  return {std::move(scene), goal};
}

std::vector<std::string> valid_commands(const State& state) {
  std::vector<std::string> out;
  for (auto& c : commands_for(state)) out.push_back(std::move(c.text));
  return out;
}

bool goal_satisfied(const State& state, const Goal& goal) {
  for (const auto& o : state.scene.objects) {
    if (o.type != goal.object_type || o.location < 0) continue;
    if (goal.family == Family::kCleanThenPut && !o.clean) continue;
    if (state.scene.receptacles[o.location].type == goal.receptacle_type) return true;
  }
  return false;
}

std::string apply_command(State& state, const std::string& command) {
  for (const auto& c : commands_for(state)) {
    if (c.text == command) return apply(state, c);
  }
  fail(ErrorCode::kContractViolation, "textchoice: command not valid here: " + command);
}

std::vector<std::string> plan(const State& state, const Goal& goal) {
  State s = state;
  std::vector<std::string> cmds;
  auto run = [&](const std::string& cmd) {
    cmds.push_back(cmd);
    apply_command(s, cmd);
  };
  auto go = [&](int r) {
    if (s.location != r) run("go to " + receptacle_name(s.scene.receptacles[r]));
  };
  const int n_rec = static_cast<int>(s.scene.receptacles.size());

  if (s.holding && s.scene.objects[*s.holding].type != goal.object_type) {
    if (s.location < 0) go(0);
    run("put " + object_name(s.scene.objects[*s.holding]) + " in/on " +
        receptacle_name(s.scene.receptacles[s.location]));
  }
  int target = -1;
  if (s.holding) {
    target = *s.holding;
  } else {
    for (int o = 0; o < static_cast<int>(s.scene.objects.size()); ++o) {
      if (s.scene.objects[o].type == goal.object_type) {
        target = o;
        break;
      }
    }
    require(target >= 0, "textchoice: goal object missing from scene");
    go(s.scene.objects[target].location);
    run("take " + object_name(s.scene.objects[target]) + " from " +
        receptacle_name(s.scene.receptacles[s.location]));
  }
  if (goal.family == Family::kCleanThenPut && !s.scene.objects[target].clean) {
    int sink = -1;
    for (int r = 0; r < n_rec; ++r) {
      if (s.scene.receptacles[r].type == kSinkType && s.scene.receptacles[r].number == 1) sink = r;
    }
    require(sink >= 0, "textchoice: layout has no sink 1");
    go(sink);
    run("clean " + object_name(s.scene.objects[target]) + " with sink 1");
  }
  int dest = -1;
  for (int r = 0; r < n_rec && dest < 0; ++r) {
    if (s.scene.receptacles[r].type == goal.receptacle_type) dest = r;
  }
  require(dest >= 0, "textchoice: goal receptacle missing from layout");
  go(dest);
  run("put " + object_name(s.scene.objects[target]) + " in/on " + receptacle_name(s.scene.receptacles[dest]));
  return cmds;
}

SymbolGrid grid_projection(const std::vector<std::string>& items, const Vocabulary& vocab) {
  if (items.size() > static_cast<std::size_t>(kGridHeight * kGridWidth)) {
    fail(ErrorCode::kContractViolation, "textchoice: " + std::to_string(items.size()) + " items exceed the grid");
  }
  SymbolGrid grid(kGridHeight, kGridWidth, kWordsPerCell);
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto ids = tokenize(items[i], vocab);
    require(ids.size() <= static_cast<std::size_t>(kWordsPerCell), "textchoice: item name longer than a cell");
    grid.set_cell(static_cast<int>(i) / kGridWidth, static_cast<int>(i) % kGridWidth, ids);
  }
  return grid;
}

std::vector<std::string> grid_items(const SymbolGrid& grid, const Vocabulary& vocab) {
  std::vector<std::string> items;
  for (int r = 0; r < grid.height; ++r) {
    for (int c = 0; c < grid.width; ++c) {
      std::string name;
      for (TokenId id : grid.cell(r, c)) {
        if (id == kPadId) continue;
        if (!name.empty()) name += ' ';
        name += vocab.word(id);
      }
      if (!name.empty()) items.push_back(std::move(name));
    }
  }
  return items;
}

std::vector<std::string> scene_items(const Scene& scene) {
  std::vector<std::string> items;
  for (const auto& r : scene.receptacles) items.push_back(receptacle_name(r));
  for (const auto& o : scene.objects) items.push_back(object_name(o));
  return items;
}

// ---------------------------------------------------------------------------

TextChoiceGame::TextChoiceGame(Config config, Split split)
    : config_(config), split_(split), vocab_(build_vocabulary()) {
  config_.validate();
}

Observation TextChoiceGame::reset(std::uint64_t seed) {
  Rng rng(mix_seed(seed, 0x616c66));
  auto [scene, goal] = generate_scene(rng, split_, config_);
  state_ = State{};
  state_.scene = std::move(scene);
  goal_ = goal;
  feedback_ = "you are in the middle of the room.";
  done_ = false;
  commands_ = valid_commands(state_);
  return observe();
}

StepResult TextChoiceGame::step(int action) {
  if (done_) fail(ErrorCode::kBadState, "textchoice: step after done");
  if (action < 0 || action >= static_cast<int>(commands_.size())) {
    fail(ErrorCode::kInvalidArgument, "textchoice: invalid choice " + std::to_string(action));
  }
  auto cmds = commands_for(state_);
  feedback_ = apply(state_, cmds[action]);
  StepResult result;
  if (goal_satisfied(state_, goal_)) {
    done_ = true;
    result.done = true;
    result.reward = 1.0;
    result.info.win = true;
  }
  commands_ = valid_commands(state_);
  result.observation = observe();
  return result;
}

Observation TextChoiceGame::observe() const {
  Observation obs;
  obs.grid = grid_projection(scene_items(state_.scene), vocab_);
  std::vector<std::string> rec_names;
  for (const auto& r : state_.scene.receptacles) rec_names.push_back(receptacle_name(r));
  const std::string room =
      "you are in the middle of a room. looking quickly around you, you see " + text::join(rec_names, ", ") + ".";
  const std::string inventory = state_.holding
                                    ? "you are carrying: a " + object_name(state_.scene.objects[*state_.holding]) + "."
                                    : "you are not carrying anything.";
  obs.text = make_text_bundle(
      vocab_, {{"goal", goal_text(goal_)}, {"room", room}, {"observation", feedback_}, {"inventory", inventory}});
  obs.relpos = relative_position(kGridHeight, kGridWidth, std::nullopt);
  obs.actions.kind = ActionKind::kTextChoices;
  obs.actions.choice_text = commands_;
  for (const auto& c : commands_) obs.actions.choices.push_back(tokenize(c, vocab_));
  obs.legend = legend_for(obs.grid, vocab_);
  return obs;
}

}  // namespace silg::textchoice
