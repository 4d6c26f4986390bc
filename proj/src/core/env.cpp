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

#include "silg/env.hpp"

#include <algorithm>
#include <sstream>

namespace silg {

Environment::Environment(std::unique_ptr<Game> game, Split split, std::uint64_t seed, WrapOptions options)
    : id_(game->name()), game_(std::move(game)), split_(split), next_seed_(seed), options_(options) {}

const Observation& Environment::reset(std::uint64_t seed) {
  episode_seed_ = seed;
  next_seed_ = seed + 1;
  current_ = game_->reset(seed);
  has_episode_ = true;
  done_ = false;
  steps_ = 0;
  return current_;
}

const Observation& Environment::reset() { return reset(next_seed_); }

StepResult Environment::step(int action) {
  if (!has_episode_) fail(ErrorCode::kBadState, "step before reset");
  if (done_) fail(ErrorCode::kBadState, "step after episode end; call reset");
  const int arity = current_.actions.arity();
  if (action < 0 || action >= arity) {
    fail(ErrorCode::kInvalidArgument,
         "action " + std::to_string(action) + " out of range [0, " + std::to_string(arity) + ")");
  }
  StepResult inner = game_->step(action);
  ++steps_;
  WrapOptions opts = options_;
  opts.limit_reward = game_->limit_reward();
  StepResult result = wrap_step(std::move(inner), steps_, opts);
  done_ = result.done;
  current_ = result.observation;
  return result;
}

const Observation& Environment::observation() const {
  if (!has_episode_) fail(ErrorCode::kBadState, "no observation before reset");
  return current_;
}

namespace {

// Short glyph for a legend entry: first character of each word, up to 2.
std::string glyph_for(const std::string& word) {
  std::string g;
  bool start = true;
  for (char c : word) {
    if (c == '_' || c == ' ') {
      start = true;
      continue;
    }
    if (start && g.size() < 2) g.push_back(c);
    start = false;
  }
  if (g.size() < 2 && word.size() >= 2) g = word.substr(0, 2);
  return g;
}

}  // namespace

std::string render_observation(const Observation& obs, const std::vector<std::string>& action_names) {
  std::ostringstream out;
  const auto& g = obs.grid;

  // Assign each distinct cell content (id tuple) a glyph.
  std::map<std::vector<TokenId>, std::string> glyphs;
  std::map<std::string, int> used;
  for (int r = 0; r < g.height; ++r) {
    for (int c = 0; c < g.width; ++c) {
      auto span = g.cell(r, c);
      std::vector<TokenId> key(span.begin(), span.end());
      if (glyphs.count(key)) continue;
      std::string label;
      for (TokenId id : key) {
        if (id == kPadId) continue;
        auto it = obs.legend.find(id);
        if (!label.empty()) label += ' ';
        label += it == obs.legend.end() ? "?" : it->second;
      }
      std::string glyph;
      if (label.empty()) {
        glyph = " .";
      } else if (label == "unseen") {
        glyph = std::string(kUnseenGlyph);
      } else {
        glyph = glyph_for(label);
        if (glyph.size() < 2) glyph = " " + glyph;
        if (used[glyph]++ > 0) glyph = glyph.substr(0, 1) + std::to_string(used[glyph] % 10);
      }
      glyphs.emplace(std::move(key), glyph);
    }
  }

  for (int r = 0; r < g.height; ++r) {
    for (int c = 0; c < g.width; ++c) {
      auto span = g.cell(r, c);
      out << glyphs[std::vector<TokenId>(span.begin(), span.end())];
    }
    out << '\n';
  }

  out << "\nkey:\n";
  for (const auto& [key, glyph] : glyphs) {
    std::string label;
    for (TokenId id : key) {
      if (id == kPadId) continue;
      auto it = obs.legend.find(id);
      if (!label.empty()) label += ' ';
      label += it == obs.legend.end() ? "?" : it->second;
    }
    if (label.empty()) label = "empty";
    out << "  [" << glyph << "] " << label << '\n';
  }

  out << '\n';
  for (int i = 0; i < obs.text.num_fields(); ++i) {
    out << obs.text.field_names[i] << ": "
        << (i < static_cast<int>(obs.text.field_text.size()) ? obs.text.field_text[i] : "") << '\n';
  }

  out << "\nactions:\n";
  switch (obs.actions.kind) {
    case ActionKind::kFixed:
      for (int a = 0; a < obs.actions.fixed_count; ++a) {
        out << "  " << a << ": " << (a < static_cast<int>(action_names.size()) ? action_names[a] : "") << '\n';
      }
      break;
    case ActionKind::kTextChoices:
      for (std::size_t a = 0; a < obs.actions.choice_text.size(); ++a) {
        out << "  " << a << ": " << obs.actions.choice_text[a] << '\n';
      }
      break;
    case ActionKind::kNavCoordinates:
      for (std::size_t a = 0; a < obs.actions.columns.size(); ++a) {
        out << "  " << a << ": x=" << obs.actions.columns[a] << '\n';
      }
      if (obs.actions.stop_option) out << "  " << obs.actions.columns.size() << ": stop\n";
      break;
  }
  return out.str();
}

}  // namespace silg
