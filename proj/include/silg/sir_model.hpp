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

#pragma once

// The SIR policy/value network: embedding-sum world encoder, BiLSTM text
// encoders, weighted-average and attention pooling over text fields, stacked
// FiLM2 layers, a value baseline and one of three policy heads.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "silg/core.hpp"
#include "silg/nn.hpp"

namespace silg::sir {

enum class HeadKind { kFixed, kChoices, kNav };

const char* head_kind_name(HeadKind kind);
HeadKind head_kind_from_name(std::string_view name);
HeadKind head_kind_for(ActionKind kind);

struct Variants {
  bool state = false;          // recurrent state tracking on H
  bool local_conv = false;     // egocentric 5x5 convolution features
  bool entity_attn = false;    // cell vectors replaced by attention over field tokens
  bool concat_fields = false;  // every field encoded as the single joint string
};

struct ModelConfig {
  int vocab_size = 0;
  int embed_dim = 100;     // d
  int rnn_dim = 200;       // r, two directions of r/2
  int film_layers = 5;
  int film_channels = 0;   // 0 means embed_dim
  int final_dim = 400;
  HeadKind head = HeadKind::kFixed;
  int fixed_count = 0;     // fixed head only
  bool nav_stop = false;   // nav head: append a learned stop option
  int height = 0;
  int width = 0;
  std::vector<std::string> field_names;
  Variants variants;

  int channels() const { return film_channels > 0 ? film_channels : embed_dim; }
  void validate() const;

  // Head kind, grid size, fields and action count taken from an
  // observation; sizes keep their defaults.
  static ModelConfig for_observation(const Observation& obs, int vocab_size);

  std::string to_json() const;
  static ModelConfig from_json(const std::string& text);
};

// Recurrent state S for the state variant; empty vectors mean zeros.
struct RecurrentState {
  std::vector<double> h;
  std::vector<double> c;
};

// Per-layer parameter handles of one FiLM2 layer on a tape.
struct Film2Params {
  nn::Var gamma_w, gamma_b;      // 3r x C, 1 x C
  nn::Var beta_w, beta_b;
  nn::Var conv_vis, conv_vis_b;  // 9 cin x C, 1 x C
  nn::Var conv_gamma, conv_gamma_b;
  nn::Var conv_beta, conv_beta_b;
  nn::Var text_w, text_b;        // 3r x C, 1 x C
};

struct Film2Output {
  nn::Var v;  // (h*w) x C
  nn::Var s;  // 1 x C
};

// x_vis: (h*w) x cin, x_text: 1 x 3r.
Film2Output film2_layer(nn::Tape& t, const Film2Params& p, nn::Var x_vis, nn::Var x_text, int height, int width);

// Pooled text summaries for one observation.
struct PooledText {
  nn::Var d;        // l x r joint encodings
  nn::Var c_tilde;  // n x r, rows in canonical (name-sorted) field order
  nn::Var a_tilde;  // n x r
  nn::Var c;        // 1 x r
  nn::Var a;        // 1 x r
  nn::Var tokens;   // all field-token encodings stacked, T x r
};

struct Outputs {
  nn::Var logits;  // 1 x arity
  nn::Var value;   // 1 x 1
  nn::Var h;       // 1 x final_dim, after variants
  nn::Var state;   // 1 x 2 final_dim = [h', c'] (state variant only)
  nn::Var u;       // (h*w) x channels of the world representation
  PooledText text;
};

class SirModel;

// One tape plus memoized text encodings. Manuals and choices repeat across
// steps, so their encodings are computed once per context.
class ForwardContext {
 public:
  nn::Tape tape;

 private:
  friend class SirModel;
  std::map<std::pair<int, std::vector<TokenId>>, nn::Var> encodings_;
  std::map<std::vector<TokenId>, PooledText> pooled_;
};

class SirModel {
 public:
  SirModel(ModelConfig config, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  nn::ParamStore& params() { return params_; }
  const nn::ParamStore& params() const { return params_; }

  // Builds the graph for one observation. `prev` is used by the state variant.
  Outputs forward(ForwardContext& ctx, const Observation& obs, const RecurrentState* prev = nullptr);

  // Numeric forward without keeping a graph: logits and value; advances
  // `state` for the state variant.
  struct Evaluation {
    std::vector<double> logits;
    double value = 0.0;
  };
  Evaluation evaluate(const Observation& obs, RecurrentState* state = nullptr);
  Evaluation evaluate(ForwardContext& ctx, const Observation& obs, RecurrentState* state = nullptr);

  // Reads the new recurrent state from a forward's outputs.
  RecurrentState next_state(const nn::Tape& t, const Outputs& out) const;

  // Zeroes the pad embedding row (kept pinned at zero).
  void pin_pad();

  PooledText encode_text(ForwardContext& ctx, const TextBundle& text);
  Film2Params film_params(nn::Tape& t, int layer);

 private:
  void init(std::uint64_t seed);
  nn::Var encode(ForwardContext& ctx, int encoder, const std::vector<TokenId>& tokens);
  nn::LstmParams lstm(nn::Tape& t, const std::string& prefix);
  nn::Var p(nn::Tape& t, const std::string& name) { return t.param(params_.get(name)); }

  ModelConfig config_;
  nn::ParamStore params_;
};

// Versioned little-endian binary checkpoint with a manifest of named shapes.
void save_checkpoint(const SirModel& model, const std::string& path);
SirModel load_checkpoint(const std::string& path);
std::string checkpoint_bytes(const SirModel& model);
SirModel checkpoint_from_bytes(const std::string& bytes);

struct GradientCheckOptions {
  double tolerance = 1e-4;
  double epsilon = 1e-6;
  bool zero_analytic = false;  // negative control: pretend the gradient is zero
};

struct GradientCheckReport {
  std::size_t checked = 0;
  std::size_t failed = 0;
  double max_error = 0.0;
  std::vector<std::string> failures;  // "param[index]: analytic vs numeric"

  bool passed() const { return checked > 0 && failed == 0; }
};

// Compares analytic gradients of value + log pi(action) with central
// differences for every parameter entry (the pinned pad embedding row is
// excluded).
GradientCheckReport gradient_check(SirModel& model, const Observation& obs, int action,
                                   const RecurrentState* prev = nullptr, const GradientCheckOptions& options = {});

// Tiny configuration used by the gradient check: d = r = 8, two FiLM2 layers,
// 4x4 grid.
ModelConfig tiny_config(HeadKind head, Variants variants = {});
// A random observation matching `config` (vocabulary of config.vocab_size).
Observation random_observation(const ModelConfig& config, Rng& rng);

}  // namespace silg::sir
