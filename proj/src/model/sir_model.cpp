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

#include "silg/sir_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

namespace silg::sir {

namespace {

enum Encoder { kFieldEncoder = 0, kJointEncoder = 1, kChoiceEncoder = 2 };

constexpr int kCropSize = 5;

std::string layer_name(int layer, const char* what) { return "film" + std::to_string(layer) + "." + what; }

}  // namespace

const char* head_kind_name(HeadKind kind) {
  switch (kind) {
    case HeadKind::kFixed: return "fixed";
    case HeadKind::kChoices: return "choices";
    case HeadKind::kNav: return "nav";
  }
  return "?";
}

HeadKind head_kind_from_name(std::string_view name) {
  if (name == "fixed") return HeadKind::kFixed;
  if (name == "choices") return HeadKind::kChoices;
  if (name == "nav") return HeadKind::kNav;
  fail(ErrorCode::kInvalidArgument, "unknown head kind: " + std::string(name));
}

HeadKind head_kind_for(ActionKind kind) {
  switch (kind) {
    case ActionKind::kFixed: return HeadKind::kFixed;
    case ActionKind::kTextChoices: return HeadKind::kChoices;
    case ActionKind::kNavCoordinates: return HeadKind::kNav;
  }
  return HeadKind::kFixed;
}

// ---------------------------------------------------------------------------
// Config

void ModelConfig::validate() const {
  auto check = [](bool ok, const std::string& what) {
    if (!ok) fail(ErrorCode::kInvalidArgument, "model config: " + what);
  };
  check(vocab_size > 2, "vocab_size must exceed the reserved ids");
  check(embed_dim > 0, "embed_dim must be positive");
  check(rnn_dim > 0 && rnn_dim % 2 == 0, "rnn_dim must be positive and even");
  check(film_layers >= 1, "film_layers must be >= 1");
  check(film_channels >= 0, "film_channels must be >= 0");
  check(final_dim > 0, "final_dim must be positive");
  check(height > 0 && width > 0, "grid size must be positive");
  check(!field_names.empty(), "at least one text field is required");
  check(head != HeadKind::kFixed || fixed_count > 0, "fixed head needs fixed_count > 0");
  auto sorted = field_names;
  std::sort(sorted.begin(), sorted.end());
  check(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end(), "duplicate field name");
}

ModelConfig ModelConfig::for_observation(const Observation& obs, int vocab_size) {
  ModelConfig c;
  c.vocab_size = vocab_size;
  c.head = head_kind_for(obs.actions.kind);
  c.fixed_count = obs.actions.kind == ActionKind::kFixed ? obs.actions.fixed_count : 0;
  c.nav_stop = obs.actions.kind == ActionKind::kNavCoordinates && obs.actions.stop_option;
  c.height = obs.grid.height;
  c.width = obs.grid.width;
  c.field_names = obs.text.field_names;
  return c;
}

std::string ModelConfig::to_json() const {
  nlohmann::json j;
  j["vocab_size"] = vocab_size;
  j["embed_dim"] = embed_dim;
  j["rnn_dim"] = rnn_dim;
  j["film_layers"] = film_layers;
  j["film_channels"] = film_channels;
  j["final_dim"] = final_dim;
  j["head"] = head_kind_name(head);
  j["fixed_count"] = fixed_count;
  j["nav_stop"] = nav_stop;
  j["height"] = height;
  j["width"] = width;
  j["field_names"] = field_names;
  j["variants"] = {{"state", variants.state},
                   {"local_conv", variants.local_conv},
                   {"entity_attn", variants.entity_attn},
                   {"concat_fields", variants.concat_fields}};
  return j.dump();
}

ModelConfig ModelConfig::from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    ModelConfig c;
    c.vocab_size = j.at("vocab_size").get<int>();
    c.embed_dim = j.at("embed_dim").get<int>();
    c.rnn_dim = j.at("rnn_dim").get<int>();
    c.film_layers = j.at("film_layers").get<int>();
    c.film_channels = j.at("film_channels").get<int>();
    c.final_dim = j.at("final_dim").get<int>();
    c.head = head_kind_from_name(j.at("head").get<std::string>());
    c.fixed_count = j.at("fixed_count").get<int>();
    c.nav_stop = j.at("nav_stop").get<bool>();
    c.height = j.at("height").get<int>();
    c.width = j.at("width").get<int>();
    c.field_names = j.at("field_names").get<std::vector<std::string>>();
    const auto& v = j.at("variants");
    c.variants.state = v.at("state").get<bool>();
    c.variants.local_conv = v.at("local_conv").get<bool>();
    c.variants.entity_attn = v.at("entity_attn").get<bool>();
    c.variants.concat_fields = v.at("concat_fields").get<bool>();
    c.validate();
    return c;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kParse, std::string("model config: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// FiLM2

Film2Output film2_layer(nn::Tape& t, const Film2Params& p, nn::Var x_vis, nn::Var x_text, int height, int width) {
  using namespace nn;
  const Var gamma = linear(t, x_text, p.gamma_w, p.gamma_b);
  const Var beta = linear(t, x_text, p.beta_w, p.beta_b);
  const Var vis = conv3x3(t, x_vis, height, width, p.conv_vis, p.conv_vis_b);
  const Var v_vis = relu(t, modulate(t, vis, gamma, beta));

  const Var big_gamma = conv3x3(t, x_vis, height, width, p.conv_gamma, p.conv_gamma_b);
  const Var big_beta = conv3x3(t, x_vis, height, width, p.conv_beta, p.conv_beta_b);
  const Var text = linear(t, x_text, p.text_w, p.text_b);
  const Var v_text = relu(t, modulate(t, text, big_gamma, big_beta));

  const Var v = add(t, v_vis, v_text);
  return {v, max_rows(t, v)};
}

// ---------------------------------------------------------------------------
// Model

SirModel::SirModel(ModelConfig config, std::uint64_t seed) : config_(std::move(config)) {
  config_.validate();
  if (config_.variants.local_conv && config_.height * config_.width < 1) {
    fail(ErrorCode::kInvalidArgument, "local_conv needs a grid");
  }
  init(seed);
}

void SirModel::init(std::uint64_t seed) {
  const ModelConfig& c = config_;
  const int d = c.embed_dim, r = c.rnn_dim, f = c.final_dim, ch = c.channels();
  const int half = r / 2;
  const int u_channels = c.variants.entity_attn ? r : d;
  Rng rng(mix_seed(seed, 0x5349524d));

  // Weights uniform in +-1/sqrt(fan_in); biases zero.
  auto weight = [&](const std::string& name, int rows, int cols, int fan_in) {
    nn::Param& prm = params_.add(name, rows, cols);
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (double& v : prm.value) v = rng.uniform_real(-bound, bound);
  };
  auto bias = [&](const std::string& name, int cols) { params_.add(name, 1, cols); };
  auto lstm_params = [&](const std::string& prefix, int in, int hidden) {
    weight(prefix + ".wx", in, 4 * hidden, in + hidden);
    weight(prefix + ".wh", hidden, 4 * hidden, in + hidden);
    nn::Param& b = params_.add(prefix + ".b", 1, 4 * hidden);
    for (int j = 0; j < hidden; ++j) b.value[hidden + j] = 1.0;  // forget gate
  };

  nn::Param& embed = params_.add("embed", c.vocab_size, d);
  for (double& v : embed.value) v = 0.1 * rng.normal();
  pin_pad();

  lstm_params("enc.field.fwd", d, half);
  lstm_params("enc.field.bwd", d, half);
  lstm_params("enc.joint.fwd", d, half);
  lstm_params("enc.joint.bwd", d, half);
  for (const auto& name : c.field_names) {
    weight("pool.field." + name + ".w", r, 1, r);
    bias("pool.field." + name + ".b", 1);
  }
  weight("pool.C.w", r, 1, r);
  bias("pool.C.b", 1);
  weight("pool.A.w", r, 1, r);
  bias("pool.A.b", 1);
  if (c.variants.entity_attn) weight("entity.query_w", d, r, d);

  int c_prev = u_channels;
  for (int i = 1; i <= c.film_layers; ++i) {
    const int cin = c_prev + 2;
    weight(layer_name(i, "query_w"), c_prev, r, c_prev);
    bias(layer_name(i, "query_b"), r);
    weight(layer_name(i, "gamma_w"), 3 * r, ch, 3 * r);
    bias(layer_name(i, "gamma_b"), ch);
    weight(layer_name(i, "beta_w"), 3 * r, ch, 3 * r);
    bias(layer_name(i, "beta_b"), ch);
    weight(layer_name(i, "conv_vis"), 9 * cin, ch, 9 * cin);
    bias(layer_name(i, "conv_vis_b"), ch);
    weight(layer_name(i, "conv_gamma"), 9 * cin, ch, 9 * cin);
    bias(layer_name(i, "conv_gamma_b"), ch);
    weight(layer_name(i, "conv_beta"), 9 * cin, ch, 9 * cin);
    bias(layer_name(i, "conv_beta_b"), ch);
    weight(layer_name(i, "text_w"), 3 * r, ch, 3 * r);
    bias(layer_name(i, "text_b"), ch);
    c_prev = ch;
  }
  const int flat = c.height * c.width * ch;
  weight("out.w", flat, f, flat);
  bias("out.b", f);
  if (c.variants.local_conv) {
    weight("local.conv_w", 9 * ch, ch, 9 * ch);
    bias("local.conv_b", ch);
    weight("local.w", kCropSize * kCropSize * ch, f, kCropSize * kCropSize * ch);
  }
  if (c.variants.state) lstm_params("state", f, f);

  weight("value.w1", f, f, f);
  bias("value.b1", f);
  weight("value.w2", f, 1, f);
  bias("value.b2", 1);

  switch (c.head) {
    case HeadKind::kFixed:
      weight("policy.w1", f, f, f);
      bias("policy.b1", f);
      weight("policy.w2", f, c.fixed_count, f);
      bias("policy.b2", c.fixed_count);
      break;
    case HeadKind::kChoices:
      lstm_params("enc.choice.fwd", d, half);
      lstm_params("enc.choice.bwd", d, half);
      weight("policy.query_w", f, r, f);
      bias("policy.query_b", r);
      weight("policy.score_w", r, 1, r);
      bias("policy.score_b", 1);
      break;
    case HeadKind::kNav: {
      const int col = c.height * u_channels;
      weight("policy.column_w", col, f, col);
      bias("policy.column_b", f);
      if (c.nav_stop) weight("policy.stop", 1, f, f);
      break;
    }
  }
}

void SirModel::pin_pad() {
  nn::Param& embed = params_.get("embed");
  std::fill_n(embed.value.begin() + static_cast<std::ptrdiff_t>(kPadId) * embed.cols, embed.cols, 0.0);
  std::fill_n(embed.grad.begin() + static_cast<std::ptrdiff_t>(kPadId) * embed.cols, embed.cols, 0.0);
}

nn::LstmParams SirModel::lstm(nn::Tape& t, const std::string& prefix) {
  return {p(t, prefix + ".wx"), p(t, prefix + ".wh"), p(t, prefix + ".b")};
}

Film2Params SirModel::film_params(nn::Tape& t, int layer) {
  Film2Params fp;
  fp.gamma_w = p(t, layer_name(layer, "gamma_w"));
  fp.gamma_b = p(t, layer_name(layer, "gamma_b"));
  fp.beta_w = p(t, layer_name(layer, "beta_w"));
  fp.beta_b = p(t, layer_name(layer, "beta_b"));
  fp.conv_vis = p(t, layer_name(layer, "conv_vis"));
  fp.conv_vis_b = p(t, layer_name(layer, "conv_vis_b"));
  fp.conv_gamma = p(t, layer_name(layer, "conv_gamma"));
  fp.conv_gamma_b = p(t, layer_name(layer, "conv_gamma_b"));
  fp.conv_beta = p(t, layer_name(layer, "conv_beta"));
  fp.conv_beta_b = p(t, layer_name(layer, "conv_beta_b"));
  fp.text_w = p(t, layer_name(layer, "text_w"));
  fp.text_b = p(t, layer_name(layer, "text_b"));
  return fp;
}

nn::Var SirModel::encode(ForwardContext& ctx, int encoder, const std::vector<TokenId>& tokens_in) {
  // Pads carry no information; an empty sequence is read as a single unknown.
  std::vector<TokenId> tokens;
  for (TokenId id : tokens_in) {
    if (id != kPadId) tokens.push_back(id);
  }
  if (tokens.empty()) tokens.push_back(kUnknownId);
  auto key = std::make_pair(encoder, tokens);
  auto it = ctx.encodings_.find(key);
  if (it != ctx.encodings_.end()) return it->second;
  nn::Tape& t = ctx.tape;
  const char* prefix = encoder == kFieldEncoder ? "enc.field" : encoder == kJointEncoder ? "enc.joint" : "enc.choice";
  const nn::Var x = nn::embed_tokens(t, p(t, "embed"), tokens);
  const nn::Var out = nn::bilstm(t, x, lstm(t, std::string(prefix) + ".fwd"), lstm(t, std::string(prefix) + ".bwd"));
  ctx.encodings_.emplace(std::move(key), out);
  return out;
}

PooledText SirModel::encode_text(ForwardContext& ctx, const TextBundle& text) {
  // Memo key: every field's tokens and the joint text, separated by -1, in
  // canonical field order.
  std::vector<int> order(text.num_fields());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) { return text.field_names[a] < text.field_names[b]; });
  std::vector<TokenId> key;
  for (int i : order) {
    for (TokenId id : text.fields[i]) {
      if (id != kPadId) key.push_back(id);
    }
    key.push_back(-1);
  }
  key.insert(key.end(), text.joint.begin(), text.joint.end());
  auto it = ctx.pooled_.find(key);
  if (it != ctx.pooled_.end()) return it->second;

  nn::Tape& t = ctx.tape;
  PooledText out;
  out.d = encode(ctx, kJointEncoder, text.joint);
  std::vector<nn::Var> c_rows, a_rows, token_rows;
  for (int i : order) {
    const std::string& name = text.field_names[i];
    if (!params_.contains("pool.field." + name + ".w")) {
      fail(ErrorCode::kContractViolation, "model has no scorer for text field '" + name + "'");
    }
    const nn::Var n_i = config_.variants.concat_fields ? out.d : encode(ctx, kFieldEncoder, text.fields[i]);
    const nn::Var c_i = nn::weightave(t, n_i, p(t, "pool.field." + name + ".w"), p(t, "pool.field." + name + ".b"));
    c_rows.push_back(c_i);
    a_rows.push_back(nn::attend(t, out.d, c_i));
    token_rows.push_back(n_i);
  }
  out.c_tilde = nn::concat_rows(t, c_rows);
  out.a_tilde = nn::concat_rows(t, a_rows);
  out.c = nn::weightave(t, out.c_tilde, p(t, "pool.C.w"), p(t, "pool.C.b"));
  out.a = nn::weightave(t, out.a_tilde, p(t, "pool.A.w"), p(t, "pool.A.b"));
  out.tokens = config_.variants.concat_fields ? out.d : nn::concat_rows(t, token_rows);
  ctx.pooled_.emplace(std::move(key), out);
  return out;
}

Outputs SirModel::forward(ForwardContext& ctx, const Observation& obs, const RecurrentState* prev) {
  using namespace nn;
  const ModelConfig& c = config_;
  Tape& t = ctx.tape;
  if (obs.grid.height != c.height || obs.grid.width != c.width) {
    fail(ErrorCode::kContractViolation, "observation grid does not match the model's grid size");
  }
  if (head_kind_for(obs.actions.kind) != c.head) {
    fail(ErrorCode::kContractViolation, std::string("observation action space does not match the ") +
                                            head_kind_name(c.head) + " head");
  }
  if (c.head == HeadKind::kFixed && obs.actions.fixed_count != c.fixed_count) {
    fail(ErrorCode::kContractViolation, "fixed action count does not match the model");
  }
  if (c.head == HeadKind::kNav && obs.actions.stop_option != c.nav_stop) {
    fail(ErrorCode::kContractViolation, "nav stop option does not match the model");
  }
  const int h = c.height, w = c.width, cells = h * w;

  Outputs out;
  out.text = encode_text(ctx, obs.text);
  const PooledText& text = out.text;

  Var u = embed_grid(t, p(t, "embed"), obs.grid);
  if (c.variants.entity_attn) {
    std::vector<char> active(cells, 0);
    for (int q = 0; q < cells; ++q) {
      for (int s = 0; s < obs.grid.words_per_cell; ++s) {
        if (obs.grid.cells[static_cast<std::size_t>(q) * obs.grid.words_per_cell + s] != kPadId) active[q] = 1;
      }
    }
    const Var queries = linear(t, u, p(t, "entity.query_w"), Var{});
    u = attend_each(t, text.tokens, queries, active);
  }
  out.u = u;

  const Var z = t.constant(cells, 2, obs.relpos.offsets);
  Var v = u;
  Var s = max_rows(t, u);
  for (int i = 1; i <= c.film_layers; ++i) {
    const Var query = linear(t, s, p(t, layer_name(i, "query_w")), p(t, layer_name(i, "query_b")));
    const Var x_text = concat_vec(t, {text.c, text.a, attend(t, text.d, query)});
    const Film2Output fo = film2_layer(t, film_params(t, i), concat_cols(t, v, z), x_text, h, w);
    v = fo.v;
    s = fo.s;
  }

  Var pre = linear(t, flatten(t, v), p(t, "out.w"), p(t, "out.b"));
  if (c.variants.local_conv) {
    if (!obs.agent) fail(ErrorCode::kContractViolation, "local_conv variant needs an agent cell");
    const Var window = crop(t, v, h, w, obs.agent->row, obs.agent->col, kCropSize);
    const Var conv = conv3x3(t, window, kCropSize, kCropSize, p(t, "local.conv_w"), p(t, "local.conv_b"));
    pre = add(t, pre, linear(t, flatten(t, conv), p(t, "local.w"), Var{}));
  }
  Var hv = tanh(t, pre);

  if (c.variants.state) {
    const int f = c.final_dim;
    auto vec_or_zero = [&](const std::vector<double>* src) {
      if (src == nullptr || src->empty()) return t.zeros(1, f);
      if (static_cast<int>(src->size()) != f) fail(ErrorCode::kContractViolation, "recurrent state size mismatch");
      return t.constant(1, f, *src);
    };
    const Var h_prev = vec_or_zero(prev ? &prev->h : nullptr);
    const Var c_prev = vec_or_zero(prev ? &prev->c : nullptr);
    out.state = lstm_cell(t, hv, h_prev, c_prev, lstm(t, "state"));
    hv = add(t, hv, slice_cols(t, out.state, 0, f));
  }
  out.h = hv;

  out.value = linear(t, tanh(t, linear(t, hv, p(t, "value.w1"), p(t, "value.b1"))), p(t, "value.w2"), p(t, "value.b2"));

  switch (c.head) {
    case HeadKind::kFixed:
      out.logits =
          linear(t, tanh(t, linear(t, hv, p(t, "policy.w1"), p(t, "policy.b1"))), p(t, "policy.w2"), p(t, "policy.b2"));
      break;
    case HeadKind::kChoices: {
      if (obs.actions.choices.empty()) fail(ErrorCode::kInvalidArgument, "choice head with no choices");
      const Var query = linear(t, hv, p(t, "policy.query_w"), p(t, "policy.query_b"));
      std::vector<Var> scores;
      for (const auto& choice : obs.actions.choices) {
        if (choice.empty()) fail(ErrorCode::kInvalidArgument, "empty choice");
        const Var g = encode(ctx, kChoiceEncoder, choice);
        scores.push_back(linear(t, attend(t, g, query), p(t, "policy.score_w"), p(t, "policy.score_b")));
      }
      out.logits = concat_vec(t, scores);
      break;
    }
    case HeadKind::kNav: {
      std::vector<Var> parts;
      if (!obs.actions.columns.empty()) {
        const Var cols = gather_columns(t, u, h, w, obs.actions.columns);
        parts.push_back(row_dot(t, linear(t, cols, p(t, "policy.column_w"), p(t, "policy.column_b")), hv));
      }
      if (c.nav_stop) parts.push_back(row_dot(t, p(t, "policy.stop"), hv));
      if (parts.empty()) fail(ErrorCode::kInvalidArgument, "nav head with no options");
      out.logits = concat_vec(t, parts);
      break;
    }
  }
  return out;
}

RecurrentState SirModel::next_state(const nn::Tape& t, const Outputs& out) const {
  RecurrentState s;
  if (!out.state.valid()) return s;
  const auto& v = t.value(out.state);
  const int f = config_.final_dim;
  s.h.assign(v.begin(), v.begin() + f);
  s.c.assign(v.begin() + f, v.end());
  return s;
}

SirModel::Evaluation SirModel::evaluate(ForwardContext& ctx, const Observation& obs, RecurrentState* state) {
  const Outputs out = forward(ctx, obs, state);
  Evaluation e;
  e.logits = ctx.tape.value(out.logits);
  e.value = ctx.tape.scalar(out.value);
  if (state && config_.variants.state) *state = next_state(ctx.tape, out);
  return e;
}

SirModel::Evaluation SirModel::evaluate(const Observation& obs, RecurrentState* state) {
  ForwardContext ctx;
  return evaluate(ctx, obs, state);
}

// ---------------------------------------------------------------------------
// Gradient check

GradientCheckReport gradient_check(SirModel& model, const Observation& obs, int action, const RecurrentState* prev,
                                   const GradientCheckOptions& options) {
  auto loss_of = [&](bool backward) {
    ForwardContext ctx;
    const Outputs out = model.forward(ctx, obs, prev);
    nn::Tape& t = ctx.tape;
    const nn::Var loss = nn::add(t, out.value, nn::pick(t, nn::log_softmax(t, out.logits), action));
    if (backward) t.backward(loss);
    return t.scalar(loss);
  };

  model.params().zero_grad();
  loss_of(true);
  model.pin_pad();

  GradientCheckReport report;
  for (nn::Param* prm : model.params().all()) {
    const bool is_embed = prm->name == "embed";
    for (std::size_t i = 0; i < prm->size(); ++i) {
      if (is_embed && static_cast<int>(i) / prm->cols == kPadId) continue;
      const double saved = prm->value[i];
      prm->value[i] = saved + options.epsilon;
      const double up = loss_of(false);
      prm->value[i] = saved - options.epsilon;
      const double down = loss_of(false);
      prm->value[i] = saved;
      const double numeric = (up - down) / (2 * options.epsilon);
      const double analytic = options.zero_analytic ? 0.0 : prm->grad[i];
      const double err = std::abs(analytic - numeric) / std::max(1.0, std::abs(numeric));
      ++report.checked;
      report.max_error = std::max(report.max_error, err);
      if (!(err < options.tolerance)) {
        ++report.failed;
        if (report.failures.size() < 20) {
          report.failures.push_back(prm->name + "[" + std::to_string(i) + "]: analytic " + std::to_string(analytic) +
                                    " vs numeric " + std::to_string(numeric));
        }
      }
    }
  }
  model.params().zero_grad();
  return report;
}

ModelConfig tiny_config(HeadKind head, Variants variants) {
  ModelConfig c;
  c.vocab_size = 12;
  c.embed_dim = 8;
  c.rnn_dim = 8;
  c.film_layers = 2;
  c.film_channels = 8;
  c.final_dim = 8;
  c.head = head;
  c.fixed_count = head == HeadKind::kFixed ? 5 : 0;
  c.nav_stop = head == HeadKind::kNav;
  c.height = 4;
  c.width = 4;
  c.field_names = {"manual", "goal", "inventory"};
  c.variants = variants;
  return c;
}

Observation random_observation(const ModelConfig& config, Rng& rng) {
  const int vocab = config.vocab_size;
  auto token = [&] { return rng.uniform(vocab - 2) + 2; };
  Observation obs;
  obs.grid = SymbolGrid(config.height, config.width, 2);
  for (int r = 0; r < config.height; ++r) {
    for (int c = 0; c < config.width; ++c) {
      if (rng.bernoulli(0.3)) continue;  // leave some cells empty
      obs.grid.at(r, c, 0) = token();
      if (rng.bernoulli(0.4)) obs.grid.at(r, c, 1) = token();
    }
  }
  obs.agent = Cell{rng.uniform(config.height), rng.uniform(config.width)};
  obs.relpos = relative_position(config.height, config.width, obs.agent);

  obs.text.max_len = 6;
  for (const auto& name : config.field_names) {
    const int len = rng.uniform_range(1, 6);
    std::vector<TokenId> f;
    for (int i = 0; i < len; ++i) f.push_back(token());
    obs.text.joint.insert(obs.text.joint.end(), f.begin(), f.end());
    f.resize(obs.text.max_len, kPadId);
    obs.text.field_names.push_back(name);
    obs.text.fields.push_back(std::move(f));
    obs.text.field_text.emplace_back();
  }

  switch (config.head) {
    case HeadKind::kFixed:
      obs.actions = ActionSpaceDescriptor::fixed(config.fixed_count);
      break;
    case HeadKind::kChoices:
      obs.actions.kind = ActionKind::kTextChoices;
      for (int j = 0; j < 3; ++j) {
        std::vector<TokenId> q;
        const int len = rng.uniform_range(1, 4);
        for (int i = 0; i < len; ++i) q.push_back(token());
        obs.actions.choices.push_back(std::move(q));
        obs.actions.choice_text.emplace_back();
      }
      break;
    case HeadKind::kNav:
      obs.actions.kind = ActionKind::kNavCoordinates;
      obs.actions.columns = {0, 2, 3};
      obs.actions.stop_option = config.nav_stop;
      break;
  }
  return obs;
}

}  // namespace silg::sir
