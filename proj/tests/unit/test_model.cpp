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

#include <cmath>

#include "silg/sir_model.hpp"

namespace silg::sir {
namespace {

using nn::Tape;
using nn::Var;

std::vector<double> random_values(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform_real(-1.0, 1.0);
  return v;
}

std::vector<double> probabilities(const std::vector<double>& logits) { return nn::softmax(logits); }

TEST(Film2, ZeroModulationIsReluOfVisualConv) {
  Rng rng(1);
  const int h = 3, w = 4, cin = 3, ch = 5, r3 = 6;
  for (int trial = 0; trial < 50; ++trial) {
    Tape t;
    Film2Params p;
    p.gamma_w = t.zeros(r3, ch);
    p.gamma_b = t.zeros(1, ch);
    p.beta_w = t.zeros(r3, ch);
    p.beta_b = t.zeros(1, ch);
    p.conv_vis = t.constant(9 * cin, ch, random_values(rng, 9 * cin * ch));
    p.conv_vis_b = t.constant(1, ch, random_values(rng, ch));
    p.conv_gamma = t.constant(9 * cin, ch, random_values(rng, 9 * cin * ch));
    p.conv_gamma_b = t.constant(1, ch, random_values(rng, ch));
    p.conv_beta = t.zeros(9 * cin, ch);
    p.conv_beta_b = t.zeros(1, ch);
    p.text_w = t.zeros(r3, ch);
    p.text_b = t.zeros(1, ch);
    const Var x = t.constant(h * w, cin, random_values(rng, h * w * cin));
    const Var text = t.constant(1, r3, random_values(rng, r3));
    const auto out = film2_layer(t, p, x, text, h, w);
    const auto& expected = t.value(nn::relu(t, nn::conv3x3(t, x, h, w, p.conv_vis, p.conv_vis_b)));
    ASSERT_EQ(t.value(out.v), expected) << "trial " << trial;
  }
}

TEST(Film2, ZeroInputZeroOutputAndSummaryIsMax) {
  Rng rng(2);
  const int h = 2, w = 3, cin = 2, ch = 4, r3 = 3;
  Tape t;
  auto rand = [&](int rows, int cols) { return t.constant(rows, cols, random_values(rng, rows * cols)); };
  Film2Params p{rand(r3, ch), t.zeros(1, ch), rand(r3, ch), t.zeros(1, ch), rand(9 * cin, ch), t.zeros(1, ch),
                rand(9 * cin, ch), t.zeros(1, ch), rand(9 * cin, ch), t.zeros(1, ch), rand(r3, ch), t.zeros(1, ch)};
  const auto zero = film2_layer(t, p, t.zeros(h * w, cin), t.zeros(1, r3), h, w);
  for (double v : t.value(zero.v)) EXPECT_EQ(v, 0.0);
  for (double v : t.value(zero.s)) EXPECT_EQ(v, 0.0);

  p.conv_vis_b = rand(1, ch);
  p.text_b = rand(1, ch);
  const auto out = film2_layer(t, p, rand(h * w, cin), rand(1, r3), h, w);
  const auto& v = t.value(out.v);
  const auto& s = t.value(out.s);
  for (int c = 0; c < ch; ++c) {
    double best = -1e300;
    for (int cell = 0; cell < h * w; ++cell) best = std::max(best, v[cell * ch + c]);
    EXPECT_EQ(s[c], best);
  }
}

class EveryHead : public ::testing::TestWithParam<HeadKind> {};

TEST_P(EveryHead, SoftmaxSumsToOneAndForwardIsPure) {
  for (const Variants variants :
       {Variants{}, Variants{true, false, false, false}, Variants{false, true, false, false},
        Variants{false, false, true, false}, Variants{false, false, false, true}}) {
    SirModel model(tiny_config(GetParam(), variants), 3);
    Rng rng(4);
    for (int i = 0; i < 5; ++i) {
      const auto obs = random_observation(model.config(), rng);
      const auto a = model.evaluate(obs);
      const auto b = model.evaluate(obs);
      EXPECT_EQ(a.logits, b.logits);
      EXPECT_EQ(a.value, b.value);
      EXPECT_EQ(static_cast<int>(a.logits.size()), obs.actions.arity());
      double total = 0;
      for (double q : probabilities(a.logits)) total += q;
      EXPECT_NEAR(total, 1.0, 1e-9);
    }
  }
}

TEST_P(EveryHead, FieldOrderDoesNotMatter) {
  SirModel model(tiny_config(GetParam()), 5);
  Rng rng(6);
  auto obs = random_observation(model.config(), rng);
  auto swapped = obs;
  std::swap(swapped.text.field_names[0], swapped.text.field_names[2]);
  std::swap(swapped.text.fields[0], swapped.text.fields[2]);
  std::swap(swapped.text.field_text[0], swapped.text.field_text[2]);
  ForwardContext ca, cb;
  const auto a = model.forward(ca, obs);
  const auto b = model.forward(cb, swapped);
  EXPECT_EQ(ca.tape.value(a.text.c), cb.tape.value(b.text.c));
  EXPECT_EQ(ca.tape.value(a.text.a), cb.tape.value(b.text.a));
  EXPECT_EQ(ca.tape.value(a.logits), cb.tape.value(b.logits));
}

TEST_P(EveryHead, TrailingPadsAreMasked) {
  SirModel model(tiny_config(GetParam()), 7);
  Rng rng(8);
  const auto obs = random_observation(model.config(), rng);
  auto padded = obs;
  padded.text.max_len += 3;
  for (auto& f : padded.text.fields) f.resize(padded.text.max_len, kPadId);
  const auto a = model.evaluate(obs);
  const auto b = model.evaluate(padded);
  EXPECT_EQ(a.logits, b.logits);
  EXPECT_EQ(a.value, b.value);
}

TEST_P(EveryHead, CheckpointRoundTripIsBitExact) {
  SirModel model(tiny_config(GetParam(), Variants{true, false, false, false}), 9);
  const std::string bytes = checkpoint_bytes(model);
  SirModel back = checkpoint_from_bytes(bytes);
  EXPECT_EQ(checkpoint_bytes(back), bytes);
  EXPECT_EQ(back.config().to_json(), model.config().to_json());
  Rng rng(10);
  const auto obs = random_observation(model.config(), rng);
  RecurrentState sa, sb;
  EXPECT_EQ(model.evaluate(obs, &sa).logits, back.evaluate(obs, &sb).logits);
  EXPECT_EQ(sa.h, sb.h);

  EXPECT_THROW(checkpoint_from_bytes(bytes.substr(0, bytes.size() / 2)), Error);
  std::string bad = bytes;
  bad[0] ^= 0x5a;
  EXPECT_THROW(checkpoint_from_bytes(bad), Error);
}

TEST_P(EveryHead, GradientCheckPassesAndNegativeControlFails) {
  SirModel model(tiny_config(GetParam()), 11);
  Rng rng(12);
  const auto obs = random_observation(model.config(), rng);
  const auto report = gradient_check(model, obs, obs.actions.arity() - 1);
  EXPECT_TRUE(report.passed()) << report.max_error << " " << (report.failures.empty() ? "" : report.failures[0]);
  GradientCheckOptions zero;
  zero.zero_analytic = true;
  EXPECT_FALSE(gradient_check(model, obs, 0, nullptr, zero).passed());
}

INSTANTIATE_TEST_SUITE_P(Heads, EveryHead, ::testing::Values(HeadKind::kFixed, HeadKind::kChoices, HeadKind::kNav),
                         [](const auto& info) { return std::string(head_kind_name(info.param)); });

TEST(StateVariant, ZeroLstmWeightsLeaveHUnchanged) {
  SirModel with_state(tiny_config(HeadKind::kFixed, Variants{true, false, false, false}), 13);
  SirModel base(tiny_config(HeadKind::kFixed), 13);
  for (nn::Param* prm : base.params().all()) prm->value = with_state.params().get(prm->name).value;
  for (const char* name : {"state.wx", "state.wh", "state.b"}) {
    auto& prm = with_state.params().get(name);
    std::fill(prm.value.begin(), prm.value.end(), 0.0);
  }
  Rng rng(14);
  const auto obs = random_observation(base.config(), rng);
  RecurrentState prev;
  prev.h.assign(8, 0.3);
  prev.c.assign(8, 0.0);
  ForwardContext ca, cb;
  const auto a = with_state.forward(ca, obs, &prev);
  const auto b = base.forward(cb, obs);
  EXPECT_EQ(ca.tape.value(a.h), cb.tape.value(b.h));
  EXPECT_EQ(ca.tape.value(a.logits), cb.tape.value(b.logits));
}

TEST(StateVariant, StateCarriesAcrossSteps) {
  SirModel model(tiny_config(HeadKind::kFixed, Variants{true, false, false, false}), 15);
  Rng rng(16);
  const auto obs = random_observation(model.config(), rng);
  RecurrentState s;
  const auto first = model.evaluate(obs, &s);
  ASSERT_EQ(s.h.size(), 8u);
  const auto second = model.evaluate(obs, &s);
  EXPECT_NE(first.logits, second.logits);
  RecurrentState bad;
  bad.h.assign(3, 0.0);
  EXPECT_THROW(model.evaluate(obs, &bad), Error);
}

TEST(ChoiceHead, DuplicatesTieAndSingleOptionIsCertain) {
  SirModel model(tiny_config(HeadKind::kChoices), 17);
  Rng rng(18);
  auto obs = random_observation(model.config(), rng);
  obs.actions.choices = {{3, 4}, {5}, {3, 4}};
  obs.actions.choice_text = {"", "", ""};
  const auto logits = model.evaluate(obs).logits;
  EXPECT_EQ(logits[0], logits[2]);

  auto permuted = obs;
  permuted.actions.choices = {{5}, {3, 4}, {3, 4}};
  const auto p = model.evaluate(permuted).logits;
  EXPECT_EQ(p[0], logits[1]);
  EXPECT_EQ(p[1], logits[0]);

  obs.actions.choices = {{6, 7, 8}};
  obs.actions.choice_text = {""};
  EXPECT_EQ(probabilities(model.evaluate(obs).logits)[0], 1.0);
}

TEST(NavHead, ColumnLogitReadsThatColumnOfU) {
  ModelConfig cfg = tiny_config(HeadKind::kNav);
  cfg.height = 2;
  cfg.width = 100;
  SirModel model(cfg, 19);
  Rng rng(20);
  auto obs = random_observation(cfg, rng);
  obs.actions.columns = {8, 54};
  ForwardContext ctx;
  const auto out = model.forward(ctx, obs);
  Tape& t = ctx.tape;
  const auto& u = t.value(out.u);
  const int ch = t.cols(out.u);
  // Column 8 flattened row by row, then the column projection dotted with H.
  std::vector<double> column;
  for (int r = 0; r < cfg.height; ++r) {
    for (int c = 0; c < ch; ++c) column.push_back(u[(r * cfg.width + 8) * ch + c]);
  }
  const auto& wcol = model.params().get("policy.column_w");
  const auto& bcol = model.params().get("policy.column_b");
  const auto& hv = t.value(out.h);
  double expected = 0;
  for (int j = 0; j < cfg.final_dim; ++j) {
    double proj = bcol.value[j];
    for (std::size_t i = 0; i < column.size(); ++i) proj += column[i] * wcol.value[i * cfg.final_dim + j];
    expected += proj * hv[j];
  }
  const auto& logits = t.value(out.logits);
  ASSERT_EQ(logits.size(), 3u);  // two columns and stop
  EXPECT_NEAR(logits[0], expected, 1e-12);

  obs.actions.columns = {8, 8};
  const auto tie = model.evaluate(obs).logits;
  EXPECT_EQ(tie[0], tie[1]);
}

TEST(NavHead, SingleOptionIsCertain) {
  ModelConfig cfg = tiny_config(HeadKind::kNav);
  cfg.nav_stop = false;
  SirModel model(cfg, 21);
  Rng rng(22);
  auto obs = random_observation(cfg, rng);
  obs.actions.columns = {1};
  EXPECT_EQ(probabilities(model.evaluate(obs).logits)[0], 1.0);
}

TEST(EntityAttention, CellsAreConvexCombinationsOfFieldTokens) {
  SirModel model(tiny_config(HeadKind::kFixed, Variants{false, false, true, false}), 23);
  Rng rng(24);
  const auto obs = random_observation(model.config(), rng);
  ForwardContext ctx;
  const auto out = model.forward(ctx, obs);
  const auto& u = ctx.tape.value(out.u);
  const auto& tokens = ctx.tape.value(out.text.tokens);
  const int r = ctx.tape.cols(out.text.tokens), n = ctx.tape.rows(out.text.tokens);
  ASSERT_EQ(ctx.tape.cols(out.u), r);
  for (int cell = 0; cell < obs.grid.height * obs.grid.width; ++cell) {
    const auto sym = obs.grid.cell(cell / obs.grid.width, cell % obs.grid.width);
    const bool empty = std::all_of(sym.begin(), sym.end(), [](TokenId id) { return id == kPadId; });
    for (int c = 0; c < r; ++c) {
      const double v = u[cell * r + c];
      if (empty) {
        EXPECT_EQ(v, 0.0);
        continue;
      }
      double lo = 1e300, hi = -1e300;
      for (int i = 0; i < n; ++i) {
        lo = std::min(lo, tokens[i * r + c]);
        hi = std::max(hi, tokens[i * r + c]);
      }
      EXPECT_GE(v, lo - 1e-12);
      EXPECT_LE(v, hi + 1e-12);
    }
  }
}

TEST(Forward, HeadDescriptorMismatchRejected) {
  SirModel model(tiny_config(HeadKind::kFixed), 25);
  Rng rng(26);
  auto obs = random_observation(tiny_config(HeadKind::kChoices), rng);
  try {
    model.evaluate(obs);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kContractViolation);
  }
  auto wrong_count = random_observation(model.config(), rng);
  wrong_count.actions = ActionSpaceDescriptor::fixed(4);
  EXPECT_THROW(model.evaluate(wrong_count), Error);
  auto wrong_field = random_observation(model.config(), rng);
  wrong_field.text.field_names[0] = "other";
  EXPECT_THROW(model.evaluate(wrong_field), Error);
}

TEST(ModelConfigJson, RoundTripAndValidation) {
  const ModelConfig cfg = tiny_config(HeadKind::kNav, Variants{true, true, false, true});
  EXPECT_EQ(ModelConfig::from_json(cfg.to_json()).to_json(), cfg.to_json());
  ModelConfig odd = cfg;
  odd.rnn_dim = 7;
  EXPECT_THROW(odd.validate(), Error);
  EXPECT_THROW(ModelConfig::from_json("{}"), Error);
}

}  // namespace
}  // namespace silg::sir
