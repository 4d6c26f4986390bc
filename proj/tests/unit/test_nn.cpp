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

#include "silg/nn.hpp"

namespace silg::nn {
namespace {

std::vector<double> random_values(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform_real(-1.0, 1.0);
  return v;
}

// Central-difference check of d(sum(w * f(x)))/dx for a unary op on a random
// input, with w a fixed random weighting.
template <typename F>
double max_op_error(F&& op, int rows, int cols, std::uint64_t seed) {
  Rng rng(seed);
  Param x{"x", rows, cols, random_values(rng, static_cast<std::size_t>(rows) * cols), {}};
  x.grad.assign(x.value.size(), 0.0);
  auto loss_at = [&](std::vector<double>* weights) {
    Tape t;
    const Var y = op(t, t.param(x));
    if (weights->empty()) {
      Rng wr(seed + 1);
      *weights = random_values(wr, t.value(y).size());
    }
    const Var w = t.constant(t.rows(y), t.cols(y), *weights);
    // sum(w * y) through row_dot on flattened rows.
    const Var l = row_dot(t, flatten(t, y), flatten(t, w));
    return std::make_pair(std::move(t), l);
  };
  std::vector<double> weights;
  {
    auto [t, l] = loss_at(&weights);
    t.backward(l);
  }
  double worst = 0;
  const double eps = 1e-6;
  for (std::size_t i = 0; i < x.value.size(); ++i) {
    const double keep = x.value[i];
    x.value[i] = keep + eps;
    auto [tp, lp] = loss_at(&weights);
    const double up = tp.scalar(lp);
    x.value[i] = keep - eps;
    auto [tm, lm] = loss_at(&weights);
    const double down = tm.scalar(lm);
    x.value[i] = keep;
    const double numeric = (up - down) / (2 * eps);
    worst = std::max(worst, std::abs(numeric - x.grad[i]) / std::max(1.0, std::abs(numeric)));
  }
  return worst;
}

TEST(NnEmbed, PadContributesZeroAndCellsAdd) {
  Rng rng(1);
  Param table{"e", 5, 3, random_values(rng, 15), {}};
  std::fill(table.value.begin() + 3, table.value.begin() + 6, 0.0);  // pad row
  Tape t;
  SymbolGrid pad(2, 2, 2);
  const Var u = embed_grid(t, t.param(table), pad);
  for (double v : t.value(u)) EXPECT_EQ(v, 0.0);

  SymbolGrid two(1, 1, 2);
  two.at(0, 0, 0) = 2;
  two.at(0, 0, 1) = 4;
  const auto& sum = t.value(embed_grid(t, t.param(table), two));
  for (int c = 0; c < 3; ++c) EXPECT_DOUBLE_EQ(sum[c], table.value[2 * 3 + c] + table.value[4 * 3 + c]);

  SymbolGrid one(1, 2, 1);
  one.at(0, 0) = 3;
  one.at(0, 1) = 0;
  const auto& look = t.value(embed_grid(t, t.param(table), one));
  for (int c = 0; c < 3; ++c) {
    EXPECT_EQ(look[c], table.value[9 + c]);
    EXPECT_EQ(look[3 + c], table.value[c]);
  }
}

TEST(NnPooling, WeightaveSingleRowAndZeroScorer) {
  Tape t;
  const Var row = t.constant(1, 3, {1, -2, 3});
  const Var w = t.constant(3, 1, {0.3, 0.1, -0.7});
  const Var b = t.constant(1, 1, {0.2});
  EXPECT_EQ(t.value(weightave(t, row, w, b)), (std::vector<double>{1, -2, 3}));
  const Var rows = t.constant(2, 2, {1, 2, 3, 6});
  const auto& mean = t.value(weightave(t, rows, t.zeros(2, 1), t.zeros(1, 1)));
  EXPECT_DOUBLE_EQ(mean[0], 2.0);
  EXPECT_DOUBLE_EQ(mean[1], 4.0);
}

TEST(NnPooling, WeightaveStaysInConvexHull) {
  Rng rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    Tape t;
    const int m = 1 + rng.uniform(6), r = 4;
    const auto data = random_values(rng, static_cast<std::size_t>(m) * r);
    const Var rows = t.constant(m, r, data);
    const auto& out = t.value(weightave(t, rows, t.constant(r, 1, random_values(rng, r)), t.constant(1, 1, {0.1})));
    for (int c = 0; c < r; ++c) {
      double lo = 1e9, hi = -1e9;
      for (int j = 0; j < m; ++j) {
        lo = std::min(lo, data[j * r + c]);
        hi = std::max(hi, data[j * r + c]);
      }
      EXPECT_GE(out[c], lo - 1e-12);
      EXPECT_LE(out[c], hi + 1e-12);
    }
  }
}

TEST(NnPooling, AttendZeroQueryDominantRowAndPermutation) {
  Tape t;
  const Var d = t.constant(3, 2, {1, 0, 0, 1, 2, 2});
  const auto& mean = t.value(attend(t, d, t.zeros(1, 2)));
  EXPECT_DOUBLE_EQ(mean[0], 1.0);
  EXPECT_DOUBLE_EQ(mean[1], 1.0);

  // Row 0 gets logit 20 above the others.
  const Var dom = t.constant(3, 2, {20, 0, 0, 0, 0, 0});
  const auto& pick = t.value(attend(t, dom, t.constant(1, 2, {1, 0})));
  EXPECT_NEAR(pick[0], 20.0, 20 * 2 * std::exp(-20.0) + 1e-6);

  const Var perm = t.constant(3, 2, {2, 2, 1, 0, 0, 1});
  const Var q = t.constant(1, 2, {0.3, -0.4});
  const auto a = t.value(attend(t, d, q));
  const auto b = t.value(attend(t, perm, q));
  EXPECT_NEAR(a[0], b[0], 1e-15);
  EXPECT_NEAR(a[1], b[1], 1e-15);
}

TEST(NnPooling, MaxRows) {
  Tape t;
  const auto& m = t.value(max_rows(t, t.constant(3, 2, {1, -5, 4, 2, -1, 3})));
  EXPECT_EQ(m, (std::vector<double>{4, 3}));
}

TEST(NnSoftmax, SumsToOne) {
  Rng rng(3);
  for (int i = 0; i < 20; ++i) {
    const auto logits = random_values(rng, 1 + rng.uniform(9));
    double s = 0;
    for (double p : softmax(logits)) {
      EXPECT_GE(p, 0.0);
      s += p;
    }
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
  const auto big = softmax(std::vector<double>{1000.0, 0.0});
  EXPECT_DOUBLE_EQ(big[0], 1.0);
}

TEST(NnLoss, UniformEntropyAndZeroAdvantage) {
  Tape t;
  const Var logits = t.zeros(1, 5);
  const Var l = policy_loss(t, logits, 2, 0.0, 1.0);
  EXPECT_NEAR(t.scalar(l), -std::log(5.0), 1e-12);

  Param p{"p", 1, 4, {0.3, -0.2, 0.5, 0.1}, {0, 0, 0, 0}};
  Tape t2;
  t2.backward(policy_loss(t2, t2.param(p), 1, 0.0, 0.0));
  for (double g : p.grad) EXPECT_EQ(g, 0.0);

  Tape t3;
  const Var v = t3.constant(1, 1, {0.25});
  EXPECT_DOUBLE_EQ(t3.scalar(value_loss(t3, v, 1.25, 0.5)), 0.5);
}

TEST(NnConv, MatchesDirectConvolution) {
  Rng rng(5);
  const int h = 3, w = 4, cin = 2, cout = 3;
  const auto x = random_values(rng, h * w * cin);
  const auto k = random_values(rng, 9 * cin * cout);
  const auto b = random_values(rng, cout);
  Tape t;
  const auto& y = t.value(conv3x3(t, t.constant(h * w, cin, x), h, w, t.constant(9 * cin, cout, k),
                                  t.constant(1, cout, b)));
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      for (int o = 0; o < cout; ++o) {
        double acc = b[o];
        for (int dr = -1; dr <= 1; ++dr) {
          for (int dc = -1; dc <= 1; ++dc) {
            const int rr = r + dr, cc = c + dc;
            if (rr < 0 || cc < 0 || rr >= h || cc >= w) continue;
            const int tap = (dr + 1) * 3 + (dc + 1);
            for (int i = 0; i < cin; ++i) acc += x[(rr * w + cc) * cin + i] * k[(tap * cin + i) * cout + o];
          }
        }
        EXPECT_NEAR(y[(r * w + c) * cout + o], acc, 1e-12);
      }
    }
  }
}

TEST(NnGradients, OpsMatchFiniteDifferences) {
  Rng rng(7);
  const auto w = random_values(rng, 12);
  const auto v = random_values(rng, 4);
  EXPECT_LT(max_op_error([](Tape& t, Var x) { return tanh(t, x); }, 3, 4, 1), 1e-7);
  EXPECT_LT(max_op_error([&](Tape& t, Var x) { return linear(t, x, t.constant(4, 3, w), Var{}); }, 2, 4, 2), 1e-7);
  EXPECT_LT(max_op_error([](Tape& t, Var x) { return log_softmax(t, x); }, 1, 6, 3), 1e-7);
  EXPECT_LT(max_op_error([&](Tape& t, Var x) { return attend(t, x, t.constant(1, 4, v)); }, 5, 4, 4), 1e-7);
  EXPECT_LT(max_op_error([&](Tape& t, Var x) { return attend(t, t.constant(3, 4, w), x); }, 1, 4, 5), 1e-7);
  EXPECT_LT(max_op_error([&](Tape& t, Var x) { return weightave(t, x, t.constant(4, 1, v), t.zeros(1, 1)); }, 3, 4, 6),
            1e-7);
  EXPECT_LT(max_op_error([](Tape& t, Var x) { return max_rows(t, x); }, 4, 3, 7), 1e-7);
  EXPECT_LT(max_op_error([&](Tape& t, Var x) { return modulate(t, x, t.constant(1, 4, v), x); }, 3, 4, 8), 1e-7);
  EXPECT_LT(max_op_error([](Tape& t, Var x) { return crop(t, x, 4, 4, 0, 3, 3); }, 16, 2, 9), 1e-7);
  EXPECT_LT(max_op_error([](Tape& t, Var x) { return gather_columns(t, x, 2, 4, {3, 1}); }, 8, 2, 10), 1e-7);
}

TEST(NnGradients, LstmMatchesFiniteDifferences) {
  Rng rng(9);
  const int in = 3, hid = 2;
  const auto wx = random_values(rng, in * 4 * hid);
  const auto wh = random_values(rng, hid * 4 * hid);
  const auto b = random_values(rng, 4 * hid);
  auto op = [&](Tape& t, Var x) {
    LstmParams p{t.constant(in, 4 * hid, wx), t.constant(hid, 4 * hid, wh), t.constant(1, 4 * hid, b)};
    return bilstm(t, x, p, p);
  };
  EXPECT_LT(max_op_error(op, 4, in, 11), 1e-7);
}

TEST(NnParams, StoreAndZeroGrad) {
  ParamStore s;
  auto& a = s.add("a", 2, 3);
  a.grad.assign(6, 1.0);
  s.add("b", 1, 1);
  EXPECT_EQ(s.total_size(), 7u);
  EXPECT_TRUE(s.contains("a"));
  EXPECT_THROW(s.add("a", 1, 1), Error);
  EXPECT_THROW(s.get("zzz"), Error);
  s.zero_grad();
  for (double g : s.get("a").grad) EXPECT_EQ(g, 0.0);
}

}  // namespace
}  // namespace silg::nn
