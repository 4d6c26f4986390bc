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

// Small reverse-mode autodiff over row-major double matrices, with fused
// kernels for the layers the SIR model needs.

#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "silg/core.hpp"

namespace silg::nn {

struct Param {
  std::string name;
  int rows = 0;
  int cols = 0;
  std::vector<double> value;
  std::vector<double> grad;

  std::size_t size() const { return value.size(); }
};

// Named parameters in creation order.
class ParamStore {
 public:
  Param& add(const std::string& name, int rows, int cols);
  Param& get(const std::string& name);
  const Param& get(const std::string& name) const;
  bool contains(const std::string& name) const { return index_.count(name) != 0; }

  std::vector<Param*> all();
  std::vector<const Param*> all() const;
  std::size_t total_size() const;
  void zero_grad();

 private:
  std::vector<std::unique_ptr<Param>> params_;
  std::map<std::string, Param*, std::less<>> index_;
};

struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

class Tape;
using BackwardFn = std::function<void(Tape&, Var self)>;

struct Node {
  int rows = 0;
  int cols = 0;
  std::vector<double> value;
  std::vector<double> grad;  // allocated on first accumulation
  bool needs_grad = false;
  Param* param = nullptr;
  BackwardFn backward;
};

class Tape {
 public:
  Var constant(int rows, int cols, std::vector<double> data);
  Var zeros(int rows, int cols) { return constant(rows, cols, std::vector<double>(static_cast<std::size_t>(rows) * cols)); }
  // Leaf bound to a parameter; repeated calls return the same node.
  Var param(Param& p);

  Var push(int rows, int cols, std::vector<double> value, bool needs_grad, BackwardFn fn);

  const Node& node(Var v) const { return nodes_[v.id]; }
  Node& node(Var v) { return nodes_[v.id]; }
  const std::vector<double>& value(Var v) const { return nodes_[v.id].value; }
  double scalar(Var v) const { return nodes_[v.id].value[0]; }
  int rows(Var v) const { return nodes_[v.id].rows; }
  int cols(Var v) const { return nodes_[v.id].cols; }
  bool needs_grad(Var v) const { return nodes_[v.id].needs_grad; }

  // Gradient buffer of a node, allocated and zeroed on first use.
  std::vector<double>& grad(Var v);
  bool has_grad(Var v) const { return !nodes_[v.id].grad.empty(); }

  // Seeds d(loss)/d(loss) = seed and accumulates parameter gradients.
  void backward(Var loss, double seed = 1.0);

  std::size_t size() const { return nodes_.size(); }
  void clear();

 private:
  std::vector<Node> nodes_;
  std::map<const Param*, Var> param_nodes_;
};

struct LstmParams {
  Var wx;  // in x 4h, gate order i, f, g, o
  Var wh;  // h x 4h
  Var b;   // 1 x 4h
};

// Embedding sum over the k slots of each grid cell: (h*w) x d.
Var embed_grid(Tape& t, Var table, const SymbolGrid& grid);
// Token embeddings: l x d.
Var embed_tokens(Tape& t, Var table, std::span<const TokenId> ids);

Var concat_cols(Tape& t, Var a, Var b);
Var concat_rows(Tape& t, const std::vector<Var>& parts);
// Concatenates row vectors into one row vector.
Var concat_vec(Tape& t, const std::vector<Var>& parts);
Var slice_cols(Tape& t, Var x, int begin, int count);
Var flatten(Tape& t, Var x);

// x (n x in) * W (in x out) + b (1 x out). `b` may be invalid.
Var linear(Tape& t, Var x, Var w, Var b);
// 3x3 same-padding convolution on an h x w map stored as (h*w) x cin.
Var conv3x3(Tape& t, Var x, int h, int w, Var weight, Var bias);

Var relu(Tape& t, Var x);
Var tanh(Tape& t, Var x);
Var add(Tape& t, Var a, Var b);
Var scale(Tape& t, Var x, double s);

// (1 + gamma) * x + beta. Each argument has either n rows or a single row
// that is broadcast.
Var modulate(Tape& t, Var x, Var gamma, Var beta);

// Column-wise maximum over rows: 1 x c. Gradient goes to the first maximum.
Var max_rows(Tape& t, Var x);

// sum_j softmax(rows w + b)_j rows_j. rows m x r, w r x 1, b 1 x 1.
Var weightave(Tape& t, Var rows, Var w, Var b);
// sum_j softmax(D q)_j D_j. D l x r, q 1 x r.
Var attend(Tape& t, Var d, Var q);
// Row-wise attend: output row i = attend(keys, queries_i) where active[i],
// zero otherwise.
Var attend_each(Tape& t, Var keys, Var queries, const std::vector<char>& active);

// Bidirectional LSTM; output l x (hf + hb), forward states then backward.
Var bilstm(Tape& t, Var x, const LstmParams& fwd, const LstmParams& bwd);
// One LSTM step; output 1 x 2h = [h', c'].
Var lstm_cell(Tape& t, Var x, Var h, Var c, const LstmParams& p);

// size x size window of an h x w map centred on (row, col), zero padded.
Var crop(Tape& t, Var x, int h, int w, int row, int col, int size);
// Selected width columns of an h x w map: J x (h * c).
Var gather_columns(Tape& t, Var x, int h, int w, const std::vector<int>& columns);
// M (n x f) times h (1 x f) transposed: 1 x n.
Var row_dot(Tape& t, Var m, Var h);

Var log_softmax(Tape& t, Var logits);
Var pick(Tape& t, Var x, int index);
Var sum(Tape& t, const std::vector<Var>& scalars);

// -advantage * log pi(action) - entropy_cost * H(pi), for a 1 x n logit row.
Var policy_loss(Tape& t, Var logits, int action, double advantage, double entropy_cost);
// coef * (target - v)^2.
Var value_loss(Tape& t, Var v, double target, double coef);

std::vector<double> softmax(std::span<const double> logits);

}  // namespace silg::nn
