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

#include "silg/nn.hpp"

#include <algorithm>
#include <cmath>

namespace silg::nn {

namespace {

std::size_t sz(int r, int c) { return static_cast<std::size_t>(r) * static_cast<std::size_t>(c); }

void add_into(std::vector<double>& dst, const std::vector<double>& src) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Softmax in place, max-subtracted.
void softmax_inplace(std::vector<double>& v) {
  const double m = *std::max_element(v.begin(), v.end());
  double total = 0;
  for (double& x : v) {
    x = std::exp(x - m);
    total += x;
  }
  for (double& x : v) x /= total;
}

}  // namespace

// ---------------------------------------------------------------------------
// ParamStore

Param& ParamStore::add(const std::string& name, int rows, int cols) {
  if (index_.count(name)) fail(ErrorCode::kContractViolation, "duplicate parameter: " + name);
  auto p = std::make_unique<Param>();
  p->name = name;
  p->rows = rows;
  p->cols = cols;
  p->value.assign(sz(rows, cols), 0.0);
  p->grad.assign(sz(rows, cols), 0.0);
  Param& ref = *p;
  index_[name] = p.get();
  params_.push_back(std::move(p));
  return ref;
}

Param& ParamStore::get(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) fail(ErrorCode::kNotFound, "no parameter named " + name);
  return *it->second;
}

const Param& ParamStore::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) fail(ErrorCode::kNotFound, "no parameter named " + name);
  return *it->second;
}

std::vector<Param*> ParamStore::all() {
  std::vector<Param*> out;
  for (auto& p : params_) out.push_back(p.get());
  return out;
}

std::vector<const Param*> ParamStore::all() const {
  std::vector<const Param*> out;
  for (const auto& p : params_) out.push_back(p.get());
  return out;
}

std::size_t ParamStore::total_size() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p->size();
  return n;
}

void ParamStore::zero_grad() {
  for (auto& p : params_) std::fill(p->grad.begin(), p->grad.end(), 0.0);
}

// ---------------------------------------------------------------------------
// Tape

Var Tape::constant(int rows, int cols, std::vector<double> data) {
  require(data.size() == sz(rows, cols), "constant shape mismatch");
  return push(rows, cols, std::move(data), false, nullptr);
}

Var Tape::param(Param& p) {
  auto it = param_nodes_.find(&p);
  if (it != param_nodes_.end()) return it->second;
  Var v = push(p.rows, p.cols, p.value, true, nullptr);
  nodes_[v.id].param = &p;
  param_nodes_[&p] = v;
  return v;
}

Var Tape::push(int rows, int cols, std::vector<double> value, bool needs_grad, BackwardFn fn) {
  Node n;
  n.rows = rows;
  n.cols = cols;
  n.value = std::move(value);
  n.needs_grad = needs_grad;
  if (needs_grad) n.backward = std::move(fn);
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

std::vector<double>& Tape::grad(Var v) {
  Node& n = nodes_[v.id];
  if (n.grad.empty()) n.grad.assign(n.value.size(), 0.0);
  return n.grad;
}

void Tape::backward(Var loss, double seed) {
  require(nodes_[loss.id].value.size() == 1, "backward needs a scalar loss");
  if (!nodes_[loss.id].needs_grad) return;
  grad(loss)[0] += seed;
  for (int i = loss.id; i >= 0; --i) {
    Node& n = nodes_[i];
    if (n.grad.empty() || !n.needs_grad) continue;
    if (n.backward) {
      n.backward(*this, Var{i});
    } else if (n.param) {
      add_into(n.param->grad, n.grad);
    }
  }
}

void Tape::clear() {
  nodes_.clear();
  param_nodes_.clear();
}

namespace {

bool any_grad(const Tape& t, std::initializer_list<Var> vs) {
  for (Var v : vs) {
    if (v.valid() && t.needs_grad(v)) return true;
  }
  return false;
}

bool wants(const Tape& t, Var v) { return v.valid() && t.needs_grad(v); }

}  // namespace

// ---------------------------------------------------------------------------
// Embeddings

Var embed_grid(Tape& t, Var table, const SymbolGrid& grid) {
  const int d = t.cols(table);
  const int vocab = t.rows(table);
  const int cells = grid.height * grid.width;
  const int k = grid.words_per_cell;
  for (TokenId id : grid.cells) {
    if (id < 0 || id >= vocab) fail(ErrorCode::kInvalidArgument, "grid token id out of range");
  }
  std::vector<double> out(sz(cells, d), 0.0);
  const auto& tv = t.value(table);
  for (int p = 0; p < cells; ++p) {
    double* o = out.data() + sz(p, d);
    for (int s = 0; s < k; ++s) {
      const TokenId id = grid.cells[static_cast<std::size_t>(p) * k + s];
      if (id == kPadId) continue;
      const double* row = tv.data() + sz(id, d);
      for (int j = 0; j < d; ++j) o[j] += row[j];
    }
  }
  return t.push(cells, d, std::move(out), t.needs_grad(table),
                [table, ids = grid.cells, cells, k, d](Tape& t, Var self) {
                  const auto& g = t.node(self).grad;
                  auto& gt = t.grad(table);
                  for (int p = 0; p < cells; ++p) {
                    for (int s = 0; s < k; ++s) {
                      const TokenId id = ids[static_cast<std::size_t>(p) * k + s];
                      if (id == kPadId) continue;
                      for (int j = 0; j < d; ++j) gt[sz(id, d) + j] += g[sz(p, d) + j];
                    }
                  }
                });
}

Var embed_tokens(Tape& t, Var table, std::span<const TokenId> ids_in) {
  const int d = t.cols(table);
  const int vocab = t.rows(table);
  const int l = static_cast<int>(ids_in.size());
  std::vector<TokenId> ids(ids_in.begin(), ids_in.end());
  std::vector<double> out(sz(l, d), 0.0);
  const auto& tv = t.value(table);
  for (int i = 0; i < l; ++i) {
    if (ids[i] < 0 || ids[i] >= vocab) fail(ErrorCode::kInvalidArgument, "token id out of range");
    if (ids[i] == kPadId) continue;
    std::copy_n(tv.data() + sz(ids[i], d), d, out.data() + sz(i, d));
  }
  return t.push(l, d, std::move(out), t.needs_grad(table), [table, ids = std::move(ids), l, d](Tape& t, Var self) {
    const auto& g = t.node(self).grad;
    auto& gt = t.grad(table);
    for (int i = 0; i < l; ++i) {
      if (ids[i] == kPadId) continue;
      for (int j = 0; j < d; ++j) gt[sz(ids[i], d) + j] += g[sz(i, d) + j];
    }
  });
}

// ---------------------------------------------------------------------------
// Structural

Var concat_cols(Tape& t, Var a, Var b) {
  const int n = t.rows(a), ca = t.cols(a), cb = t.cols(b);
  if (t.rows(b) != n) fail(ErrorCode::kContractViolation, "concat_cols row mismatch");
  const int c = ca + cb;
  std::vector<double> out(sz(n, c));
  const auto& av = t.value(a);
  const auto& bv = t.value(b);
  for (int i = 0; i < n; ++i) {
    std::copy_n(av.data() + sz(i, ca), ca, out.data() + sz(i, c));
    std::copy_n(bv.data() + sz(i, cb), cb, out.data() + sz(i, c) + ca);
  }
  return t.push(n, c, std::move(out), any_grad(t, {a, b}), [a, b, n, ca, cb, c](Tape& t, Var self) {
    const auto& g = t.node(self).grad;
    if (wants(t, a)) {
      auto& ga = t.grad(a);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < ca; ++j) ga[sz(i, ca) + j] += g[sz(i, c) + j];
    }
    if (wants(t, b)) {
      auto& gb = t.grad(b);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < cb; ++j) gb[sz(i, cb) + j] += g[sz(i, c) + ca + j];
    }
  });
}

Var concat_rows(Tape& t, const std::vector<Var>& parts) {
  require(!parts.empty(), "concat_rows of nothing");
  const int c = t.cols(parts[0]);
  int n = 0;
  bool ng = false;
  for (Var p : parts) {
    if (t.cols(p) != c) fail(ErrorCode::kContractViolation, "concat_rows column mismatch");
    n += t.rows(p);
    ng = ng || t.needs_grad(p);
  }
  std::vector<double> out;
  out.reserve(sz(n, c));
  for (Var p : parts) out.insert(out.end(), t.value(p).begin(), t.value(p).end());
  return t.push(n, c, std::move(out), ng, [parts](Tape& t, Var self) {
    const auto& g = t.node(self).grad;
    std::size_t off = 0;
    for (Var p : parts) {
      const std::size_t len = t.value(p).size();
      if (t.needs_grad(p)) {
        auto& gp = t.grad(p);
        for (std::size_t i = 0; i < len; ++i) gp[i] += g[off + i];
      }
      off += len;
    }
  });
}

Var concat_vec(Tape& t, const std::vector<Var>& parts) {
  require(!parts.empty(), "concat_vec of nothing");
  int total = 0;
  bool ng = false;
  for (Var p : parts) {
    if (t.rows(p) != 1) fail(ErrorCode::kContractViolation, "concat_vec expects row vectors");
    total += t.cols(p);
    ng = ng || t.needs_grad(p);
  }
  std::vector<double> out;
  out.reserve(total);
  for (Var p : parts) out.insert(out.end(), t.value(p).begin(), t.value(p).end());
  return t.push(1, total, std::move(out), ng, [parts](Tape& t, Var self) {
    const auto& g = t.node(self).grad;
    std::size_t off = 0;
    for (Var p : parts) {
      const std::size_t len = t.value(p).size();
      if (t.needs_grad(p)) {
        auto& gp = t.grad(p);
        for (std::size_t i = 0; i < len; ++i) gp[i] += g[off + i];
      }
      off += len;
    }
  });
}

Var slice_cols(Tape& t, Var x, int begin, int count) {
  const int n = t.rows(x), c = t.cols(x);
  require(begin >= 0 && count >= 0 && begin + count <= c, "slice_cols out of range");
  std::vector<double> out(sz(n, count));
  const auto& xv = t.value(x);
  for (int i = 0; i < n; ++i) std::copy_n(xv.data() + sz(i, c) + begin, count, out.data() + sz(i, count));
  return t.push(n, count, std::move(out), t.needs_grad(x), [x, n, c, begin, count](Tape& t, Var self) {
    const auto& g = t.node(self).grad;
    auto& gx = t.grad(x);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < count; ++j) gx[sz(i, c) + begin + j] += g[sz(i, count) + j];
  });
}

Var flatten(Tape& t, Var x) {
  const int n = static_cast<int>(t.value(x).size());
  return t.push(1, n, t.value(x), t.needs_grad(x), [x](Tape& t, Var self) {
    const auto& g = t.node(self).grad;
    add_into(t.grad(x), g);
  });
}

// ---------------------------------------------------------------------------
// Dense layers

Var linear(Tape& t, Var x, Var w, Var b) {
  const int n = t.rows(x), in = t.cols(x), out_dim = t.cols(w);
  if (t.rows(w) != in) {
    fail(ErrorCode::kContractViolation,
         "linear shape mismatch: input " + std::to_string(in) + " vs weight " + std::to_string(t.rows(w)));
  }
  if (b.valid() && (t.rows(b) != 1 || t.cols(b) != out_dim)) fail(ErrorCode::kContractViolation, "linear bias shape");
  std::vector<double> out(sz(n, out_dim), 0.0);
  const auto& xv = t.value(x);
  const auto& wv = t.value(w);
  for (int r = 0; r < n; ++r) {
    double* o = out.data() + sz(r, out_dim);
    if (b.valid()) std::copy_n(t.value(b).data(), out_dim, o);
    for (int i = 0; i < in; ++i) {
      const double xi = xv[sz(r, in) + i];
      if (xi == 0.0) continue;
      const double* wr = wv.data() + sz(i, out_dim);
      for (int j = 0; j < out_dim; ++j) o[j] += xi * wr[j];
    }
  }
  return t.push(n, out_dim, std::move(out), any_grad(t, {x, w, b}), [x, w, b, n, in, out_dim](Tape& t, Var self) {
    const auto& g = t.node(self).grad;
    const auto& xv = t.value(x);
    const auto& wv = t.value(w);
    if (wants(t, x)) {
      auto& gx = t.grad(x);
      for (int r = 0; r < n; ++r) {
        const double* gr = g.data() + sz(r, out_dim);
        for (int i = 0; i < in; ++i) {
          const double* wr = wv.data() + sz(i, out_dim);
          double acc = 0;
          for (int j = 0; j < out_dim; ++j) acc += gr[j] * wr[j];
          gx[sz(r, in) + i] += acc;
        }
      }
    }
    if (wants(t, w)) {
      auto& gw = t.grad(w);
      for (int r = 0; r < n; ++r) {
        const double* gr = g.data() + sz(r, out_dim);
        for (int i = 0; i < in; ++i) {
          const double xi = xv[sz(r, in) + i];
          if (xi == 0.0) continue;
          double* gwr = gw.data() + sz(i, out_dim);
          for (int j = 0; j < out_dim; ++j) gwr[j] += xi * gr[j];
        }
      }
    }
    if (wants(t, b)) {
      auto& gb = t.grad(b);
      for (int r = 0; r < n; ++r)
        for (int j = 0; j < out_dim; ++j) gb[j] += g[sz(r, out_dim) + j];
    }
  });
}

Var conv3x3(Tape& t, Var x, int h, int w, Var weight, Var bias) {
  const int cells = h * w;
  const int cin = t.cols(x);
  const int cout = t.cols(weight);
  if (t.rows(x) != cells) fail(ErrorCode::kContractViolation, "conv3x3 input is not h*w rows");
  if (t.rows(weight) != 9 * cin) fail(ErrorCode::kContractViolation, "conv3x3 weight shape mismatch");
  if (bias.valid() && t.cols(bias) != cout) fail(ErrorCode::kContractViolation, "conv3x3 bias shape mismatch");
  std::vector<double> out(sz(cells, cout), 0.0);
  const auto& xv = t.value(x);
  const auto& wv = t.value(weight);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      double* o = out.data() + sz(r * w + c, cout);
      if (bias.valid()) std::copy_n(t.value(bias).data(), cout, o);
      for (int k = 0; k < 9; ++k) {
        const int rr = r + k / 3 - 1, cc = c + k % 3 - 1;
        if (rr < 0 || rr >= h || cc < 0 || cc >= w) continue;
        const double* xr = xv.data() + sz(rr * w + cc, cin);
        for (int ci = 0; ci < cin; ++ci) {
          const double xi = xr[ci];
          if (xi == 0.0) continue;
          const double* wr = wv.data() + sz(k * cin + ci, cout);
          for (int co = 0; co < cout; ++co) o[co] += xi * wr[co];
        }
      }
    }
  }
  return t.push(cells, cout, std::move(out), any_grad(t, {x, weight, bias}),
                [x, weight, bias, h, w, cin, cout](Tape& t, Var self) {
                  const auto& g = t.node(self).grad;
                  const auto& xv = t.value(x);
                  const auto& wv = t.value(weight);
                  const bool gx_on = wants(t, x), gw_on = wants(t, weight);
                  std::vector<double>* gx = gx_on ? &t.grad(x) : nullptr;
                  std::vector<double>* gw = gw_on ? &t.grad(weight) : nullptr;
                  for (int r = 0; r < h; ++r) {
                    for (int c = 0; c < w; ++c) {
                      const double* gr = g.data() + sz(r * w + c, cout);
                      for (int k = 0; k < 9; ++k) {
                        const int rr = r + k / 3 - 1, cc = c + k % 3 - 1;
                        if (rr < 0 || rr >= h || cc < 0 || cc >= w) continue;
                        const std::size_t xo = sz(rr * w + cc, cin);
                        for (int ci = 0; ci < cin; ++ci) {
                          const std::size_t wo = sz(k * cin + ci, cout);
                          if (gx_on) {
                            double acc = 0;
                            for (int co = 0; co < cout; ++co) acc += gr[co] * wv[wo + co];
                            (*gx)[xo + ci] += acc;
                          }
                          if (gw_on) {
                            const double xi = xv[xo + ci];
                            if (xi == 0.0) continue;
                            double* gwr = gw->data() + wo;
                            for (int co = 0; co < cout; ++co) gwr[co] += xi * gr[co];
                          }
                        }
                      }
                    }
                  }
                  if (wants(t, bias)) {
                    auto& gb = t.grad(bias);
                    for (int p = 0; p < h * w; ++p)
                      for (int co = 0; co < cout; ++co) gb[co] += g[sz(p, cout) + co];
                  }
                });
}

// ---------------------------------------------------------------------------
// Elementwise

Var relu(Tape& t, Var x) {
  std::vector<double> out = t.value(x);
  for (double& v : out) v = v > 0 ? v : 0.0;
  return t.push(t.rows(x), t.cols(x), std::move(out), t.needs_grad(x), [x](Tape& t, Var self) {
    const auto& g = t.node(self).grad;
    const auto& y = t.node(self).value;
    auto& gx = t.grad(x);
    for (std::size_t i = 0; i < g.size(); ++i)
      if (y[i] > 0) gx[i] += g[i];
  });
}

Var tanh(Tape& t, Var x) {
  std::vector<double> out = t.value(x);
  for (double& v : out) v = std::tanh(v);
  return t.push(t.rows(x), t.cols(x), std::move(out), t.needs_grad(x), [x](Tape& t, Var self) {
    const auto& g = t.node(self).grad;
    const auto& y = t.node(self).value;
    auto& gx = t.grad(x);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * (1.0 - y[i] * y[i]);
  });
}

Var add(Tape& t, Var a, Var b) {
  if (t.rows(a) != t.rows(b) || t.cols(a) != t.cols(b)) fail(ErrorCode::kContractViolation, "add shape mismatch");
  std::vector<double> out = t.value(a);
  add_into(out, t.value(b));
  return t.push(t.rows(a), t.cols(a), std::move(out), any_grad(t, {a, b}), [a, b](Tape& t, Var self) {
    const auto& g = t.node(self).grad;
    if (wants(t, a)) add_into(t.grad(a), g);
    if (wants(t, b)) add_into(t.grad(b), g);
  });
}

Var scale(Tape& t, Var x, double s) {
  std::vector<double> out = t.value(x);
  for (double& v : out) v *= s;
  return t.push(t.rows(x), t.cols(x), std::move(out), t.needs_grad(x), [x, s](Tape& t, Var self) {
    const auto& g = t.node(self).grad;
    auto& gx = t.grad(x);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * s;
  });
}

Var modulate(Tape& t, Var x, Var gamma, Var beta) {
  const int nx = t.rows(x), ng = t.rows(gamma), nb = t.rows(beta), c = t.cols(x);
  const int n = std::max({nx, ng, nb});
  if (t.cols(gamma) != c || t.cols(beta) != c || (nx != n && nx != 1) || (ng != n && ng != 1) ||
      (nb != n && nb != 1)) {
    fail(ErrorCode::kContractViolation, "modulate shape mismatch");
  }
  // Offset of row i in an argument with `rows` rows (1 = broadcast).
  auto at = [c](int rows, int i) { return rows == 1 ? std::size_t{0} : sz(i, c); };
  const auto& xv = t.value(x);
  const auto& gv = t.value(gamma);
  const auto& bv = t.value(beta);
  std::vector<double> out(sz(n, c));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < c; ++j) {
      out[sz(i, c) + j] = (1.0 + gv[at(ng, i) + j]) * xv[at(nx, i) + j] + bv[at(nb, i) + j];
    }
  }
  return t.push(n, c, std::move(out), any_grad(t, {x, gamma, beta}), [x, gamma, beta, n, c, nx, ng, nb, at](Tape& t, Var self) {
    const auto& g = t.node(self).grad;
    const auto& xv = t.value(x);
    const auto& gv = t.value(gamma);
    std::vector<double>* gx = wants(t, x) ? &t.grad(x) : nullptr;
    std::vector<double>* gg = wants(t, gamma) ? &t.grad(gamma) : nullptr;
    std::vector<double>* gb = wants(t, beta) ? &t.grad(beta) : nullptr;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < c; ++j) {
        const double go = g[sz(i, c) + j];
        if (gx) (*gx)[at(nx, i) + j] += go * (1.0 + gv[at(ng, i) + j]);
        if (gg) (*gg)[at(ng, i) + j] += go * xv[at(nx, i) + j];
        if (gb) (*gb)[at(nb, i) + j] += go;
      }
    }
  });
}

Var max_rows(Tape& t, Var x) {
  const int n = t.rows(x), c = t.cols(x);
  require(n >= 1, "max_rows of an empty matrix");
  const auto& xv = t.value(x);
  std::vector<double> out(xv.begin(), xv.begin() + c);
  std::vector<int> arg(c, 0);
  for (int i = 1; i < n; ++i) {
    for (int j = 0; j < c; ++j) {
      if (xv[sz(i, c) + j] > out[j]) {
        out[j] = xv[sz(i, c) + j];
        arg[j] = i;
      }
    }
  }
  return t.push(1, c, std::move(out), t.needs_grad(x), [x, c, arg = std::move(arg)](Tape& t, Var self) {
    const auto& g = t.node(self).grad;
    auto& gx = t.grad(x);
    for (int j = 0; j < c; ++j) gx[sz(arg[j], c) + j] += g[j];
  });
}

// ---------------------------------------------------------------------------
// Pooling

namespace {

// out = sum_j p_j rows_j; given dout, accumulates d rows (the p_j dout part)
// and returns da_j = p_j (dp_j - sum_k p_k dp_k).
std::vector<double> softmax_pool_backward(const std::vector<double>& rows, const std::vector<double>& p,
                                          const double* dout, int m, int r, std::vector<double>* grows) {
  std::vector<double> dp(m, 0.0);
  double mean = 0;
  for (int j = 0; j < m; ++j) {
    double acc = 0;
    for (int k = 0; k < r; ++k) acc += rows[sz(j, r) + k] * dout[k];
    dp[j] = acc;
    mean += p[j] * acc;
    if (grows) {
      for (int k = 0; k < r; ++k) (*grows)[sz(j, r) + k] += p[j] * dout[k];
    }
  }
  for (int j = 0; j < m; ++j) dp[j] = p[j] * (dp[j] - mean);
  return dp;
}

}  // namespace

Var weightave(Tape& t, Var rows, Var w, Var b) {
  const int m = t.rows(rows), r = t.cols(rows);
  if (m < 1) fail(ErrorCode::kInvalidArgument, "weightave over no rows");
  if (t.rows(w) != r || t.cols(w) != 1) fail(ErrorCode::kContractViolation, "weightave scorer shape");
  const auto& rv = t.value(rows);
  const auto& wv = t.value(w);
  const double bias = b.valid() ? t.value(b)[0] : 0.0;
  std::vector<double> p(m);
  for (int j = 0; j < m; ++j) {
    double acc = bias;
    for (int k = 0; k < r; ++k) acc += rv[sz(j, r) + k] * wv[k];
    p[j] = acc;
  }
  softmax_inplace(p);
  std::vector<double> out(r, 0.0);
  for (int j = 0; j < m; ++j)
    for (int k = 0; k < r; ++k) out[k] += p[j] * rv[sz(j, r) + k];
  return t.push(1, r, std::move(out), any_grad(t, {rows, w, b}), [rows, w, b, m, r, p = std::move(p)](Tape& t, Var self) {
    const auto& g = t.node(self).grad;
    const auto& rv = t.value(rows);
    const auto& wv = t.value(w);
    std::vector<double>* grows = wants(t, rows) ? &t.grad(rows) : nullptr;
    const std::vector<double> da = softmax_pool_backward(rv, p, g.data(), m, r, grows);
    if (grows) {
      for (int j = 0; j < m; ++j)
        for (int k = 0; k < r; ++k) (*grows)[sz(j, r) + k] += da[j] * wv[k];
    }
    if (wants(t, w)) {
      auto& gw = t.grad(w);
      for (int j = 0; j < m; ++j)
        for (int k = 0; k < r; ++k) gw[k] += da[j] * rv[sz(j, r) + k];
    }
    if (wants(t, b)) {
      double s = 0;
      for (double v : da) s += v;
      t.grad(b)[0] += s;
    }
  });
}

Var attend(Tape& t, Var d, Var q) {
  const int l = t.rows(d), r = t.cols(d);
  if (l < 1) fail(ErrorCode::kInvalidArgument, "attend over no rows");
  if (t.rows(q) != 1 || t.cols(q) != r) fail(ErrorCode::kContractViolation, "attend query shape");
  const auto& dv = t.value(d);
  const auto& qv = t.value(q);
  std::vector<double> p(l);
  for (int j = 0; j < l; ++j) {
    double acc = 0;
    for (int k = 0; k < r; ++k) acc += dv[sz(j, r) + k] * qv[k];
    p[j] = acc;
  }
  softmax_inplace(p);
  std::vector<double> out(r, 0.0);
  for (int j = 0; j < l; ++j)
    for (int k = 0; k < r; ++k) out[k] += p[j] * dv[sz(j, r) + k];
  return t.push(1, r, std::move(out), any_grad(t, {d, q}), [d, q, l, r, p = std::move(p)](Tape& t, Var self) {
    const auto& g = t.node(self).grad;
    const auto& dv = t.value(d);
    const auto& qv = t.value(q);
    std::vector<double>* gd = wants(t, d) ? &t.grad(d) : nullptr;
    const std::vector<double> da = softmax_pool_backward(dv, p, g.data(), l, r, gd);
    if (gd) {
      for (int j = 0; j < l; ++j)
        for (int k = 0; k < r; ++k) (*gd)[sz(j, r) + k] += da[j] * qv[k];
    }
    if (wants(t, q)) {
      auto& gq = t.grad(q);
      for (int j = 0; j < l; ++j)
        for (int k = 0; k < r; ++k) gq[k] += da[j] * dv[sz(j, r) + k];
    }
  });
}

Var attend_each(Tape& t, Var keys, Var queries, const std::vector<char>& active) {
  const int l = t.rows(keys), r = t.cols(keys), n = t.rows(queries);
  if (l < 1) fail(ErrorCode::kInvalidArgument, "attend over no rows");
  if (t.cols(queries) != r || static_cast<int>(active.size()) != n) {
    fail(ErrorCode::kContractViolation, "attend_each shape mismatch");
  }
  const auto& kv = t.value(keys);
  const auto& qv = t.value(queries);
  std::vector<double> probs(sz(n, l), 0.0);
  std::vector<double> out(sz(n, r), 0.0);
  std::vector<double> p(l);
  for (int i = 0; i < n; ++i) {
    if (!active[i]) continue;
    for (int j = 0; j < l; ++j) {
      double acc = 0;
      for (int k = 0; k < r; ++k) acc += kv[sz(j, r) + k] * qv[sz(i, r) + k];
      p[j] = acc;
    }
    softmax_inplace(p);
    std::copy(p.begin(), p.end(), probs.begin() + sz(i, l));
    for (int j = 0; j < l; ++j)
      for (int k = 0; k < r; ++k) out[sz(i, r) + k] += p[j] * kv[sz(j, r) + k];
  }
  return t.push(n, r, std::move(out), any_grad(t, {keys, queries}),
                [keys, queries, active, l, r, n, probs = std::move(probs)](Tape& t, Var self) {
                  const auto& g = t.node(self).grad;
                  const auto& kv = t.value(keys);
                  const auto& qv = t.value(queries);
                  std::vector<double>* gk = wants(t, keys) ? &t.grad(keys) : nullptr;
                  std::vector<double>* gq = wants(t, queries) ? &t.grad(queries) : nullptr;
                  std::vector<double> p(l);
                  for (int i = 0; i < n; ++i) {
                    if (!active[i]) continue;
                    std::copy_n(probs.begin() + sz(i, l), l, p.begin());
                    const std::vector<double> da = softmax_pool_backward(kv, p, g.data() + sz(i, r), l, r, gk);
                    for (int j = 0; j < l; ++j) {
                      for (int k = 0; k < r; ++k) {
                        if (gk) (*gk)[sz(j, r) + k] += da[j] * qv[sz(i, r) + k];
                        if (gq) (*gq)[sz(i, r) + k] += da[j] * kv[sz(j, r) + k];
                      }
                    }
                  }
                });
}

// ---------------------------------------------------------------------------
// Recurrent

namespace {

struct LstmTrace {
  int steps = 0;
  int hidden = 0;
  std::vector<int> order;        // input row processed at each step
  std::vector<double> gates;     // steps x 4h, post-activation
  std::vector<double> cells;     // steps x h
  std::vector<double> tanh_c;    // steps x h
  std::vector<double> hiddens;   // steps x h
};

LstmTrace run_lstm(const Tape& t, Var x, const LstmParams& p, bool reverse) {
  const int l = t.rows(x), in = t.cols(x);
  const int h4 = t.cols(p.wx), h = h4 / 4;
  if (t.rows(p.wx) != in || t.rows(p.wh) != h || t.cols(p.wh) != h4 || t.cols(p.b) != h4) {
    fail(ErrorCode::kContractViolation, "lstm parameter shape mismatch");
  }
  LstmTrace tr;
  tr.steps = l;
  tr.hidden = h;
  tr.gates.assign(sz(l, h4), 0.0);
  tr.cells.assign(sz(l, h), 0.0);
  tr.tanh_c.assign(sz(l, h), 0.0);
  tr.hiddens.assign(sz(l, h), 0.0);
  const auto& xv = t.value(x);
  const auto& wx = t.value(p.wx);
  const auto& wh = t.value(p.wh);
  const auto& bv = t.value(p.b);
  std::vector<double> z(h4);
  for (int s = 0; s < l; ++s) {
    const int row = reverse ? l - 1 - s : s;
    tr.order.push_back(row);
    std::copy(bv.begin(), bv.end(), z.begin());
    for (int i = 0; i < in; ++i) {
      const double xi = xv[sz(row, in) + i];
      if (xi == 0.0) continue;
      const double* wr = wx.data() + sz(i, h4);
      for (int j = 0; j < h4; ++j) z[j] += xi * wr[j];
    }
    if (s > 0) {
      const double* hp = tr.hiddens.data() + sz(s - 1, h);
      for (int i = 0; i < h; ++i) {
        const double* wr = wh.data() + sz(i, h4);
        for (int j = 0; j < h4; ++j) z[j] += hp[i] * wr[j];
      }
    }
    double* gt = tr.gates.data() + sz(s, h4);
    for (int j = 0; j < h; ++j) {
      gt[j] = sigmoid(z[j]);
      gt[h + j] = sigmoid(z[h + j]);
      gt[2 * h + j] = std::tanh(z[2 * h + j]);
      gt[3 * h + j] = sigmoid(z[3 * h + j]);
      const double cprev = s > 0 ? tr.cells[sz(s - 1, h) + j] : 0.0;
      const double c = gt[h + j] * cprev + gt[j] * gt[2 * h + j];
      tr.cells[sz(s, h) + j] = c;
      tr.tanh_c[sz(s, h) + j] = std::tanh(c);
      tr.hiddens[sz(s, h) + j] = gt[3 * h + j] * tr.tanh_c[sz(s, h) + j];
    }
  }
  return tr;
}

// dh_out: per input row, gradient w.r.t. that row's hidden output (stride
// `stride`, offset `offset`).
void lstm_backward(Tape& t, Var x, const LstmParams& p, const LstmTrace& tr, const std::vector<double>& g, int stride,
                   int offset) {
  const int l = tr.steps, h = tr.hidden, h4 = 4 * h, in = t.cols(x);
  const auto& xv = t.value(x);
  const auto& wx = t.value(p.wx);
  const auto& wh = t.value(p.wh);
  std::vector<double>* gx = wants(t, x) ? &t.grad(x) : nullptr;
  std::vector<double>* gwx = wants(t, p.wx) ? &t.grad(p.wx) : nullptr;
  std::vector<double>* gwh = wants(t, p.wh) ? &t.grad(p.wh) : nullptr;
  std::vector<double>* gb = wants(t, p.b) ? &t.grad(p.b) : nullptr;
  std::vector<double> dh_next(h, 0.0), dc_next(h, 0.0), dz(h4);
  for (int s = l - 1; s >= 0; --s) {
    const int row = tr.order[s];
    const double* gt = tr.gates.data() + sz(s, h4);
    for (int j = 0; j < h; ++j) {
      const double dh = g[sz(row, stride) + offset + j] + dh_next[j];
      const double tc = tr.tanh_c[sz(s, h) + j];
      const double o = gt[3 * h + j];
      const double dc = dh * o * (1.0 - tc * tc) + dc_next[j];
      const double i = gt[j], f = gt[h + j], gg = gt[2 * h + j];
      const double cprev = s > 0 ? tr.cells[sz(s - 1, h) + j] : 0.0;
      dz[j] = dc * gg * i * (1.0 - i);
      dz[h + j] = dc * cprev * f * (1.0 - f);
      dz[2 * h + j] = dc * i * (1.0 - gg * gg);
      dz[3 * h + j] = dh * tc * o * (1.0 - o);
      dc_next[j] = dc * f;
    }
    if (gb) {
      for (int j = 0; j < h4; ++j) (*gb)[j] += dz[j];
    }
    for (int i = 0; i < in; ++i) {
      const double xi = xv[sz(row, in) + i];
      const double* wr = wx.data() + sz(i, h4);
      if (gx) {
        double acc = 0;
        for (int j = 0; j < h4; ++j) acc += dz[j] * wr[j];
        (*gx)[sz(row, in) + i] += acc;
      }
      if (gwx && xi != 0.0) {
        double* gwr = gwx->data() + sz(i, h4);
        for (int j = 0; j < h4; ++j) gwr[j] += xi * dz[j];
      }
    }
    std::fill(dh_next.begin(), dh_next.end(), 0.0);
    if (s > 0) {
      const double* hp = tr.hiddens.data() + sz(s - 1, h);
      for (int i = 0; i < h; ++i) {
        const double* wr = wh.data() + sz(i, h4);
        double acc = 0;
        for (int j = 0; j < h4; ++j) acc += dz[j] * wr[j];
        dh_next[i] = acc;
        if (gwh) {
          double* gwr = gwh->data() + sz(i, h4);
          for (int j = 0; j < h4; ++j) gwr[j] += hp[i] * dz[j];
        }
      }
    }
  }
}

}  // namespace

Var bilstm(Tape& t, Var x, const LstmParams& fwd, const LstmParams& bwd) {
  const int l = t.rows(x);
  if (l < 1) fail(ErrorCode::kInvalidArgument, "bilstm over an empty sequence");
  LstmTrace tf = run_lstm(t, x, fwd, false);
  LstmTrace tb = run_lstm(t, x, bwd, true);
  const int hf = tf.hidden, hb = tb.hidden, c = hf + hb;
  std::vector<double> out(sz(l, c));
  for (int s = 0; s < l; ++s) {
    std::copy_n(tf.hiddens.data() + sz(s, hf), hf, out.data() + sz(tf.order[s], c));
    std::copy_n(tb.hiddens.data() + sz(s, hb), hb, out.data() + sz(tb.order[s], c) + hf);
  }
  const bool ng = any_grad(t, {x, fwd.wx, fwd.wh, fwd.b, bwd.wx, bwd.wh, bwd.b});
  return t.push(l, c, std::move(out), ng,
                [x, fwd, bwd, tf = std::move(tf), tb = std::move(tb), c, hf](Tape& t, Var self) {
                  const auto& g = t.node(self).grad;
                  lstm_backward(t, x, fwd, tf, g, c, 0);
                  lstm_backward(t, x, bwd, tb, g, c, hf);
                });
}

Var lstm_cell(Tape& t, Var x, Var h, Var c, const LstmParams& p) {
  const int in = t.cols(x), hd = t.cols(h), h4 = 4 * hd;
  if (t.rows(x) != 1 || t.cols(c) != hd || t.rows(p.wx) != in || t.cols(p.wx) != h4 || t.rows(p.wh) != hd) {
    fail(ErrorCode::kContractViolation, "lstm_cell shape mismatch");
  }
  const auto& xv = t.value(x);
  const auto& hv = t.value(h);
  const auto& cv = t.value(c);
  const auto& wx = t.value(p.wx);
  const auto& wh = t.value(p.wh);
  std::vector<double> z = t.value(p.b);
  for (int i = 0; i < in; ++i)
    for (int j = 0; j < h4; ++j) z[j] += xv[i] * wx[sz(i, h4) + j];
  for (int i = 0; i < hd; ++i)
    for (int j = 0; j < h4; ++j) z[j] += hv[i] * wh[sz(i, h4) + j];
  std::vector<double> gates(h4), tanh_c(hd), out(2 * hd);
  for (int j = 0; j < hd; ++j) {
    gates[j] = sigmoid(z[j]);
    gates[hd + j] = sigmoid(z[hd + j]);
    gates[2 * hd + j] = std::tanh(z[2 * hd + j]);
    gates[3 * hd + j] = sigmoid(z[3 * hd + j]);
    const double cn = gates[hd + j] * cv[j] + gates[j] * gates[2 * hd + j];
    tanh_c[j] = std::tanh(cn);
    out[j] = gates[3 * hd + j] * tanh_c[j];
    out[hd + j] = cn;
  }
  const bool ng = any_grad(t, {x, h, c, p.wx, p.wh, p.b});
  return t.push(1, 2 * hd, std::move(out), ng,
                [x, h, c, p, in, hd, h4, gates = std::move(gates), tanh_c = std::move(tanh_c)](Tape& t, Var self) {
                  const auto& g = t.node(self).grad;
                  const auto& xv = t.value(x);
                  const auto& hv = t.value(h);
                  const auto& cv = t.value(c);
                  const auto& wx = t.value(p.wx);
                  const auto& wh = t.value(p.wh);
                  std::vector<double> dz(h4);
                  std::vector<double> dc_prev(hd);
                  for (int j = 0; j < hd; ++j) {
                    const double i = gates[j], f = gates[hd + j], gg = gates[2 * hd + j], o = gates[3 * hd + j];
                    const double tc = tanh_c[j];
                    const double dh = g[j];
                    const double dc = dh * o * (1.0 - tc * tc) + g[hd + j];
                    dz[j] = dc * gg * i * (1.0 - i);
                    dz[hd + j] = dc * cv[j] * f * (1.0 - f);
                    dz[2 * hd + j] = dc * i * (1.0 - gg * gg);
                    dz[3 * hd + j] = dh * tc * o * (1.0 - o);
                    dc_prev[j] = dc * f;
                  }
                  if (wants(t, p.b)) add_into(t.grad(p.b), dz);
                  if (wants(t, c)) add_into(t.grad(c), dc_prev);
                  if (wants(t, p.wx)) {
                    auto& gw = t.grad(p.wx);
                    for (int i = 0; i < in; ++i)
                      for (int j = 0; j < h4; ++j) gw[sz(i, h4) + j] += xv[i] * dz[j];
                  }
                  if (wants(t, p.wh)) {
                    auto& gw = t.grad(p.wh);
                    for (int i = 0; i < hd; ++i)
                      for (int j = 0; j < h4; ++j) gw[sz(i, h4) + j] += hv[i] * dz[j];
                  }
                  if (wants(t, x)) {
                    auto& gx = t.grad(x);
                    for (int i = 0; i < in; ++i) {
                      double acc = 0;
                      for (int j = 0; j < h4; ++j) acc += dz[j] * wx[sz(i, h4) + j];
                      gx[i] += acc;
                    }
                  }
                  if (wants(t, h)) {
                    auto& gh = t.grad(h);
                    for (int i = 0; i < hd; ++i) {
                      double acc = 0;
                      for (int j = 0; j < h4; ++j) acc += dz[j] * wh[sz(i, h4) + j];
                      gh[i] += acc;
                    }
                  }
                });
}

// ---------------------------------------------------------------------------
// Spatial selection

Var crop(Tape& t, Var x, int h, int w, int row, int col, int size) {
  const int c = t.cols(x);
  if (t.rows(x) != h * w) fail(ErrorCode::kContractViolation, "crop input is not h*w rows");
  const int half = size / 2;
  std::vector<int> src(sz(size, size), -1);
  for (int i = 0; i < size; ++i) {
    for (int j = 0; j < size; ++j) {
      const int rr = row - half + i, cc = col - half + j;
      if (rr >= 0 && rr < h && cc >= 0 && cc < w) src[sz(i, size) + j] = rr * w + cc;
    }
  }
  const auto& xv = t.value(x);
  std::vector<double> out(sz(size * size, c), 0.0);
  for (int p = 0; p < size * size; ++p) {
    if (src[p] >= 0) std::copy_n(xv.data() + sz(src[p], c), c, out.data() + sz(p, c));
  }
  return t.push(size * size, c, std::move(out), t.needs_grad(x), [x, c, src = std::move(src)](Tape& t, Var self) {
    const auto& g = t.node(self).grad;
    auto& gx = t.grad(x);
    for (std::size_t p = 0; p < src.size(); ++p) {
      if (src[p] < 0) continue;
      for (int k = 0; k < c; ++k) gx[sz(src[p], c) + k] += g[sz(static_cast<int>(p), c) + k];
    }
  });
}

Var gather_columns(Tape& t, Var x, int h, int w, const std::vector<int>& columns) {
  const int c = t.cols(x);
  if (t.rows(x) != h * w) fail(ErrorCode::kContractViolation, "gather_columns input is not h*w rows");
  for (int col : columns) {
    if (col < 0 || col >= w) fail(ErrorCode::kInvalidArgument, "column out of range: " + std::to_string(col));
  }
  const int n = static_cast<int>(columns.size());
  const int f = h * c;
  const auto& xv = t.value(x);
  std::vector<double> out(sz(n, f));
  for (int j = 0; j < n; ++j)
    for (int r = 0; r < h; ++r) std::copy_n(xv.data() + sz(r * w + columns[j], c), c, out.data() + sz(j, f) + sz(r, c));
  return t.push(n, f, std::move(out), t.needs_grad(x), [x, h, w, c, f, columns](Tape& t, Var self) {
    const auto& g = t.node(self).grad;
    auto& gx = t.grad(x);
    for (std::size_t j = 0; j < columns.size(); ++j)
      for (int r = 0; r < h; ++r)
        for (int k = 0; k < c; ++k) gx[sz(r * w + columns[j], c) + k] += g[sz(static_cast<int>(j), f) + sz(r, c) + k];
  });
}

Var row_dot(Tape& t, Var m, Var h) {
  const int n = t.rows(m), f = t.cols(m);
  if (t.rows(h) != 1 || t.cols(h) != f) fail(ErrorCode::kContractViolation, "row_dot shape mismatch");
  const auto& mv = t.value(m);
  const auto& hv = t.value(h);
  std::vector<double> out(n, 0.0);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < f; ++k) out[i] += mv[sz(i, f) + k] * hv[k];
  return t.push(1, n, std::move(out), any_grad(t, {m, h}), [m, h, n, f](Tape& t, Var self) {
    const auto& g = t.node(self).grad;
    const auto& mv = t.value(m);
    const auto& hv = t.value(h);
    if (wants(t, m)) {
      auto& gm = t.grad(m);
      for (int i = 0; i < n; ++i)
        for (int k = 0; k < f; ++k) gm[sz(i, f) + k] += g[i] * hv[k];
    }
    if (wants(t, h)) {
      auto& gh = t.grad(h);
      for (int i = 0; i < n; ++i)
        for (int k = 0; k < f; ++k) gh[k] += g[i] * mv[sz(i, f) + k];
    }
  });
}

// ---------------------------------------------------------------------------
// Losses

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> p(logits.begin(), logits.end());
  if (!p.empty()) softmax_inplace(p);
  return p;
}

Var log_softmax(Tape& t, Var logits) {
  const auto& z = t.value(logits);
  require(!z.empty(), "log_softmax of nothing");
  const double m = *std::max_element(z.begin(), z.end());
  double total = 0;
  for (double v : z) total += std::exp(v - m);
  const double lse = m + std::log(total);
  std::vector<double> out(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) out[i] = z[i] - lse;
  return t.push(t.rows(logits), t.cols(logits), std::move(out), t.needs_grad(logits), [logits](Tape& t, Var self) {
    const auto& g = t.node(self).grad;
    const auto& y = t.node(self).value;
    double gs = 0;
    for (double v : g) gs += v;
    auto& gx = t.grad(logits);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] - std::exp(y[i]) * gs;
  });
}

Var pick(Tape& t, Var x, int index) {
  const auto& xv = t.value(x);
  if (index < 0 || index >= static_cast<int>(xv.size())) fail(ErrorCode::kInvalidArgument, "pick index out of range");
  return t.push(1, 1, {xv[index]}, t.needs_grad(x), [x, index](Tape& t, Var self) {
    t.grad(x)[index] += t.node(self).grad[0];
  });
}

Var sum(Tape& t, const std::vector<Var>& scalars) {
  double total = 0;
  bool ng = false;
  for (Var v : scalars) {
    require(t.value(v).size() == 1, "sum expects scalars");
    total += t.scalar(v);
    ng = ng || t.needs_grad(v);
  }
  return t.push(1, 1, {total}, ng, [scalars](Tape& t, Var self) {
    const double g = t.node(self).grad[0];
    for (Var v : scalars) {
      if (t.needs_grad(v)) t.grad(v)[0] += g;
    }
  });
}

Var policy_loss(Tape& t, Var logits, int action, double advantage, double entropy_cost) {
  const auto& z = t.value(logits);
  const int n = static_cast<int>(z.size());
  if (action < 0 || action >= n) fail(ErrorCode::kInvalidArgument, "policy_loss action out of range");
  std::vector<double> p = softmax(z);
  std::vector<double> logp(n);
  const double m = *std::max_element(z.begin(), z.end());
  double total = 0;
  for (double v : z) total += std::exp(v - m);
  const double lse = m + std::log(total);
  double entropy = 0;
  for (int i = 0; i < n; ++i) {
    logp[i] = z[i] - lse;
    entropy -= p[i] * logp[i];
  }
  const double loss = -advantage * logp[action] - entropy_cost * entropy;
  return t.push(1, 1, {loss}, t.needs_grad(logits),
                [logits, action, advantage, entropy_cost, entropy, p = std::move(p), logp = std::move(logp)](Tape& t,
                                                                                                           Var self) {
                  const double g = t.node(self).grad[0];
                  auto& gx = t.grad(logits);
                  for (std::size_t i = 0; i < p.size(); ++i) {
                    const double onehot = static_cast<int>(i) == action ? 1.0 : 0.0;
                    gx[i] += g * (-advantage * (onehot - p[i]) + entropy_cost * p[i] * (logp[i] + entropy));
                  }
                });
}

Var value_loss(Tape& t, Var v, double target, double coef) {
  const double diff = target - t.scalar(v);
  return t.push(1, 1, {coef * diff * diff}, t.needs_grad(v), [v, diff, coef](Tape& t, Var self) {
    t.grad(v)[0] += t.node(self).grad[0] * (-2.0 * coef * diff);
  });
}

}  // namespace silg::nn
