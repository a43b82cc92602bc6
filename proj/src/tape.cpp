// Copyright 2026 The msdarts Authors.
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

#include "msdarts/tape.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace msdarts {
namespace {

[[noreturn]] void shape_error(const std::string& op, const Tensor& a,
                              const Tensor& b) {
  throw std::invalid_argument(op + ": incompatible shapes " +
                              shape_string(a.shape()) + " and " +
                              shape_string(b.shape()));
}

struct MatDims {
  std::size_t rows;
  std::size_t cols;
};

// numpy matmul convention: a rank-1 left operand is a row, a rank-1 right
// operand is a column.
MatDims left_dims(const Tensor& t) {
  if (t.rank() == 1) return {1, t.shape()[0]};
  return {t.shape()[0], t.shape()[1]};
}

MatDims right_dims(const Tensor& t) {
  if (t.rank() == 1) return {t.shape()[0], 1};
  return {t.shape()[0], t.shape()[1]};
}

// out (m x n) = a (m x k) * b (k x n), with optional transposes on inputs.
void gemm(std::span<const double> a, bool trans_a, std::span<const double> b,
          bool trans_b, std::size_t m, std::size_t k, std::size_t n,
          std::span<double> out) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double av = trans_a ? a[p * m + i] : a[i * k + p];
      if (av == 0.0) continue;
      for (std::size_t j = 0; j < n; ++j) {
        const double bv = trans_b ? b[j * k + p] : b[p * n + j];
        out[i * n + j] += av * bv;
      }
    }
  }
}

bool is_bias_for(const Tensor& bias, const Tensor& x) {
  if (x.rank() < 1) return false;
  const bool bias_shape =
      bias.rank() == 1 || (bias.rank() == 2 && bias.shape()[0] == 1);
  return bias_shape && bias.size() == x.cols();
}

}  // namespace

const Tensor& Gradients::operator[](Var v) const {
  if (!contains(v)) {
    throw std::out_of_range("no gradient recorded for node " +
                            std::to_string(v.id));
  }
  return *grads_[v.id];
}

bool Gradients::contains(Var v) const {
  return v.id < grads_.size() && grads_[v.id].has_value();
}

Var Tape::push(std::string op, Tensor value, std::vector<std::size_t> inputs,
               BackwardFn backward) {
  Node n;
  n.op = std::move(op);
  n.value = std::move(value);
  n.requires_grad = std::any_of(inputs.begin(), inputs.end(),
                                [this](std::size_t i) { return needs_grad(i); });
  n.inputs = std::move(inputs);
  n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

const Tape::Node& Tape::node(Var v) const {
  if (v.id >= nodes_.size()) {
    throw std::out_of_range("node id " + std::to_string(v.id) +
                            " not on this tape");
  }
  return nodes_[v.id];
}

void Tape::accumulate(GradSlots& slots, std::size_t id, Tensor grad) {
  auto& slot = slots[id];
  if (!slot) {
    slot = std::move(grad);
    return;
  }
  auto dst = slot->data();
  auto src = grad.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

Var Tape::leaf(Tensor value, bool trainable) {
  Node n;
  n.op = trainable ? "leaf" : "constant";
  n.value = std::move(value);
  n.trainable = trainable;
  n.leaf = true;
  n.requires_grad = trainable;
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

Var Tape::matmul(Var a, Var b) {
  const Tensor& av = node(a).value;
  const Tensor& bv = node(b).value;
  if (av.rank() < 1 || av.rank() > 2 || bv.rank() < 1 || bv.rank() > 2) {
    shape_error("matmul", av, bv);
  }
  const MatDims da = left_dims(av);
  const MatDims db = right_dims(bv);
  if (da.cols != db.rows) shape_error("matmul", av, bv);
  Shape out_shape;
  if (av.rank() == 2) out_shape.push_back(da.rows);
  if (bv.rank() == 2) out_shape.push_back(db.cols);
  Tensor out(out_shape);
  gemm(av.data(), false, bv.data(), false, da.rows, da.cols, db.cols,
       out.data());
  const std::size_t m = da.rows, k = da.cols, n = db.cols;
  return push("matmul", std::move(out), {a.id, b.id},
              [a, b, m, k, n](const Tape& t, const Tensor&, const Tensor& g,
                              GradSlots& slots) {
                const Tensor& av = t.value(a);
                const Tensor& bv = t.value(b);
                if (t.needs_grad(a.id)) {
                  Tensor ga(av.shape());
                  gemm(g.data(), false, bv.data(), true, m, n, k, ga.data());
                  accumulate(slots, a.id, std::move(ga));
                }
                if (t.needs_grad(b.id)) {
                  Tensor gb(bv.shape());
                  gemm(av.data(), true, g.data(), false, k, m, n, gb.data());
                  accumulate(slots, b.id, std::move(gb));
                }
              });
}

Var Tape::add(Var a, Var b) {
  const Tensor& av = node(a).value;
  const Tensor& bv = node(b).value;
  if (av.shape() == bv.shape()) {
    Tensor out = av;
    auto o = out.data();
    auto y = bv.data();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] += y[i];
    return push("add", std::move(out), {a.id, b.id},
                [a, b](const Tape& t, const Tensor&, const Tensor& g,
                       GradSlots& slots) {
                  if (t.needs_grad(a.id)) accumulate(slots, a.id, g);
                  if (t.needs_grad(b.id)) accumulate(slots, b.id, g);
                });
  }
  if (!is_bias_for(bv, av)) shape_error("add", av, bv);
  Tensor out = av;
  const std::size_t rows = av.rows(), cols = av.cols();
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) out.at(r, c) += bv[c];
  }
  return push("add", std::move(out), {a.id, b.id},
              [a, b, rows, cols](const Tape& t, const Tensor&, const Tensor& g,
                                 GradSlots& slots) {
                if (t.needs_grad(a.id)) accumulate(slots, a.id, g);
                if (t.needs_grad(b.id)) {
                  Tensor gb(t.value(b).shape());
                  for (std::size_t r = 0; r < rows; ++r) {
                    for (std::size_t c = 0; c < cols; ++c) {
                      gb[c] += g.at(r, c);
                    }
                  }
                  accumulate(slots, b.id, std::move(gb));
                }
              });
}

Var Tape::mul(Var a, Var b) {
  const Tensor& av = node(a).value;
  const Tensor& bv = node(b).value;
  if (av.shape() != bv.shape()) shape_error("mul", av, bv);
  Tensor out = av;
  auto o = out.data();
  auto y = bv.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] *= y[i];
  return push("mul", std::move(out), {a.id, b.id},
              [a, b](const Tape& t, const Tensor&, const Tensor& g,
                     GradSlots& slots) {
                const Tensor& av = t.value(a);
                const Tensor& bv = t.value(b);
                if (t.needs_grad(a.id)) {
                  Tensor ga = g;
                  for (std::size_t i = 0; i < ga.size(); ++i) ga[i] *= bv[i];
                  accumulate(slots, a.id, std::move(ga));
                }
                if (t.needs_grad(b.id)) {
                  Tensor gb = g;
                  for (std::size_t i = 0; i < gb.size(); ++i) gb[i] *= av[i];
                  accumulate(slots, b.id, std::move(gb));
                }
              });
}

Var Tape::relu(Var x) {
  Tensor out = node(x).value;
  for (double& v : out.data()) v = v > 0.0 ? v : 0.0;
  return push("relu", std::move(out), {x.id},
              [x](const Tape& t, const Tensor&, const Tensor& g,
                  GradSlots& slots) {
                const Tensor& xv = t.value(x);
                Tensor gx = g;
                for (std::size_t i = 0; i < gx.size(); ++i) {
                  if (!(xv[i] > 0.0)) gx[i] = 0.0;
                }
                accumulate(slots, x.id, std::move(gx));
              });
}

Var Tape::tanh(Var x) {
  Tensor out = node(x).value;
  for (double& v : out.data()) v = std::tanh(v);
  return push("tanh", std::move(out), {x.id},
              [x](const Tape&, const Tensor& y, const Tensor& g,
                  GradSlots& slots) {
                Tensor gx = g;
                for (std::size_t i = 0; i < gx.size(); ++i) {
                  gx[i] *= 1.0 - y[i] * y[i];
                }
                accumulate(slots, x.id, std::move(gx));
              });
}

Var Tape::softmax(Var x) {
  const Tensor& xv = node(x).value;
  if (xv.rank() < 1) {
    throw std::invalid_argument("softmax: needs rank >= 1, got " +
                                shape_string(xv.shape()));
  }
  Tensor out = xv;
  const std::size_t rows = xv.rows(), cols = xv.cols();
  for (std::size_t r = 0; r < rows; ++r) {
    double mx = out.at(r, 0);
    for (std::size_t c = 1; c < cols; ++c) mx = std::max(mx, out.at(r, c));
    double z = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      out.at(r, c) = std::exp(out.at(r, c) - mx);
      z += out.at(r, c);
    }
    for (std::size_t c = 0; c < cols; ++c) out.at(r, c) /= z;
  }
  return push("softmax", std::move(out), {x.id},
              [x, rows, cols](const Tape&, const Tensor& y, const Tensor& g,
                              GradSlots& slots) {
                Tensor gx(y.shape());
                for (std::size_t r = 0; r < rows; ++r) {
                  double dot = 0.0;
                  for (std::size_t c = 0; c < cols; ++c) {
                    dot += g.at(r, c) * y.at(r, c);
                  }
                  for (std::size_t c = 0; c < cols; ++c) {
                    gx.at(r, c) = y.at(r, c) * (g.at(r, c) - dot);
                  }
                }
                accumulate(slots, x.id, std::move(gx));
              });
}

Var Tape::log_softmax(Var x) {
  const Tensor& xv = node(x).value;
  if (xv.rank() < 1) {
    throw std::invalid_argument("log_softmax: needs rank >= 1, got " +
                                shape_string(xv.shape()));
  }
  Tensor out = xv;
  const std::size_t rows = xv.rows(), cols = xv.cols();
  for (std::size_t r = 0; r < rows; ++r) {
    double mx = out.at(r, 0);
    for (std::size_t c = 1; c < cols; ++c) mx = std::max(mx, out.at(r, c));
    double z = 0.0;
    for (std::size_t c = 0; c < cols; ++c) z += std::exp(out.at(r, c) - mx);
    const double lse = mx + std::log(z);
    for (std::size_t c = 0; c < cols; ++c) out.at(r, c) -= lse;
  }
  return push("log_softmax", std::move(out), {x.id},
              [x, rows, cols](const Tape&, const Tensor& y, const Tensor& g,
                              GradSlots& slots) {
                Tensor gx(y.shape());
                for (std::size_t r = 0; r < rows; ++r) {
                  double gsum = 0.0;
                  for (std::size_t c = 0; c < cols; ++c) gsum += g.at(r, c);
                  for (std::size_t c = 0; c < cols; ++c) {
                    gx.at(r, c) = g.at(r, c) - std::exp(y.at(r, c)) * gsum;
                  }
                }
                accumulate(slots, x.id, std::move(gx));
              });
}

Var Tape::sum(Var x) {
  const Tensor& xv = node(x).value;
  double s = 0.0;
  for (double v : xv.data()) s += v;
  return push("sum", Tensor::scalar(s), {x.id},
              [x](const Tape& t, const Tensor&, const Tensor& g,
                  GradSlots& slots) {
                accumulate(slots, x.id, Tensor(t.value(x).shape(), g.item()));
              });
}

Var Tape::mean(Var x) {
  const Tensor& xv = node(x).value;
  double s = 0.0;
  for (double v : xv.data()) s += v;
  const double n = static_cast<double>(xv.size());
  return push("mean", Tensor::scalar(s / n), {x.id},
              [x, n](const Tape& t, const Tensor&, const Tensor& g,
                     GradSlots& slots) {
                accumulate(slots, x.id,
                           Tensor(t.value(x).shape(), g.item() / n));
              });
}

Var Tape::scale(Var x, double factor) {
  Tensor out = node(x).value;
  for (double& v : out.data()) v *= factor;
  return push("scale", std::move(out), {x.id},
              [x, factor](const Tape&, const Tensor&, const Tensor& g,
                          GradSlots& slots) {
                Tensor gx = g;
                for (double& v : gx.data()) v *= factor;
                accumulate(slots, x.id, std::move(gx));
              });
}

Var Tape::weighted_sum(Var weights, std::span<const Var> terms) {
  const Tensor& wv = node(weights).value;
  if (terms.empty() || wv.size() != terms.size()) {
    throw std::invalid_argument(
        "weighted_sum: " + std::to_string(wv.size()) + " weights for " +
        std::to_string(terms.size()) + " terms");
  }
  const Tensor& first = node(terms[0]).value;
  Tensor out(first.shape());
  for (std::size_t i = 0; i < terms.size(); ++i) {
    const Tensor& tv = node(terms[i]).value;
    if (tv.shape() != first.shape()) shape_error("weighted_sum", first, tv);
    const double w = wv[i];
    auto o = out.data();
    auto s = tv.data();
    for (std::size_t j = 0; j < o.size(); ++j) o[j] += w * s[j];
  }
  std::vector<std::size_t> inputs{weights.id};
  for (Var v : terms) inputs.push_back(v.id);
  std::vector<Var> term_vars(terms.begin(), terms.end());
  return push("weighted_sum", std::move(out), std::move(inputs),
              [weights, term_vars](const Tape& t, const Tensor&,
                                   const Tensor& g, GradSlots& slots) {
                const Tensor& wv = t.value(weights);
                if (t.needs_grad(weights.id)) {
                  Tensor gw(wv.shape());
                  for (std::size_t i = 0; i < term_vars.size(); ++i) {
                    auto s = t.value(term_vars[i]).data();
                    double dot = 0.0;
                    for (std::size_t j = 0; j < s.size(); ++j) {
                      dot += g[j] * s[j];
                    }
                    gw[i] = dot;
                  }
                  accumulate(slots, weights.id, std::move(gw));
                }
                for (std::size_t i = 0; i < term_vars.size(); ++i) {
                  if (!t.needs_grad(term_vars[i].id)) continue;
                  Tensor gt = g;
                  for (double& v : gt.data()) v *= wv[i];
                  accumulate(slots, term_vars[i].id, std::move(gt));
                }
              });
}

Gradients Tape::backward(Var output) const {
  const Node& out = node(output);
  if (out.value.size() != 1) {
    throw std::invalid_argument("backward: output must be scalar, got " +
                                shape_string(out.value.shape()));
  }
  GradSlots slots(nodes_.size());
  slots[output.id] = Tensor(out.value.shape(), 1.0);
  for (std::size_t i = output.id + 1; i-- > 0;) {
    const Node& n = nodes_[i];
    if (n.leaf || !n.requires_grad || !slots[i]) continue;
    n.backward(*this, n.value, *slots[i], slots);
  }
  GradSlots result(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (!nodes_[i].trainable) continue;
    result[i] = slots[i] ? std::move(*slots[i]) : Tensor(nodes_[i].value.shape());
  }
  return Gradients(std::move(result));
}

}  // namespace msdarts
