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

#include "msdarts/supernet.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "json.hpp"

namespace msdarts {

std::string op_name(OpKind op) {
  switch (op) {
    case OpKind::kZero:
      return "zero";
    case OpKind::kIdentity:
      return "identity";
    case OpKind::kLinearRelu:
      return "linear_relu";
    case OpKind::kLinearTanh:
      return "linear_tanh";
    case OpKind::kScaleHalf:
      return "scale_half";
  }
  return "unknown";
}

OpKind parse_op(const std::string& name) {
  for (OpKind op : all_ops()) {
    if (op_name(op) == name) return op;
  }
  throw std::invalid_argument("unknown op '" + name + "'");
}

bool has_weights(OpKind op) {
  return op == OpKind::kLinearRelu || op == OpKind::kLinearTanh;
}

const std::vector<OpKind>& all_ops() {
  static const std::vector<OpKind> ops = {OpKind::kZero, OpKind::kIdentity,
                                          OpKind::kLinearRelu,
                                          OpKind::kLinearTanh,
                                          OpKind::kScaleHalf};
  return ops;
}

CellGraph::CellGraph(std::size_t intermediate_nodes)
    : intermediate_(intermediate_nodes) {
  if (intermediate_nodes == 0) {
    throw std::invalid_argument("a cell needs at least one intermediate node");
  }
  for (std::size_t j = kInputNodes; j < kInputNodes + intermediate_; ++j) {
    for (std::size_t i = 0; i < j; ++i) edges_.push_back({i, j});
  }
}

Eigen::VectorXd ArchParams::edge_weights(std::size_t edge) const {
  Eigen::VectorXd v = edge_logits(edge);
  const double mx = v.maxCoeff();
  v = (v.array() - mx).exp();
  return v / v.sum();
}

ArchParams ArchParams::with_logits(Eigen::VectorXd values) const {
  if (static_cast<std::size_t>(values.size()) != dim()) {
    throw std::invalid_argument("logit vector has " +
                                std::to_string(values.size()) +
                                " entries, architecture needs " +
                                std::to_string(dim()));
  }
  ArchParams out{edges, ops, std::move(values)};
  return out;
}

DiscreteArch discretize(const ArchParams& arch) {
  DiscreteArch out;
  out.edges = arch.edges;
  for (std::size_t e = 0; e < arch.num_edges(); ++e) {
    std::size_t best = 0;
    for (std::size_t o = 1; o < arch.num_ops(); ++o) {
      if (arch.logits[arch.position(e, o)] > arch.logits[arch.position(e, best)]) {
        best = o;
      }
    }
    out.chosen.push_back(arch.ops[best]);
  }
  return out;
}

std::string to_json(const DiscreteArch& arch) {
  nlohmann::ordered_json edges = nlohmann::ordered_json::array();
  for (std::size_t e = 0; e < arch.edges.size(); ++e) {
    nlohmann::ordered_json item;
    item["from"] = arch.edges[e].from;
    item["to"] = arch.edges[e].to;
    item["op"] = op_name(arch.chosen[e]);
    edges.push_back(std::move(item));
  }
  nlohmann::ordered_json doc;
  doc["edges"] = std::move(edges);
  return doc.dump(2) + "\n";
}

DiscreteArch discrete_arch_from_json(const std::string& text) {
  DiscreteArch out;
  try {
    const auto doc = nlohmann::json::parse(text);
    const auto& edges = doc.at("edges");
    if (!edges.is_array()) throw std::invalid_argument("edges must be an array");
    for (const auto& item : edges) {
      out.edges.push_back(
          {item.at("from").get<std::size_t>(), item.at("to").get<std::size_t>()});
      out.chosen.push_back(parse_op(item.at("op").get<std::string>()));
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("malformed architecture json: ") + e.what());
  }
  return out;
}

std::size_t Weights::num_values() const {
  std::size_t n = 0;
  for (const auto& t : tensors) n += t.size();
  return n;
}

bool Weights::all_finite() const {
  return std::all_of(tensors.begin(), tensors.end(),
                     [](const Tensor& t) { return t.all_finite(); });
}

Supernet::Supernet(SupernetConfig config)
    : config_(std::move(config)), graph_(config_.intermediate_nodes) {
  if (config_.width == 0 || config_.classes < 2 || config_.cells == 0 ||
      config_.ops.empty()) {
    throw std::invalid_argument(
        "supernet needs width > 0, classes >= 2, cells > 0 and a nonempty op "
        "set");
  }
  const std::size_t edges = graph_.edges().size();
  const std::size_t ops = config_.ops.size();
  linear_index_.assign(config_.cells * edges * ops, -1);
  std::size_t next = 0;
  for (std::size_t c = 0; c < config_.cells; ++c) {
    for (std::size_t e = 0; e < edges; ++e) {
      for (std::size_t o = 0; o < ops; ++o) {
        if (!has_weights(config_.ops[o])) continue;
        linear_index_[(c * edges + e) * ops + o] = static_cast<int>(next);
        next += 2;
      }
    }
  }
  classifier_index_ = next;
  num_tensors_ = next + 2;
}

int Supernet::linear_index(std::size_t cell, std::size_t edge,
                           std::size_t op) const {
  const std::size_t edges = graph_.edges().size();
  return linear_index_.at((cell * edges + edge) * config_.ops.size() + op);
}

Weights Supernet::init_weights(std::mt19937_64& rng) const {
  const std::size_t w = config_.width;
  std::normal_distribution<double> gauss(0.0, 1.0 / std::sqrt(double(w)));
  Weights out;
  out.tensors.reserve(num_tensors_);
  for (std::size_t i = 0; i < classifier_index_; i += 2) {
    Tensor m(Shape{w, w});
    for (double& v : m.data()) v = gauss(rng);
    out.tensors.push_back(std::move(m));
    out.tensors.emplace_back(Shape{w});
  }
  Tensor cls(Shape{w, config_.classes});
  for (double& v : cls.data()) v = gauss(rng);
  out.tensors.push_back(std::move(cls));
  out.tensors.emplace_back(Shape{config_.classes});
  return out;
}

ArchParams Supernet::zero_arch() const {
  ArchParams a;
  a.edges = graph_.edges();
  a.ops = config_.ops;
  a.logits = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(a.dim()));
  return a;
}

ArchParams Supernet::init_arch(std::mt19937_64& rng, double scale) const {
  ArchParams a = zero_arch();
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (Eigen::Index i = 0; i < a.logits.size(); ++i) a.logits[i] = scale * gauss(rng);
  return a;
}

Var Supernet::apply_op(Tape& tape, OpKind op, Var x, int weight_index,
                       std::span<const Var> weight_vars) const {
  switch (op) {
    case OpKind::kZero:
      return tape.constant(Tensor(tape.value(x).shape()));
    case OpKind::kIdentity:
      return x;
    case OpKind::kScaleHalf:
      return tape.scale(x, 0.5);
    case OpKind::kLinearRelu:
    case OpKind::kLinearTanh: {
      const auto idx = static_cast<std::size_t>(weight_index);
      Var pre = tape.add(tape.matmul(x, weight_vars[idx]), weight_vars[idx + 1]);
      return op == OpKind::kLinearRelu ? tape.relu(pre) : tape.tanh(pre);
    }
  }
  throw std::logic_error("unhandled op");
}

Var Supernet::mixed_edge(Tape& tape, Var x, std::size_t cell, std::size_t edge,
                         Var edge_softmax,
                         std::span<const Var> weight_vars) const {
  std::vector<Var> terms;
  terms.reserve(config_.ops.size());
  for (std::size_t o = 0; o < config_.ops.size(); ++o) {
    terms.push_back(apply_op(tape, config_.ops[o], x,
                             linear_index(cell, edge, o), weight_vars));
  }
  return tape.weighted_sum(edge_softmax, terms);
}

Var Supernet::classify(Tape& tape, Var features,
                       std::span<const Var> weight_vars) const {
  return tape.add(tape.matmul(features, weight_vars[classifier_index_]),
                  weight_vars[classifier_index_ + 1]);
}

namespace {

void check_inputs(const SupernetConfig& cfg, const Tape& tape, Var x,
                  std::size_t weight_count, std::size_t num_tensors) {
  const Tensor& xv = tape.value(x);
  if (xv.rank() != 2 || xv.cols() != cfg.width) {
    throw std::invalid_argument("supernet input must be [rows x " +
                                std::to_string(cfg.width) + "], got " +
                                shape_string(xv.shape()));
  }
  if (weight_count != num_tensors) {
    throw std::invalid_argument("supernet expects " +
                                std::to_string(num_tensors) +
                                " weight tensors, got " +
                                std::to_string(weight_count));
  }
}

// Runs the stacked cells; `edge_fn(cell, edge, input)` produces one edge output.
template <typename EdgeFn>
Var run_cells(Tape& tape, Var x, const CellGraph& graph, std::size_t cells,
              EdgeFn&& edge_fn) {
  Var prev_prev = x, prev = x;
  const auto& edges = graph.edges();
  for (std::size_t c = 0; c < cells; ++c) {
    std::vector<Var> states = {prev_prev, prev};
    std::size_t e = 0;
    Var out{};
    for (std::size_t j = CellGraph::kInputNodes;
         j < CellGraph::kInputNodes + graph.num_intermediate(); ++j) {
      Var node{};
      bool first = true;
      for (; e < edges.size() && edges[e].to == j; ++e) {
        Var contribution = edge_fn(c, e, states[edges[e].from]);
        node = first ? contribution : tape.add(node, contribution);
        first = false;
      }
      states.push_back(node);
      out = j == CellGraph::kInputNodes ? node : tape.add(out, node);
    }
    prev_prev = prev;
    prev = out;
  }
  return prev;
}

}  // namespace

Var Supernet::forward(Tape& tape, Var x, std::span<const Var> arch_vars,
                      std::span<const Var> weight_vars) const {
  check_inputs(config_, tape, x, weight_vars.size(), num_tensors_);
  if (arch_vars.size() != graph_.edges().size()) {
    throw std::invalid_argument("supernet expects one logit node per edge");
  }
  std::vector<Var> softmaxed;
  softmaxed.reserve(arch_vars.size());
  for (Var a : arch_vars) softmaxed.push_back(tape.softmax(a));
  Var features = run_cells(tape, x, graph_, config_.cells,
                           [&](std::size_t c, std::size_t e, Var in) {
                             return mixed_edge(tape, in, c, e, softmaxed[e],
                                               weight_vars);
                           });
  return classify(tape, features, weight_vars);
}

Var Supernet::discrete_forward(Tape& tape, Var x, const DiscreteArch& arch,
                               std::span<const Var> weight_vars) const {
  check_inputs(config_, tape, x, weight_vars.size(), num_tensors_);
  if (arch.chosen.size() != graph_.edges().size()) {
    throw std::invalid_argument("discrete architecture has " +
                                std::to_string(arch.chosen.size()) +
                                " edges, supernet has " +
                                std::to_string(graph_.edges().size()));
  }
  std::vector<std::size_t> op_slot;
  for (OpKind chosen : arch.chosen) {
    auto it = std::find(config_.ops.begin(), config_.ops.end(), chosen);
    if (it == config_.ops.end()) {
      throw std::invalid_argument("op " + op_name(chosen) +
                                  " not in the supernet op set");
    }
    op_slot.push_back(static_cast<std::size_t>(it - config_.ops.begin()));
  }
  Var features = run_cells(
      tape, x, graph_, config_.cells, [&](std::size_t c, std::size_t e, Var in) {
        return apply_op(tape, arch.chosen[e], in,
                        linear_index(c, e, op_slot[e]), weight_vars);
      });
  return classify(tape, features, weight_vars);
}

Var cross_entropy(Tape& tape, Var logits, const std::vector<int>& labels) {
  const Tensor& lv = tape.value(logits);
  if (lv.rank() != 2 || lv.rows() != labels.size()) {
    throw std::invalid_argument("cross_entropy: logits " +
                                shape_string(lv.shape()) + " for " +
                                std::to_string(labels.size()) + " labels");
  }
  Tensor onehot(lv.shape());
  for (std::size_t r = 0; r < labels.size(); ++r) {
    const auto label = static_cast<std::size_t>(labels[r]);
    if (labels[r] < 0 || label >= lv.cols()) {
      throw std::invalid_argument("cross_entropy: label out of range");
    }
    onehot.at(r, label) = 1.0;
  }
  Var picked = tape.mul(tape.log_softmax(logits), tape.constant(std::move(onehot)));
  return tape.scale(tape.sum(picked), -1.0 / static_cast<double>(labels.size()));
}

namespace {

struct Bound {
  Var x;
  std::vector<Var> arch;
  std::vector<Var> weights;
};

Bound bind(Tape& tape, const ArchParams* arch, const Weights& weights,
           const Tensor& x, unsigned request) {
  Bound b;
  b.x = tape.constant(x);
  if (arch) {
    for (std::size_t e = 0; e < arch->num_edges(); ++e) {
      const Eigen::VectorXd row = arch->edge_logits(e);
      b.arch.push_back(tape.leaf(
          Tensor::vector(std::vector<double>(row.data(), row.data() + row.size())),
          (request & kArch) != 0));
    }
  }
  for (const Tensor& t : weights.tensors) {
    b.weights.push_back(tape.leaf(t, (request & kWeights) != 0));
  }
  return b;
}

}  // namespace

LossGrad loss_and_grad(const Supernet& net, const ArchParams& arch,
                       const Weights& weights, const Batch& batch,
                       unsigned request) {
  Tape tape;
  Bound b = bind(tape, &arch, weights, batch.x, request);
  Var out = cross_entropy(tape, net.forward(tape, b.x, b.arch, b.weights), batch.y);
  LossGrad result;
  result.loss = tape.value(out).item();
  if (request == kNone) return result;
  const Gradients g = tape.backward(out);
  if (request & kArch) {
    result.arch_grad.resize(static_cast<Eigen::Index>(arch.dim()));
    for (std::size_t e = 0; e < arch.num_edges(); ++e) {
      const Tensor& ge = g[b.arch[e]];
      for (std::size_t o = 0; o < arch.num_ops(); ++o) {
        result.arch_grad[static_cast<Eigen::Index>(arch.position(e, o))] = ge[o];
      }
    }
  }
  if (request & kWeights) {
    result.weight_grad.tensors.reserve(b.weights.size());
    for (Var v : b.weights) result.weight_grad.tensors.push_back(g[v]);
  }
  return result;
}

double loss(const Supernet& net, const ArchParams& arch, const Weights& weights,
            const Batch& batch) {
  return loss_and_grad(net, arch, weights, batch, kNone).loss;
}

Tensor supernet_logits(const Supernet& net, const ArchParams& arch,
                       const Weights& weights, const Tensor& x) {
  Tape tape;
  Bound b = bind(tape, &arch, weights, x, kNone);
  return tape.value(net.forward(tape, b.x, b.arch, b.weights));
}

Tensor discrete_logits(const Supernet& net, const DiscreteArch& arch,
                       const Weights& weights, const Tensor& x) {
  Tape tape;
  Bound b = bind(tape, nullptr, weights, x, kNone);
  return tape.value(net.discrete_forward(tape, b.x, arch, b.weights));
}

double accuracy(const Tensor& logits, const std::vector<int>& labels) {
  if (labels.empty()) return 0.0;
  std::size_t correct = 0;
  for (std::size_t r = 0; r < labels.size(); ++r) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < logits.cols(); ++c) {
      if (logits.at(r, c) > logits.at(r, best)) best = c;
    }
    if (static_cast<int>(best) == labels[r]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(labels.size());
}

}  // namespace msdarts
