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

// Cell-based search space over vector features.
//
// A cell has two input nodes, k intermediate nodes and an output node. Every
// pair (i, j) with i < j and j intermediate is an edge carrying a mixture of
// candidate operations weighted by softmax(alpha_edge). Intermediate node j is
// the sum of its incoming edges; the cell output is the sum of the
// intermediate nodes. Cells are stacked, cell c reading the outputs of cells
// c-2 and c-1 (the network input stands in for missing predecessors), and all
// cells share one set of architecture logits. A linear classifier follows the
// last cell.

#ifndef MSDARTS_SUPERNET_HPP_
#define MSDARTS_SUPERNET_HPP_

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "msdarts/data.hpp"
#include "msdarts/tape.hpp"
#include "msdarts/tensor.hpp"

namespace msdarts {

enum class OpKind { kZero, kIdentity, kLinearRelu, kLinearTanh, kScaleHalf };

std::string op_name(OpKind op);
OpKind parse_op(const std::string& name);
bool has_weights(OpKind op);
const std::vector<OpKind>& all_ops();

struct Edge {
  std::size_t from = 0;
  std::size_t to = 0;
  friend bool operator==(const Edge&, const Edge&) = default;
};

class CellGraph {
 public:
  static constexpr std::size_t kInputNodes = 2;

  explicit CellGraph(std::size_t intermediate_nodes);

  std::size_t num_intermediate() const { return intermediate_; }
  // Inputs, intermediates and the output node.
  std::size_t num_nodes() const { return kInputNodes + intermediate_ + 1; }
  const std::vector<Edge>& edges() const { return edges_; }

 private:
  std::size_t intermediate_;
  std::vector<Edge> edges_;
};

// Flattened logits: position(edge, op) = edge * num_ops + op.
struct ArchParams {
  std::vector<Edge> edges;
  std::vector<OpKind> ops;
  Eigen::VectorXd logits;

  std::size_t num_edges() const { return edges.size(); }
  std::size_t num_ops() const { return ops.size(); }
  std::size_t dim() const { return edges.size() * ops.size(); }
  std::size_t position(std::size_t edge, std::size_t op) const {
    return edge * ops.size() + op;
  }
  Eigen::VectorXd edge_logits(std::size_t edge) const {
    return logits.segment(static_cast<Eigen::Index>(edge * ops.size()),
                          static_cast<Eigen::Index>(ops.size()));
  }
  // softmax over the ops of one edge.
  Eigen::VectorXd edge_weights(std::size_t edge) const;

  ArchParams with_logits(Eigen::VectorXd values) const;
};

struct DiscreteArch {
  std::vector<Edge> edges;
  std::vector<OpKind> chosen;

  friend bool operator==(const DiscreteArch&, const DiscreteArch&) = default;
};

// Per-edge argmax; ties go to the lowest op index.
DiscreteArch discretize(const ArchParams& arch);

// {"edges": [{"from": i, "to": j, "op": "<tag>"}]}
std::string to_json(const DiscreteArch& arch);
// Throws std::invalid_argument for malformed documents or unknown ops.
DiscreteArch discrete_arch_from_json(const std::string& text);

struct SupernetConfig {
  std::size_t width = 16;
  std::size_t classes = 2;
  std::size_t cells = 2;
  std::size_t intermediate_nodes = 3;
  std::vector<OpKind> ops = all_ops();
  friend bool operator==(const SupernetConfig&, const SupernetConfig&) = default;
};

// All trainable network weights, in the order laid out by Supernet.
struct Weights {
  std::vector<Tensor> tensors;

  std::size_t num_values() const;
  bool all_finite() const;
  friend bool operator==(const Weights&, const Weights&) = default;
};

class Supernet {
 public:
  explicit Supernet(SupernetConfig config);

  const SupernetConfig& config() const { return config_; }
  const CellGraph& graph() const { return graph_; }

  // Linear-op matrices ~ N(0, 1/width), biases zero, classifier likewise.
  Weights init_weights(std::mt19937_64& rng) const;
  // Logits ~ scale * N(0, 1).
  ArchParams init_arch(std::mt19937_64& rng, double scale = 1e-3) const;
  ArchParams zero_arch() const;

  // Index of the matrix for (cell, edge, op) in Weights::tensors (bias at +1),
  // or -1 for parameter-free ops.
  int linear_index(std::size_t cell, std::size_t edge, std::size_t op) const;
  std::size_t classifier_index() const { return classifier_index_; }

  // Records the continuous forward pass on `tape`; `arch_vars` holds one
  // [num_ops] logit node per edge and `weight_vars` mirrors Weights::tensors.
  Var forward(Tape& tape, Var x, std::span<const Var> arch_vars,
              std::span<const Var> weight_vars) const;
  // One mixed edge: sum_o softmax(alpha)_o * o(x), given the softmaxed edge
  // weights node.
  Var mixed_edge(Tape& tape, Var x, std::size_t cell, std::size_t edge,
                 Var edge_softmax, std::span<const Var> weight_vars) const;
  // Forward pass applying only each edge's chosen op.
  Var discrete_forward(Tape& tape, Var x, const DiscreteArch& arch,
                       std::span<const Var> weight_vars) const;

 private:
  Var apply_op(Tape& tape, OpKind op, Var x, int weight_index,
               std::span<const Var> weight_vars) const;
  Var classify(Tape& tape, Var features, std::span<const Var> weight_vars) const;

  SupernetConfig config_;
  CellGraph graph_;
  std::vector<int> linear_index_;  // [cell][edge][op] flattened
  std::size_t classifier_index_ = 0;
  std::size_t num_tensors_ = 0;
};

// Mean cross-entropy of row logits against integer labels, on the tape.
Var cross_entropy(Tape& tape, Var logits, const std::vector<int>& labels);

struct LossGrad {
  double loss = 0.0;
  Eigen::VectorXd arch_grad;  // empty unless requested
  Weights weight_grad;        // empty unless requested
};

enum GradRequest : unsigned { kNone = 0, kArch = 1, kWeights = 2 };

LossGrad loss_and_grad(const Supernet& net, const ArchParams& arch,
                       const Weights& weights, const Batch& batch,
                       unsigned request);
double loss(const Supernet& net, const ArchParams& arch, const Weights& weights,
            const Batch& batch);
Tensor supernet_logits(const Supernet& net, const ArchParams& arch,
                       const Weights& weights, const Tensor& x);
Tensor discrete_logits(const Supernet& net, const DiscreteArch& arch,
                       const Weights& weights, const Tensor& x);
double accuracy(const Tensor& logits, const std::vector<int>& labels);

}  // namespace msdarts

#endif  // MSDARTS_SUPERNET_HPP_
