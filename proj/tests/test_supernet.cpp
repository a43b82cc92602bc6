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

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>
#include <gtest/gtest.h>

#include "msdarts/supernet.hpp"
#include "test_util.hpp"

namespace msdarts {
namespace {

using testing::random_tensor;
using testing::rel_error;

Eigen::MatrixXd to_matrix(const Tensor& t) {
  Eigen::MatrixXd m(t.rows(), t.cols());
  for (std::size_t r = 0; r < t.rows(); ++r) {
    for (std::size_t c = 0; c < t.cols(); ++c) m(r, c) = t.at(r, c);
  }
  return m;
}

// Straightforward re-implementation of the cell recurrence on dense matrices.
Eigen::MatrixXd reference_logits(const Supernet& net, const ArchParams& arch,
                                 const Weights& w, const Tensor& xt) {
  const auto& cfg = net.config();
  const auto& edges = net.graph().edges();
  const Eigen::MatrixXd x = to_matrix(xt);
  const auto op_out = [&](std::size_t c, std::size_t e, std::size_t o,
                          const Eigen::MatrixXd& in) -> Eigen::MatrixXd {
    switch (cfg.ops[o]) {
      case OpKind::kZero:
        return Eigen::MatrixXd::Zero(in.rows(), in.cols());
      case OpKind::kIdentity:
        return in;
      case OpKind::kScaleHalf:
        return 0.5 * in;
      default: {
        const auto idx = static_cast<std::size_t>(net.linear_index(c, e, o));
        Eigen::MatrixXd pre = in * to_matrix(w.tensors[idx]);
        pre.rowwise() += to_matrix(w.tensors[idx + 1]).row(0);
        return cfg.ops[o] == OpKind::kLinearRelu ? Eigen::MatrixXd(pre.cwiseMax(0.0))
                                                 : Eigen::MatrixXd(pre.array().tanh());
      }
    }
  };
  Eigen::MatrixXd pp = x, p = x;
  for (std::size_t c = 0; c < cfg.cells; ++c) {
    std::vector<Eigen::MatrixXd> states = {pp, p};
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(x.rows(), x.cols());
    for (std::size_t j = 2; j < 2 + cfg.intermediate_nodes; ++j) {
      Eigen::MatrixXd node = Eigen::MatrixXd::Zero(x.rows(), x.cols());
      for (std::size_t e = 0; e < edges.size(); ++e) {
        if (edges[e].to != j) continue;
        const Eigen::VectorXd logits = arch.edge_logits(e);
        const Eigen::ArrayXd ex = (logits.array() - logits.maxCoeff()).exp();
        const Eigen::ArrayXd sm = ex / ex.sum();
        for (std::size_t o = 0; o < cfg.ops.size(); ++o) {
          node += sm[static_cast<Eigen::Index>(o)] * op_out(c, e, o, states[edges[e].from]);
        }
      }
      states.push_back(node);
      out += node;
    }
    pp = p;
    p = out;
  }
  Eigen::MatrixXd logits = p * to_matrix(w.tensors[net.classifier_index()]);
  logits.rowwise() += to_matrix(w.tensors[net.classifier_index() + 1]).row(0);
  return logits;
}

ArchParams forced(const Supernet& net, const std::vector<std::size_t>& op_per_edge,
                  double hi = 40.0) {
  ArchParams a = net.zero_arch();
  for (std::size_t e = 0; e < a.num_edges(); ++e) {
    for (std::size_t o = 0; o < a.num_ops(); ++o) {
      a.logits[static_cast<Eigen::Index>(a.position(e, o))] = o == op_per_edge[e] ? hi : -hi;
    }
  }
  return a;
}

Tensor mixed_edge_output(const std::vector<OpKind>& ops, const std::vector<double>& logits,
                         const Tensor& x) {
  SupernetConfig cfg;
  cfg.width = x.cols();
  cfg.cells = 1;
  cfg.intermediate_nodes = 1;
  cfg.ops = ops;
  const Supernet net(cfg);
  Tape tape;
  std::mt19937_64 rng(0);
  const Weights w = net.init_weights(rng);
  std::vector<Var> wv;
  for (const auto& t : w.tensors) wv.push_back(tape.leaf(t));
  Var sm = tape.softmax(tape.leaf(Tensor::vector(logits)));
  return tape.value(net.mixed_edge(tape, tape.leaf(x), 0, 0, sm, wv));
}

TEST(Ops, NamesRoundTrip) {
  for (OpKind op : all_ops()) EXPECT_EQ(parse_op(op_name(op)), op);
  EXPECT_THROW(parse_op("conv3x3"), std::invalid_argument);
}

TEST(CellGraph, EdgesConnectAllPredecessors) {
  const CellGraph g(3);
  EXPECT_EQ(g.edges().size(), 9u);
  EXPECT_EQ(g.edges().front(), (Edge{0, 2}));
  EXPECT_EQ(g.edges().back(), (Edge{3, 4}));
  EXPECT_EQ(g.num_nodes(), 6u);
  EXPECT_THROW(CellGraph(0), std::invalid_argument);
}

TEST(MixedEdge, EqualLogitsAverageZeroAndIdentity) {
  const Tensor x = Tensor::matrix(2, 2, {1, -2, 3, 4});
  const Tensor y = mixed_edge_output({OpKind::kZero, OpKind::kIdentity}, {0.3, 0.3}, x);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_DOUBLE_EQ(y[i], 0.5 * x[i]);
}

TEST(MixedEdge, LogTwoLogitGivesTwoThirds) {
  const Tensor x = Tensor::matrix(1, 3, {3, -6, 1.5});
  const Tensor y =
      mixed_edge_output({OpKind::kIdentity, OpKind::kZero}, {std::log(2.0), 0.0}, x);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(y[i], 2.0 / 3.0 * x[i], 1e-15);
}

TEST(MixedEdge, SaturatedIdentity) {
  const Tensor x = Tensor::matrix(1, 2, {0.7, -1.1});
  const Tensor y = mixed_edge_output(all_ops(), {-20, 20, -20, -20, -20}, x);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(y[i], x[i], 1e-8);
}

TEST(Supernet, SingleIdentityPathIsTheClassifier) {
  SupernetConfig cfg;
  cfg.width = 3;
  cfg.cells = 1;
  cfg.intermediate_nodes = 1;
  cfg.ops = {OpKind::kIdentity, OpKind::kZero};
  const Supernet net(cfg);
  std::mt19937_64 rng(1);
  const Weights w = net.init_weights(rng);
  const Tensor x = random_tensor({4, 3}, rng);
  // Edge 0 -> 2 carries the input; edge 1 -> 2 is cut.
  const Tensor got = supernet_logits(net, forced(net, {0, 1}), w, x);
  const Eigen::MatrixXd want =
      to_matrix(x) * to_matrix(w.tensors[net.classifier_index()]) +
      Eigen::MatrixXd::Ones(4, 1) * to_matrix(w.tensors[net.classifier_index() + 1]);
  for (std::size_t r = 0; r < 4; ++r) {
    for (std::size_t c = 0; c < 2; ++c) EXPECT_NEAR(got.at(r, c), want(r, c), 1e-12);
  }
}

TEST(Supernet, AllZeroEdgesGiveConstantLogits) {
  SupernetConfig cfg;
  cfg.width = 4;
  const Supernet net(cfg);
  std::mt19937_64 rng(2);
  const Weights w = net.init_weights(rng);
  const Tensor x = random_tensor({5, 4}, rng);
  const Tensor got = supernet_logits(net, forced(net, std::vector<std::size_t>(9, 0)), w, x);
  for (std::size_t r = 1; r < 5; ++r) {
    for (std::size_t c = 0; c < 2; ++c) EXPECT_NEAR(got.at(r, c), got.at(0, c), 1e-12);
  }
}

TEST(Supernet, MatchesReferenceRecurrence) {
  std::mt19937_64 rng(3);
  for (std::size_t cells : {1u, 2u, 3u}) {
    SupernetConfig cfg;
    cfg.width = 5;
    cfg.classes = 3;
    cfg.cells = cells;
    const Supernet net(cfg);
    const Weights w = net.init_weights(rng);
    const ArchParams a = net.init_arch(rng, 1.0);
    const Tensor x = random_tensor({7, 5}, rng);
    const Tensor got = supernet_logits(net, a, w, x);
    const Eigen::MatrixXd want = reference_logits(net, a, w, x);
    for (std::size_t r = 0; r < 7; ++r) {
      for (std::size_t c = 0; c < 3; ++c) EXPECT_NEAR(got.at(r, c), want(r, c), 1e-10);
    }
  }
}

TEST(Supernet, WeightLayout) {
  SupernetConfig cfg;
  cfg.width = 4;
  cfg.classes = 3;
  const Supernet net(cfg);
  std::mt19937_64 rng(0);
  const Weights w = net.init_weights(rng);
  // Two linear ops on each of 9 edges in 2 cells, two tensors each, plus the
  // classifier pair.
  EXPECT_EQ(w.tensors.size(), 2u * 9u * 2u * 2u + 2u);
  EXPECT_EQ(net.linear_index(0, 0, 0), -1);
  EXPECT_EQ(net.linear_index(0, 0, 2), 0);
  EXPECT_EQ(net.linear_index(0, 0, 3), 2);
  EXPECT_EQ(w.tensors[net.classifier_index()].shape(), (Shape{4, 3}));
  for (double v : w.tensors[1].data()) EXPECT_EQ(v, 0.0);
}

TEST(Supernet, RejectsBadInputs) {
  SupernetConfig cfg;
  cfg.width = 4;
  const Supernet net(cfg);
  std::mt19937_64 rng(0);
  const Weights w = net.init_weights(rng);
  EXPECT_THROW(supernet_logits(net, net.zero_arch(), w, Tensor(Shape{3, 5})),
               std::invalid_argument);
  cfg.classes = 1;
  EXPECT_THROW(Supernet{cfg}, std::invalid_argument);
}

TEST(LossGradient, FullSupernetMatchesFiniteDifferences) {
  std::mt19937_64 rng(4);
  SupernetConfig cfg;
  cfg.width = 4;
  const Supernet net(cfg);
  const Weights w = net.init_weights(rng);
  const ArchParams a = net.init_arch(rng, 0.5);
  Batch b{random_tensor({8, 4}, rng), {0, 1, 1, 0, 1, 0, 0, 1}};
  const LossGrad g = loss_and_grad(net, a, w, b, kArch | kWeights);
  const Eigen::VectorXd fd = testing::numeric_gradient(
      [&](const Eigen::VectorXd& v) { return loss(net, a.with_logits(v), w, b); }, a.logits);
  for (Eigen::Index i = 0; i < fd.size(); ++i) EXPECT_LT(rel_error(g.arch_grad[i], fd[i]), 1e-4);
  for (std::size_t t : {std::size_t{0}, std::size_t{1}, net.classifier_index()}) {
    const Tensor fdw = testing::numeric_gradient(
        [&](const Tensor& v) {
          Weights m = w;
          m.tensors[t] = v;
          return loss(net, a, m, b);
        },
        w.tensors[t]);
    EXPECT_LT(testing::max_rel_error(g.weight_grad.tensors[t], fdw), 1e-4) << "tensor " << t;
  }
}

TEST(CrossEntropy, UniformLogitsGiveLogC) {
  Tape tape;
  Var z = tape.leaf(Tensor(Shape{3, 4}, 0.25));
  EXPECT_NEAR(tape.value(cross_entropy(tape, z, {0, 1, 3})).item(), std::log(4.0), 1e-15);
  EXPECT_THROW(cross_entropy(tape, z, {0, 1}), std::invalid_argument);
  EXPECT_THROW(cross_entropy(tape, z, {0, 1, 4}), std::invalid_argument);
}

TEST(Discretize, ArgmaxPerEdge) {
  ArchParams a;
  a.edges = {{0, 2}};
  a.ops = {OpKind::kZero, OpKind::kIdentity, OpKind::kLinearRelu};
  a.logits = Eigen::Vector3d(0.1, 0.9, 0.2);
  EXPECT_EQ(discretize(a).chosen, (std::vector<OpKind>{OpKind::kIdentity}));
}

TEST(Discretize, TiesGoToTheFirstOp) {
  ArchParams a;
  a.edges = {{0, 2}};
  a.ops = {OpKind::kLinearTanh, OpKind::kIdentity};
  a.logits = Eigen::Vector2d(0.5, 0.5);
  EXPECT_EQ(discretize(a).chosen, (std::vector<OpKind>{OpKind::kLinearTanh}));
}

TEST(Discretize, InvariantToPerEdgeShift) {
  std::mt19937_64 rng(6);
  const Supernet net(SupernetConfig{});
  for (int rep = 0; rep < 20; ++rep) {
    ArchParams a = net.init_arch(rng, 1.0);
    ArchParams b = a;
    for (std::size_t e = 0; e < a.num_edges(); ++e) {
      const double c = testing::random_vector(1, rng, 5.0)[0];
      for (std::size_t o = 0; o < a.num_ops(); ++o) {
        b.logits[static_cast<Eigen::Index>(a.position(e, o))] += c;
      }
    }
    EXPECT_EQ(discretize(a), discretize(b));
  }
}

TEST(Discretize, JsonRoundTrip) {
  std::mt19937_64 rng(7);
  const Supernet net(SupernetConfig{});
  const DiscreteArch d = discretize(net.init_arch(rng, 1.0));
  const std::string text = to_json(d);
  EXPECT_EQ(discrete_arch_from_json(text), d);
  EXPECT_EQ(text.back(), '\n');
  EXPECT_THROW(discrete_arch_from_json("{\"edges\": 3}"), std::invalid_argument);
}

TEST(DiscreteForward, IdentityEverywhereMatchesSaturatedSupernet) {
  std::mt19937_64 rng(8);
  SupernetConfig cfg;
  cfg.width = 4;
  const Supernet net(cfg);
  const Weights w = net.init_weights(rng);
  const Tensor x = random_tensor({6, 4}, rng);
  const ArchParams sat = forced(net, std::vector<std::size_t>(9, 1), 20.0);
  const Tensor a = discrete_logits(net, discretize(sat), w, x);
  const Tensor b = supernet_logits(net, sat, w, x);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-8);
}

TEST(DiscreteForward, ZeroEverywhereIsConstant) {
  std::mt19937_64 rng(9);
  SupernetConfig cfg;
  cfg.width = 4;
  const Supernet net(cfg);
  const Weights w = net.init_weights(rng);
  const DiscreteArch d{net.graph().edges(), std::vector<OpKind>(9, OpKind::kZero)};
  const Tensor y = discrete_logits(net, d, w, random_tensor({5, 4}, rng));
  for (std::size_t r = 1; r < 5; ++r) EXPECT_EQ(y.at(r, 1), y.at(0, 1));
}

TEST(DiscreteForward, RandomArchMatchesSaturatedLogits) {
  std::mt19937_64 rng(10);
  SupernetConfig cfg;
  cfg.width = 4;
  const Supernet net(cfg);
  std::uniform_int_distribution<std::size_t> pick(0, cfg.ops.size() - 1);
  for (int rep = 0; rep < 10; ++rep) {
    const Weights w = net.init_weights(rng);
    std::vector<std::size_t> choice(9);
    for (auto& c : choice) c = pick(rng);
    const ArchParams sat = forced(net, choice, 40.0);
    const Tensor x = random_tensor({6, 4}, rng);
    const Tensor a = discrete_logits(net, discretize(sat), w, x);
    const Tensor b = supernet_logits(net, sat, w, x);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-6);
  }
}

TEST(Accuracy, ArgmaxWithLowIndexTies) {
  const Tensor logits = Tensor::matrix(3, 2, {1, 1, 0, 2, 3, -1});
  EXPECT_DOUBLE_EQ(accuracy(logits, {0, 1, 0}), 1.0);
  EXPECT_DOUBLE_EQ(accuracy(logits, {1, 1, 1}), 1.0 / 3.0);
}

}  // namespace
}  // namespace msdarts
