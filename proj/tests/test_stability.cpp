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

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "msdarts/stability.hpp"
#include "test_util.hpp"

namespace msdarts {
namespace {

using testing::random_vector;

GradientFn quadratic_grad(const Eigen::MatrixXd& m) {
  return [m](const Eigen::VectorXd& a) -> Eigen::VectorXd { return m * a; };
}

LossFn quadratic_loss(const Eigen::MatrixXd& m) {
  return [m](const Eigen::VectorXd& a) { return 0.5 * a.dot(m * a); };
}

Eigen::MatrixXd random_symmetric(Eigen::Index d, std::mt19937_64& rng) {
  Eigen::MatrixXd m(d, d);
  for (Eigen::Index i = 0; i < d; ++i) m.col(i) = random_vector(d, rng);
  return 0.5 * (m + m.transpose());
}

TEST(Hvp, QuadraticIsExact) {
  std::mt19937_64 rng(1);
  for (int rep = 0; rep < 20; ++rep) {
    const Eigen::MatrixXd m = random_symmetric(6, rng);
    const Eigen::VectorXd a = random_vector(6, rng), v = random_vector(6, rng);
    const Eigen::VectorXd got = hvp(quadratic_grad(m), a, v, default_hvp_step(a));
    EXPECT_LT((got - m * v).cwiseAbs().maxCoeff(), 1e-6);
  }
}

TEST(Hvp, LinearInDirection) {
  std::mt19937_64 rng(2);
  const Eigen::MatrixXd m = random_symmetric(5, rng);
  // A cubic term makes the Hessian point dependent.
  const GradientFn grad = [m](const Eigen::VectorXd& a) -> Eigen::VectorXd {
    return m * a + a.array().cube().matrix();
  };
  const Eigen::VectorXd a = random_vector(5, rng), v = random_vector(5, rng);
  const Eigen::VectorXd h1 = hvp(grad, a, v, 1e-3);
  const Eigen::VectorXd h2 = hvp(grad, a, 2.0 * v, 1e-3);
  EXPECT_LT((h2 - 2.0 * h1).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Hvp, DeadCoordinateGivesZero) {
  const GradientFn grad = [](const Eigen::VectorXd& a) -> Eigen::VectorXd {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(a.size());
    g[0] = std::sin(a[0]) * a[1];
    g[1] = 1 - std::cos(a[0]);
    return g;
  };
  Eigen::VectorXd a(3), e(3);
  a << 0.3, 0.7, -2.0;
  e << 0, 0, 1;
  EXPECT_LT(hvp(grad, a, e, 1e-3).norm(), 1e-8);
}

TEST(Hvp, RejectsZeroDirectionAndNonFiniteGradients) {
  const Eigen::VectorXd a = Eigen::VectorXd::Ones(2);
  EXPECT_THROW(hvp(quadratic_grad(Eigen::MatrixXd::Identity(2, 2)), a,
                   Eigen::VectorXd::Zero(2), 1e-3),
               std::invalid_argument);
  const GradientFn bad = [](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    return Eigen::VectorXd::Constant(x.size(), std::nan(""));
  };
  EXPECT_THROW(hvp(bad, a, a, 1e-3), std::runtime_error);
}

TEST(LambdaMax, DiagonalSpectrum) {
  const Eigen::VectorXd a = Eigen::VectorXd::Constant(3, 0.5);
  const auto e = lambda_max(quadratic_grad(Eigen::Vector3d(3, 1, -0.5).asDiagonal()), a, {});
  EXPECT_NEAR(e.lambda, 3.0, 1e-4);
  EXPECT_TRUE(e.converged);
}

TEST(LambdaMax, NegativeDominantKeepsSign) {
  const auto e = lambda_max(quadratic_grad(Eigen::Vector2d(-5, 1).asDiagonal()),
                            Eigen::VectorXd::Zero(2), {});
  EXPECT_NEAR(e.lambda, -5.0, 1e-4);
}

TEST(LambdaMax, IsotropicForAnyStart) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    PowerIterationConfig cfg;
    cfg.seed = seed;
    const auto e = lambda_max(quadratic_grad(2.5 * Eigen::MatrixXd::Identity(7, 7)),
                              Eigen::VectorXd::Zero(7), cfg);
    EXPECT_NEAR(e.lambda, 2.5, 1e-10);
    EXPECT_EQ(e.iterations, 1u);
  }
}

TEST(LambdaMax, MatchesDenseSolverOnRandomSpectra) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> top(1.0, 10.0), rest(-0.8, 0.8);
  for (int rep = 0; rep < 10; ++rep) {
    const Eigen::Index d = 4 + rep * 3;
    Eigen::VectorXd spec(d);
    spec[0] = (rep % 2 ? -1 : 1) * top(rng);
    for (Eigen::Index i = 1; i < d; ++i) spec[i] = rest(rng) * std::abs(spec[0]);
    const Eigen::HouseholderQR<Eigen::MatrixXd> qr(random_symmetric(d, rng));
    const Eigen::MatrixXd q = qr.householderQ();
    const Eigen::MatrixXd m = q * spec.asDiagonal() * q.transpose();
    const auto e = lambda_max(quadratic_grad(m), random_vector(d, rng), {});
    EXPECT_LT(std::abs(e.lambda - spec[0]) / std::abs(spec[0]), 1e-3) << "d=" << d;
  }
}

TEST(LambdaMax, FallbackIgnoresAStartNearASubdominantPair) {
  // Rebuild the seeded start vector and put the subdominant eigenvector
  // 0.02 rad away from it, so early iterates have small residuals.
  std::mt19937_64 rng(0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::Vector2d v0;
  v0[0] = gauss(rng);
  v0[1] = gauss(rng);
  v0.normalize();
  const double t = std::atan2(v0[1], v0[0]) + 0.02;
  const Eigen::Vector2d e2(std::cos(t), std::sin(t)), e1(-std::sin(t), std::cos(t));
  const Eigen::MatrixXd m = -2.68 * e1 * e1.transpose() - 1.88 * e2 * e2.transpose();
  PowerIterationConfig cfg;
  cfg.iterations = 12;
  const auto e = lambda_max(quadratic_grad(m), Eigen::VectorXd::Zero(2), cfg);
  EXPECT_FALSE(e.converged);
  EXPECT_LT(e.lambda, -2.2);
}

TEST(LambdaMax, FlagsNonConvergence) {
  // Equal-magnitude eigenvalues of opposite sign never converge.
  PowerIterationConfig cfg;
  cfg.iterations = 5;
  const auto e = lambda_max(quadratic_grad(Eigen::Vector2d(1, -1).asDiagonal()),
                            Eigen::VectorXd::Zero(2), cfg);
  EXPECT_FALSE(e.converged);
  EXPECT_EQ(e.iterations, 5u);
  EXPECT_TRUE(std::isfinite(e.residual));
  cfg.iterations = 0;
  EXPECT_THROW(lambda_max(quadratic_grad(Eigen::MatrixXd::Identity(2, 2)),
                          Eigen::VectorXd::Zero(2), cfg),
               std::invalid_argument);
}

struct TinyNet {
  Supernet net;
  Weights weights;
  Batch batch;
};

// Two features, identity classifier, ops {zero, identity}: uniform logits pass
// the input through while the tie-broken discrete net outputs constants.
TinyNet crafted_gap_net() {
  SupernetConfig cfg;
  cfg.width = 2;
  cfg.cells = 1;
  cfg.intermediate_nodes = 1;
  cfg.ops = {OpKind::kZero, OpKind::kIdentity};
  Supernet net(cfg);
  std::mt19937_64 rng(0);
  Weights w = net.init_weights(rng);
  w.tensors[net.classifier_index()] = Tensor::matrix(2, 2, {1, 0, 0, 1});
  w.tensors[net.classifier_index() + 1] = Tensor(Shape{2});
  Batch b{Tensor::matrix(4, 2, {1, 0, 0, 1, 2, -1, -1, 3}), {0, 1, 0, 1}};
  return {std::move(net), std::move(w), std::move(b)};
}

TEST(Gap, CraftedUniformInstanceIsPositive) {
  const TinyNet t = crafted_gap_net();
  const GapRecord g = discretization_gap(t.net, t.net.zero_arch(), t.weights, t.batch);
  EXPECT_DOUBLE_EQ(g.continuous_valid_acc, 1.0);
  EXPECT_DOUBLE_EQ(g.discrete_valid_acc, 0.5);
  EXPECT_GT(g.gap, 0.0);
}

TEST(Gap, SaturatedLogitsCloseTheGap) {
  std::mt19937_64 rng(4);
  SupernetConfig cfg;
  cfg.width = 4;
  const Supernet net(cfg);
  const Weights w = net.init_weights(rng);
  Batch b{testing::random_tensor({50, 4}, rng), {}};
  for (int i = 0; i < 50; ++i) b.y.push_back(i % 2);
  ArchParams a = net.init_arch(rng, 1.0);
  for (std::size_t e = 0; e < a.num_edges(); ++e) {
    const auto best = static_cast<std::size_t>(e % a.num_ops());
    for (std::size_t o = 0; o < a.num_ops(); ++o) {
      a.logits[static_cast<Eigen::Index>(a.position(e, o))] = o == best ? 40 : -40;
    }
  }
  EXPECT_LT(std::abs(discretization_gap(net, a, w, b).gap), 0.01);
}

TEST(Gap, InvariantToPerEdgeShift) {
  std::mt19937_64 rng(5);
  SupernetConfig cfg;
  cfg.width = 4;
  const Supernet net(cfg);
  const Weights w = net.init_weights(rng);
  Batch b{testing::random_tensor({40, 4}, rng), {}};
  for (int i = 0; i < 40; ++i) b.y.push_back(i % 2);
  const ArchParams a = net.init_arch(rng, 1.0);
  ArchParams s = a;
  for (std::size_t e = 0; e < a.num_edges(); ++e) {
    for (std::size_t o = 0; o < a.num_ops(); ++o) {
      s.logits[static_cast<Eigen::Index>(a.position(e, o))] += 0.25 * static_cast<double>(e);
    }
  }
  const GapRecord g1 = discretization_gap(net, a, w, b), g2 = discretization_gap(net, s, w, b);
  EXPECT_EQ(g1.continuous_valid_acc, g2.continuous_valid_acc);
  EXPECT_EQ(g1.discrete_valid_acc, g2.discrete_valid_acc);
}

TEST(UnitDirections, DeterministicAndNormalized) {
  const auto a = random_unit_directions(12, 5, 3), b = random_unit_directions(12, 5, 3);
  ASSERT_EQ(a.size(), 5u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i], b[i]);
    EXPECT_NEAR(a[i].norm(), 1.0, 1e-15);
  }
  EXPECT_NE(random_unit_directions(12, 1, 4)[0], a[0]);
}

TEST(AlphaProbe, ZeroRadiusIsTheCenterLoss) {
  std::mt19937_64 rng(6);
  const Eigen::MatrixXd m = random_symmetric(4, rng);
  const Eigen::VectorXd c = random_vector(4, rng);
  const auto curve = alpha_distance_probe(quadratic_loss(m), c,
                                          random_unit_directions(4, 3, 0), {0.0, 0.1});
  ASSERT_EQ(curve.probes.size(), 6u);
  EXPECT_EQ(curve.probes[0].loss, quadratic_loss(m)(c));
  EXPECT_EQ(curve.probes[0].radius, 0.0);
}

TEST(AlphaProbe, QuadraticIsSymmetric) {
  std::mt19937_64 rng(7);
  const Eigen::MatrixXd m = random_symmetric(5, rng);
  const auto dirs = random_unit_directions(5, 4, 1);
  std::vector<Eigen::VectorXd> both = dirs;
  for (const auto& u : dirs) both.push_back(-u);
  const auto curve = alpha_distance_probe(quadratic_loss(m), Eigen::VectorXd::Zero(5), both,
                                          {0.05, 0.5});
  const std::size_t half = curve.probes.size() / 2;
  for (std::size_t i = 0; i < half; ++i) {
    EXPECT_NEAR(curve.probes[i].loss, curve.probes[half + i].loss, 1e-8);
  }
}

TEST(AlphaProbe, HistoryDistances) {
  const Eigen::VectorXd c = Eigen::VectorXd::Zero(2);
  std::vector<Eigen::VectorXd> hist = {Eigen::Vector2d(3, 4), Eigen::Vector2d(0, 1)};
  const auto curve = alpha_distance_probe(quadratic_loss(Eigen::MatrixXd::Identity(2, 2)), c,
                                          {}, {}, hist);
  ASSERT_EQ(curve.history.size(), 2u);
  EXPECT_EQ(curve.history[0].epoch, 1u);
  EXPECT_DOUBLE_EQ(curve.history[0].distance, 5.0);
  EXPECT_DOUBLE_EQ(curve.history[0].loss, 12.5);
}

TEST(AlphaProbe, RejectsUnsortedRadii) {
  EXPECT_THROW(alpha_distance_probe(quadratic_loss(Eigen::MatrixXd::Identity(1, 1)),
                                    Eigen::VectorXd::Zero(1), {}, {0.2, 0.1}),
               std::invalid_argument);
}

TEST(Sharpness, QuadraticClosedForm) {
  std::mt19937_64 rng(8);
  const Eigen::MatrixXd m = random_symmetric(6, rng);
  const auto dirs = random_unit_directions(6, 16, 2);
  const double r = 0.05;
  double want = 0.0;
  for (const auto& u : dirs) want += 0.5 * r * r * u.dot(m * u);
  want /= 16.0;
  EXPECT_NEAR(sharpness_score(quadratic_loss(m), Eigen::VectorXd::Zero(6), dirs, r), want, 1e-15);
  EXPECT_THROW(sharpness_score(quadratic_loss(m), Eigen::VectorXd::Zero(6), {}, r),
               std::invalid_argument);
}

TEST(Sharpness, AntipodesCancelTheLinearTerm) {
  Eigen::VectorXd g(4);
  g << 3.0, -1.0, 0.5, 2.0;
  const LossFn linear = [&](const Eigen::VectorXd& a) { return g.dot(a); };
  const auto dirs = random_unit_directions(4, 5, 9);
  const auto both = with_antipodes(dirs);
  ASSERT_EQ(both.size(), 10u);
  EXPECT_EQ(both[7], -dirs[2]);
  EXPECT_NEAR(sharpness_score(linear, Eigen::VectorXd::Ones(4), both, 0.05), 0.0, 1e-15);
  EXPECT_GT(std::abs(sharpness_score(linear, Eigen::VectorXd::Ones(4), dirs, 0.05)), 1e-3);
}

TEST(SupernetCurvature, MatchesDenseFiniteDifferenceHessian) {
  std::mt19937_64 rng(9);
  SupernetConfig cfg;
  cfg.width = 3;
  cfg.cells = 1;
  cfg.intermediate_nodes = 2;
  const Supernet net(cfg);
  const Weights w = net.init_weights(rng);
  const ArchParams a = net.init_arch(rng, 1.0);
  Batch b{testing::random_tensor({10, 3}, rng), {0, 1, 1, 0, 1, 0, 0, 1, 1, 0}};
  const GradientFn grad = arch_gradient_fn(net, a, w, b);
  const Eigen::Index d = a.logits.size();
  Eigen::MatrixXd h(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    h.col(i) = hvp(grad, a.logits, Eigen::VectorXd::Unit(d, i), 1e-4);
  }
  h = 0.5 * (h + h.transpose());
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
  const double dominant = std::abs(es.eigenvalues()[0]) > std::abs(es.eigenvalues()[d - 1])
                              ? es.eigenvalues()[0]
                              : es.eigenvalues()[d - 1];
  PowerIterationConfig pc;
  pc.iterations = 500;
  pc.tol = 1e-6;
  const auto e = supernet_lambda_max(net, a, w, b, pc);
  EXPECT_NEAR(e.lambda, dominant, 1e-3 * std::abs(dominant));
}

}  // namespace
}  // namespace msdarts
