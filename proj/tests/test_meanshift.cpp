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

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include <gtest/gtest.h>

#include "msdarts/meanshift.hpp"
#include "test_util.hpp"

namespace msdarts {
namespace {

using testing::random_vector;

SampleSet random_set(Eigen::Index d, std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  SampleSet s;
  for (std::size_t p = 0; p < n; ++p) {
    s.points.push_back(random_vector(d, rng));
    s.weights.push_back(u(rng));
  }
  return s;
}

TEST(Kernel, AtOriginIsOne) {
  EXPECT_EQ(kernel_value(Eigen::VectorXd::Zero(4), {0.7, KernelConvention::kVariance}), 1.0);
  EXPECT_EQ(kernel_value(Eigen::VectorXd::Zero(4), {0.7, KernelConvention::kScale}), 1.0);
}

TEST(Kernel, VarianceConventionAtTwoH) {
  const double h = 0.8;
  Eigen::VectorXd x(2);
  x << std::sqrt(h), std::sqrt(h);  // |x|^2 = 2h
  EXPECT_NEAR(kernel_value(x, {h, KernelConvention::kVariance}), std::exp(-1.0), 1e-15);
}

TEST(Kernel, VarianceAtHEqualsScaleAtRootH) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> uh(0.1, 3.0);
  for (int rep = 0; rep < 50; ++rep) {
    const Eigen::VectorXd x = random_vector(5, rng);
    const double h = uh(rng);
    EXPECT_NEAR(kernel_value(x, {h, KernelConvention::kVariance}),
                kernel_value(x, {std::sqrt(h), KernelConvention::kScale}), 1e-14);
  }
}

TEST(Kernel, RejectsNonPositiveBandwidth) {
  for (double h : {0.0, -1.0, std::nan("")}) {
    try {
      kernel_value(Eigen::VectorXd::Zero(2), {h, KernelConvention::kVariance});
      FAIL() << "h=" << h;
    } catch (const std::invalid_argument& e) {
      EXPECT_STREQ(e.what(), "bandwidth must be positive");
    }
  }
  EXPECT_EQ(parse_kernel_convention("scale"), KernelConvention::kScale);
  EXPECT_THROW(parse_kernel_convention("epanechnikov"), std::invalid_argument);
}

TEST(WeightedKde, SingleSampleAtPoint) {
  const Eigen::VectorXd a = Eigen::VectorXd::Constant(3, 0.4);
  EXPECT_EQ(weighted_kde(a, {{a}, {1.0}}, {}), 1.0);
}

TEST(WeightedKde, SymmetricPairHasEqualTerms) {
  Eigen::VectorXd a(2), d(2);
  a << 1, 2;
  d << 0.3, -0.7;
  const KernelConfig k{0.9};
  EXPECT_DOUBLE_EQ(kernel_value(a - (a + d), k), kernel_value(a - (a - d), k));
  EXPECT_DOUBLE_EQ(weighted_kde(a, {{a + d, a - d}, {0.5, 0.5}}, k),
                   kernel_value(d, k));
}

TEST(WeightedKde, MatchesDirectSummation) {
  std::mt19937_64 rng(2);
  for (int rep = 0; rep < 20; ++rep) {
    const SampleSet s = random_set(4, 6, rng);
    const Eigen::VectorXd a = random_vector(4, rng);
    const double h = 0.5 + rep * 0.1;
    double want = 0.0;
    for (std::size_t p = 0; p < s.size(); ++p) {
      double sq = 0.0;
      for (Eigen::Index i = 0; i < 4; ++i) sq += (a[i] - s.points[p][i]) * (a[i] - s.points[p][i]);
      want += s.weights[p] * std::exp(-sq / (2.0 * h));
    }
    EXPECT_NEAR(weighted_kde(a, s, {h}), want, 1e-12);
  }
}

TEST(ShiftVector, SingleSampleJumpsExactly) {
  std::mt19937_64 rng(3);
  for (int rep = 0; rep < 20; ++rep) {
    const Eigen::VectorXd a = random_vector(7, rng), p = random_vector(7, rng, 3.0);
    const Eigen::VectorXd delta = shift_vector(a, {{p}, {0.37}}, {0.2});
    EXPECT_EQ(a + delta, a + (p - a));
  }
}

TEST(ShiftVector, SymmetricMidpointIsStationary) {
  Eigen::VectorXd a(3), d(3);
  a << 0.2, -1, 4;
  d << 1, 2, -0.5;
  const Eigen::VectorXd delta = shift_vector(a, {{a + d, a - d}, {0.4, 0.4}}, {1.3});
  EXPECT_LT(delta.norm(), 1e-15);
}

TEST(ShiftVector, MatchesDirectFormulaInThePlane) {
  std::mt19937_64 rng(4);
  for (int rep = 0; rep < 30; ++rep) {
    const SampleSet s = random_set(2, 3, rng);
    const Eigen::VectorXd a = random_vector(2, rng);
    const double h = 0.3 + 0.05 * rep;
    double num0 = 0.0, num1 = 0.0, den = 0.0;
    for (std::size_t p = 0; p < 3; ++p) {
      const double dx = a[0] - s.points[p][0], dy = a[1] - s.points[p][1];
      const double g = s.weights[p] * std::exp(-(dx * dx + dy * dy) / (2.0 * h));
      num0 += g * s.points[p][0];
      num1 += g * s.points[p][1];
      den += g;
    }
    const Eigen::VectorXd delta = shift_vector(a, s, {h});
    EXPECT_NEAR(delta[0], num0 / den - a[0], 1e-12);
    EXPECT_NEAR(delta[1], num1 / den - a[1], 1e-12);
  }
}

TEST(ShiftVector, FarSamplesStayFinite) {
  Eigen::VectorXd a = Eigen::VectorXd::Zero(2), p1(2), p2(2);
  p1 << 100, 0;
  p2 << 0, 101;
  const Eigen::VectorXd delta = shift_vector(a, {{p1, p2}, {0.5, 0.5}}, {0.01});
  EXPECT_TRUE(delta.allFinite());
  EXPECT_NEAR(delta[0], 100.0, 1e-9);
}

TEST(ShiftVector, RejectsBadInput) {
  const Eigen::VectorXd a = Eigen::VectorXd::Zero(2);
  EXPECT_THROW(shift_vector(a, {}, {}), std::invalid_argument);
  EXPECT_THROW(shift_vector(a, {{a}, {}}, {}), std::invalid_argument);
  Eigen::VectorXd bad = a;
  bad[0] = std::nan("");
  EXPECT_THROW(shift_vector(bad, {{a}, {1.0}}, {}), std::invalid_argument);
  EXPECT_THROW(shift_vector(a, {{bad}, {1.0}}, {}), std::invalid_argument);
}

TEST(MsIterate, FixedPointSamplerStopsAfterOneStep) {
  const Eigen::VectorXd a0 = Eigen::VectorXd::Constant(4, 1.5);
  MeanShiftConfig cfg;
  cfg.max_iterations = 5;
  const auto r = ms_iterate(a0, [&](const Eigen::VectorXd&) { return SampleSet{{a0}, {1.0}}; },
                            cfg);
  EXPECT_EQ(r.point, a0);
  EXPECT_EQ(r.iterations, 1u);
  EXPECT_EQ(r.trajectory.size(), 2u);
}

TEST(MsIterate, KdeNeverDecreasesOnAFixedSampleSet) {
  std::mt19937_64 rng(5);
  for (Eigen::Index d : {2, 8, 32}) {
    for (int rep = 0; rep < 10; ++rep) {
      const SampleSet s = random_set(d, 6, rng);
      MeanShiftConfig cfg;
      cfg.bandwidth = 0.5 + rep;
      cfg.max_iterations = 25;
      cfg.tol = 1e-300;
      const auto r = ms_iterate(random_vector(d, rng, 0.5),
                                [&](const Eigen::VectorXd&) { return s; }, cfg);
      for (std::size_t t = 1; t < r.trajectory.size(); ++t) {
        const double before = weighted_kde(r.trajectory[t - 1], s, cfg.kernel());
        const double after = weighted_kde(r.trajectory[t], s, cfg.kernel());
        EXPECT_GE(after, before * (1.0 - 1e-12)) << "d=" << d << " t=" << t;
      }
    }
  }
}

TEST(MsIterate, IterationCapHolds) {
  std::mt19937_64 rng(6);
  MeanShiftConfig cfg;
  cfg.max_iterations = 2;
  cfg.tol = 1e-300;
  const auto r = ms_iterate(Eigen::VectorXd::Zero(3),
                            [&](const Eigen::VectorXd& a) {
                              return SampleSet{sample_around(a, 1.0, 3, rng), {1, 1, 1}};
                            },
                            cfg);
  EXPECT_EQ(r.iterations, 2u);
}

TEST(MsIterate, RejectsInvalidConfig) {
  MeanShiftConfig cfg;
  cfg.bandwidth = -1.0;
  const Sampler s = [](const Eigen::VectorXd& a) { return SampleSet{{a}, {1.0}}; };
  EXPECT_THROW(ms_iterate(Eigen::VectorXd::Zero(2), s, cfg), std::invalid_argument);
  cfg = {};
  cfg.samples = 0;
  EXPECT_THROW(ms_iterate(Eigen::VectorXd::Zero(2), s, cfg), std::invalid_argument);
  cfg = {};
  cfg.radius = -0.1;
  EXPECT_THROW(ms_iterate(Eigen::VectorXd::Zero(2), s, cfg), std::invalid_argument);
}

TEST(SampleAround, PointsStayInTheBall) {
  std::mt19937_64 rng(7);
  const Eigen::VectorXd c = random_vector(10, rng);
  for (const auto& p : sample_around(c, 0.03, 1000, rng)) {
    EXPECT_LE((p - c).norm(), 0.03 * (1 + 1e-12));
  }
}

TEST(SampleAround, ZeroRadiusCollapses) {
  std::mt19937_64 rng(8);
  const Eigen::VectorXd c = random_vector(6, rng);
  for (const auto& p : sample_around(c, 0.0, 10, rng)) EXPECT_LT((p - c).norm(), 1e-12);
}

TEST(SampleAround, MonteCarloMeanIsTheCenter) {
  std::mt19937_64 rng(9);
  const Eigen::Index d = 3;
  const double eps = 0.5;
  const std::size_t n = 100000;
  const Eigen::VectorXd c = random_vector(d, rng);
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
  double mean_r = 0.0;
  for (const auto& p : sample_around(c, eps, n, rng)) {
    mean += p;
    mean_r += (p - c).norm();
  }
  mean /= static_cast<double>(n);
  mean_r /= static_cast<double>(n);
  // Per-coordinate variance of the uniform ball: eps^2 / (d + 2).
  const double se = eps / std::sqrt(static_cast<double>(d + 2) * static_cast<double>(n));
  for (Eigen::Index i = 0; i < d; ++i) EXPECT_LT(std::abs(mean[i] - c[i]), 3 * se);
  // E|x - c| = eps d / (d + 1); Var = eps^2 d/(d+2) - (eps d/(d+1))^2.
  const double er = eps * d / (d + 1.0);
  const double sr = std::sqrt(eps * eps * d / (d + 2.0) - er * er) / std::sqrt(double(n));
  EXPECT_LT(std::abs(mean_r - er), 3 * sr);
}

TEST(LossWeights, Proportional) {
  const std::vector<double> l{1, 1, 2};
  EXPECT_EQ(loss_weights(l), (std::vector<double>{0.25, 0.25, 0.5}));
}

TEST(LossWeights, ZeroLossesFallBackToUniform) {
  const std::vector<double> l{0, 0, 0};
  const auto w = loss_weights(l);
  for (double v : w) EXPECT_DOUBLE_EQ(v, 1.0 / 3.0);
}

TEST(LossWeights, NormalizedAndOrderPreserving) {
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> u(0.0, 5.0);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<double> l(5);
    for (double& v : l) v = u(rng);
    const auto w = loss_weights(l);
    double sum = 0.0;
    for (double v : w) sum += v;
    EXPECT_NEAR(sum, 1.0, 1e-12);
    for (std::size_t i = 0; i < l.size(); ++i) {
      for (std::size_t j = 0; j < l.size(); ++j) {
        if (l[i] < l[j]) EXPECT_LT(w[i], w[j]);
      }
    }
  }
}

TEST(LossWeights, RejectsNegativeOrNonFinite) {
  EXPECT_THROW(loss_weights(std::vector<double>{1, -1}), std::invalid_argument);
  EXPECT_THROW(loss_weights(std::vector<double>{1, INFINITY}), std::invalid_argument);
  EXPECT_THROW(loss_weights(std::vector<double>{}), std::invalid_argument);
}

}  // namespace
}  // namespace msdarts
