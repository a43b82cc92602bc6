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

// Curvature and robustness diagnostics in architecture-logit space.

#ifndef MSDARTS_STABILITY_HPP_
#define MSDARTS_STABILITY_HPP_

#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Core>

#include "msdarts/data.hpp"
#include "msdarts/supernet.hpp"

namespace msdarts {

using GradientFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
using LossFn = std::function<double(const Eigen::VectorXd&)>;

// 1e-3 * max(1, |a|).
double default_hvp_step(const Eigen::VectorXd& a);

// Central difference of gradients along v / |v|, rescaled by |v|.
// Throws std::invalid_argument for a zero direction and std::runtime_error
// when a gradient is not finite.
Eigen::VectorXd hvp(const GradientFn& grad, const Eigen::VectorXd& a,
                    const Eigen::VectorXd& v, double step);

struct PowerIterationConfig {
  std::size_t iterations = 30;
  double tol = 1e-3;
  std::uint64_t seed = 0;
  double step = 0.0;  // <= 0 selects default_hvp_step(a)
};

struct EigenEstimate {
  double lambda = 0.0;
  // |H v - lambda v| / |lambda| at the returned estimate.
  double residual = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

// Dominant (largest-magnitude) Hessian eigenvalue with its sign. On
// non-convergence returns the largest-magnitude estimate seen, converged=false.
EigenEstimate lambda_max(const GradientFn& grad, const Eigen::VectorXd& a,
                         const PowerIterationConfig& cfg);

// Gradient of the loss on `batch` w.r.t. the logits, at fixed weights.
GradientFn arch_gradient_fn(const Supernet& net, const ArchParams& arch,
                            const Weights& weights, const Batch& batch);
LossFn arch_loss_fn(const Supernet& net, const ArchParams& arch,
                    const Weights& weights, const Batch& batch);

EigenEstimate supernet_lambda_max(const Supernet& net, const ArchParams& arch,
                                  const Weights& weights, const Batch& batch,
                                  const PowerIterationConfig& cfg);

struct EigenEntry {
  std::size_t epoch = 0;
  double lambda = 0.0;
  double residual = 0.0;
};
using EigenTrace = std::vector<EigenEntry>;

struct GapRecord {
  std::size_t epoch = 0;
  double continuous_valid_acc = 0.0;
  double discrete_valid_acc = 0.0;
  double gap = 0.0;
};

// Accuracy of the mixed supernet and of discretize(arch), same weights.
GapRecord discretization_gap(const Supernet& net, const ArchParams& arch,
                             const Weights& weights, const Batch& valid);

struct RadialProbe {
  std::size_t direction = 0;
  double radius = 0.0;
  double loss = 0.0;
};

struct DistancePoint {
  std::size_t epoch = 0;
  double distance = 0.0;
  double loss = 0.0;
};

struct AlphaDistanceCurve {
  std::vector<DistancePoint> history;
  std::vector<RadialProbe> probes;
};

// `count` unit vectors in R^d from a seeded Gaussian.
std::vector<Eigen::VectorXd> random_unit_directions(std::size_t dim,
                                                    std::size_t count,
                                                    std::uint64_t seed);
// u_1..u_k followed by -u_1..-u_k.
std::vector<Eigen::VectorXd> with_antipodes(std::vector<Eigen::VectorXd> directions);

// Loss at center + r * u for every direction and radius (radii ascending),
// plus (|alpha_t - center|, loss(alpha_t)) for each stored history entry.
AlphaDistanceCurve alpha_distance_probe(
    const LossFn& loss, const Eigen::VectorXd& center,
    const std::vector<Eigen::VectorXd>& directions,
    const std::vector<double>& radii,
    const std::vector<Eigen::VectorXd>& history = {});

// Mean over directions of loss(center + r u) - loss(center).
double sharpness_score(const LossFn& loss, const Eigen::VectorXd& center,
                       const std::vector<Eigen::VectorXd>& directions,
                       double radius);

}  // namespace msdarts

#endif  // MSDARTS_STABILITY_HPP_
