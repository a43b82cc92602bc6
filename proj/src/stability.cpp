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

#include "msdarts/stability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace msdarts {

double default_hvp_step(const Eigen::VectorXd& a) {
  return 1e-3 * std::max(1.0, a.norm());
}

Eigen::VectorXd hvp(const GradientFn& grad, const Eigen::VectorXd& a,
                    const Eigen::VectorXd& v, double step) {
  const double norm = v.norm();
  if (!(norm > 0.0)) throw std::invalid_argument("hvp: zero direction");
  if (!(step > 0.0)) throw std::invalid_argument("hvp: step must be positive");
  const Eigen::VectorXd unit = v / norm;
  const Eigen::VectorXd plus = grad(a + step * unit);
  const Eigen::VectorXd minus = grad(a - step * unit);
  if (!plus.allFinite() || !minus.allFinite()) {
    throw std::runtime_error("hvp: non-finite gradient");
  }
  return (plus - minus) * (norm / (2.0 * step));
}

EigenEstimate lambda_max(const GradientFn& grad, const Eigen::VectorXd& a,
                         const PowerIterationConfig& cfg) {
  if (cfg.iterations < 1) throw std::invalid_argument("lambda_max: iterations >= 1");
  const double step = cfg.step > 0.0 ? cfg.step : default_hvp_step(a);

  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::VectorXd v(a.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = gauss(rng);
  v.normalize();

  // |v^T H v| never exceeds the dominant magnitude, so the largest one seen is
  // the best fallback; a low residual alone can come from a subdominant pair.
  EigenEstimate best;
  best.residual = std::numeric_limits<double>::infinity();
  bool have = false;
  for (std::size_t k = 1; k <= cfg.iterations; ++k) {
    const Eigen::VectorXd hv = hvp(grad, a, v, step);
    const double lambda = v.dot(hv);
    const double hv_norm = hv.norm();
    double residual;
    if (hv_norm == 0.0) {
      residual = 0.0;
    } else {
      residual = (hv - lambda * v).norm() / std::abs(lambda);
    }
    if (!have || std::abs(lambda) > std::abs(best.lambda)) {
      best.lambda = lambda;
      best.residual = residual;
      have = true;
    }
    best.iterations = k;
    if (residual < cfg.tol) {
      best.lambda = lambda;
      best.residual = residual;
      best.converged = true;
      return best;
    }
    v = hv / hv_norm;
  }
  return best;
}

GradientFn arch_gradient_fn(const Supernet& net, const ArchParams& arch,
                            const Weights& weights, const Batch& batch) {
  return [&net, arch, &weights, &batch](const Eigen::VectorXd& logits) {
    return loss_and_grad(net, arch.with_logits(logits), weights, batch, kArch)
        .arch_grad;
  };
}

LossFn arch_loss_fn(const Supernet& net, const ArchParams& arch,
                    const Weights& weights, const Batch& batch) {
  return [&net, arch, &weights, &batch](const Eigen::VectorXd& logits) {
    return loss(net, arch.with_logits(logits), weights, batch);
  };
}

EigenEstimate supernet_lambda_max(const Supernet& net, const ArchParams& arch,
                                  const Weights& weights, const Batch& batch,
                                  const PowerIterationConfig& cfg) {
  return lambda_max(arch_gradient_fn(net, arch, weights, batch), arch.logits, cfg);
}

GapRecord discretization_gap(const Supernet& net, const ArchParams& arch,
                             const Weights& weights, const Batch& valid) {
  GapRecord r;
  r.continuous_valid_acc =
      accuracy(supernet_logits(net, arch, weights, valid.x), valid.y);
  r.discrete_valid_acc =
      accuracy(discrete_logits(net, discretize(arch), weights, valid.x), valid.y);
  r.gap = r.continuous_valid_acc - r.discrete_valid_acc;
  return r;
}

std::vector<Eigen::VectorXd> random_unit_directions(std::size_t dim,
                                                    std::size_t count,
                                                    std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<Eigen::VectorXd> out;
  out.reserve(count);
  while (out.size() < count) {
    Eigen::VectorXd u(static_cast<Eigen::Index>(dim));
    for (Eigen::Index i = 0; i < u.size(); ++i) u[i] = gauss(rng);
    const double n = u.norm();
    if (n > 0.0) out.push_back(u / n);
  }
  return out;
}

AlphaDistanceCurve alpha_distance_probe(
    const LossFn& loss_at, const Eigen::VectorXd& center,
    const std::vector<Eigen::VectorXd>& directions,
    const std::vector<double>& radii,
    const std::vector<Eigen::VectorXd>& history) {
  if (!std::is_sorted(radii.begin(), radii.end())) {
    throw std::invalid_argument("alpha_distance_probe: radii must be ascending");
  }
  AlphaDistanceCurve curve;
  const double base = loss_at(center);
  for (std::size_t d = 0; d < directions.size(); ++d) {
    for (double r : radii) {
      const double l = r == 0.0 ? base : loss_at(center + r * directions[d]);
      curve.probes.push_back({d, r, l});
    }
  }
  for (std::size_t t = 0; t < history.size(); ++t) {
    curve.history.push_back(
        {t + 1, (history[t] - center).norm(), loss_at(history[t])});
  }
  return curve;
}

std::vector<Eigen::VectorXd> with_antipodes(std::vector<Eigen::VectorXd> directions) {
  const std::size_t k = directions.size();
  directions.reserve(2 * k);
  for (std::size_t i = 0; i < k; ++i) directions.push_back(-directions[i]);
  return directions;
}

double sharpness_score(const LossFn& loss_at, const Eigen::VectorXd& center,
                       const std::vector<Eigen::VectorXd>& directions,
                       double radius) {
  if (directions.empty()) throw std::invalid_argument("sharpness_score: no directions");
  const double base = loss_at(center);
  double total = 0.0;
  for (const auto& u : directions) total += loss_at(center + radius * u) - base;
  return total / static_cast<double>(directions.size());
}

}  // namespace msdarts
