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

#include "msdarts/meanshift.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace msdarts {

KernelConvention parse_kernel_convention(const std::string& name) {
  if (name == "variance") return KernelConvention::kVariance;
  if (name == "scale") return KernelConvention::kScale;
  throw std::invalid_argument("unknown kernel convention '" + name +
                              "' (expected variance or scale)");
}

std::string kernel_convention_name(KernelConvention c) {
  return c == KernelConvention::kVariance ? "variance" : "scale";
}

void KernelConfig::validate() const {
  if (!(bandwidth > 0.0) || !std::isfinite(bandwidth)) {
    throw std::invalid_argument("bandwidth must be positive");
  }
}

double KernelConfig::exponent(double squared_norm) const {
  if (convention == KernelConvention::kVariance) {
    return squared_norm / (2.0 * bandwidth);
  }
  return squared_norm / (2.0 * bandwidth * bandwidth);
}

double kernel_value(const Eigen::VectorXd& offset, const KernelConfig& cfg) {
  cfg.validate();
  return std::exp(-cfg.exponent(offset.squaredNorm()));
}

double weighted_kde(const Eigen::VectorXd& a, const SampleSet& samples,
                    const KernelConfig& cfg) {
  if (samples.points.empty()) throw std::invalid_argument("empty sample set");
  double total = 0.0;
  for (std::size_t p = 0; p < samples.size(); ++p) {
    total += samples.weights[p] * kernel_value(a - samples.points[p], cfg);
  }
  return total;
}

Eigen::VectorXd shift_vector(const Eigen::VectorXd& a, const SampleSet& samples,
                             const KernelConfig& cfg) {
  cfg.validate();
  if (samples.points.empty()) throw std::invalid_argument("empty sample set");
  if (samples.weights.size() != samples.points.size()) {
    throw std::invalid_argument("sample set has " +
                                std::to_string(samples.points.size()) +
                                " points but " +
                                std::to_string(samples.weights.size()) +
                                " weights");
  }
  if (!a.allFinite()) throw std::invalid_argument("shift_vector: non-finite anchor");

  const std::size_t n = samples.size();
  std::vector<Eigen::VectorXd> offsets(n);
  std::vector<double> q(n);
  double q_min = std::numeric_limits<double>::infinity();
  for (std::size_t p = 0; p < n; ++p) {
    if (!samples.points[p].allFinite()) {
      throw std::invalid_argument("shift_vector: non-finite sample " +
                                  std::to_string(p));
    }
    offsets[p] = samples.points[p] - a;
    q[p] = cfg.exponent(offsets[p].squaredNorm());
    q_min = std::min(q_min, q[p]);
  }
  // Subtracting the smallest exponent cancels in the ratio and keeps the
  // nearest sample's kernel at exactly one.
  std::vector<double> g(n);
  double denom = 0.0;
  for (std::size_t p = 0; p < n; ++p) {
    g[p] = samples.weights[p] * std::exp(-(q[p] - q_min));
    denom += g[p];
  }
  if (!(denom > 0.0)) {
    throw std::invalid_argument("shift_vector: kernel weights sum to zero");
  }
  Eigen::VectorXd delta = Eigen::VectorXd::Zero(a.size());
  for (std::size_t p = 0; p < n; ++p) delta += (g[p] / denom) * offsets[p];
  return delta;
}

void MeanShiftConfig::validate() const {
  kernel().validate();
  if (samples < 1) throw std::invalid_argument("mean shift needs samples >= 1");
  if (max_iterations < 1) {
    throw std::invalid_argument("mean shift needs max_iterations >= 1");
  }
  if (!(radius >= 0.0) || !std::isfinite(radius)) {
    throw std::invalid_argument("sampling radius must be >= 0");
  }
  if (!(tol > 0.0)) throw std::invalid_argument("tol must be positive");
}

MeanShiftResult ms_iterate(const Eigen::VectorXd& start, const Sampler& sampler,
                           const MeanShiftConfig& cfg) {
  cfg.validate();
  const KernelConfig kernel = cfg.kernel();
  MeanShiftResult r;
  r.point = start;
  r.trajectory.push_back(start);
  for (std::size_t t = 0; t < cfg.max_iterations; ++t) {
    const SampleSet samples = sampler(r.point);
    const Eigen::VectorXd delta = shift_vector(r.point, samples, kernel);
    r.point += delta;
    r.trajectory.push_back(r.point);
    ++r.iterations;
    if (delta.squaredNorm() < cfg.tol) break;
  }
  return r;
}

std::vector<Eigen::VectorXd> sample_around(const Eigen::VectorXd& center,
                                           double radius, std::size_t count,
                                           std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto d = static_cast<double>(center.size());
  std::vector<Eigen::VectorXd> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Eigen::VectorXd dir(center.size());
    double norm = 0.0;
    while (norm == 0.0) {
      for (Eigen::Index k = 0; k < dir.size(); ++k) dir[k] = gauss(rng);
      norm = dir.norm();
    }
    const double r = radius * std::pow(unit(rng), 1.0 / d);
    out.push_back(center + (r / norm) * dir);
  }
  return out;
}

std::vector<double> loss_weights(std::span<const double> losses) {
  if (losses.empty()) throw std::invalid_argument("loss_weights: no losses");
  double total = 0.0;
  for (double l : losses) {
    if (!std::isfinite(l)) throw std::invalid_argument("loss_weights: non-finite loss");
    if (l < 0.0) throw std::invalid_argument("loss_weights: negative loss");
    total += l;
  }
  std::vector<double> w(losses.size());
  if (total < 1e-12) {
    std::fill(w.begin(), w.end(), 1.0 / static_cast<double>(losses.size()));
    return w;
  }
  for (std::size_t i = 0; i < losses.size(); ++i) w[i] = losses[i] / total;
  return w;
}

}  // namespace msdarts
