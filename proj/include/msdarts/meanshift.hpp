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

// Weighted Gaussian mean shift over architecture-logit space.
//
// Kernels are unnormalized: every quantity computed here is either a ratio in
// which the constant cancels or only compared against itself.

#ifndef MSDARTS_MEANSHIFT_HPP_
#define MSDARTS_MEANSHIFT_HPP_

#include <cstddef>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace msdarts {

enum class KernelConvention {
  kVariance,  // exp(-|x|^2 / (2h))
  kScale,     // exp(-|x / h|^2 / 2)
};

KernelConvention parse_kernel_convention(const std::string& name);
std::string kernel_convention_name(KernelConvention c);

struct KernelConfig {
  double bandwidth = 1.0;
  KernelConvention convention = KernelConvention::kVariance;

  void validate() const;
  // Exponent q such that the kernel is exp(-q).
  double exponent(double squared_norm) const;
};

double kernel_value(const Eigen::VectorXd& offset, const KernelConfig& cfg);

struct SampleSet {
  std::vector<Eigen::VectorXd> points;
  std::vector<double> weights;

  std::size_t size() const { return points.size(); }
};

// sum_p w_p K(a - a_p).
double weighted_kde(const Eigen::VectorXd& a, const SampleSet& samples,
                    const KernelConfig& cfg);

// Weighted mean-shift vector: the kernel-weighted sample mean minus `a`.
// Computed as sum_p v_p (a_p - a) with normalized kernel weights v_p, which
// equals the ratio form exactly for a single sample.
Eigen::VectorXd shift_vector(const Eigen::VectorXd& a, const SampleSet& samples,
                             const KernelConfig& cfg);

struct MeanShiftConfig {
  double bandwidth = 1.0;
  std::size_t samples = 3;
  std::size_t max_iterations = 2;
  // Zero collapses the sampling ball onto the anchor.
  double radius = 0.03;
  double tol = 1e-6;
  KernelConvention convention = KernelConvention::kVariance;

  void validate() const;
  KernelConfig kernel() const { return {bandwidth, convention}; }
  friend bool operator==(const MeanShiftConfig&, const MeanShiftConfig&) = default;
};

using Sampler = std::function<SampleSet(const Eigen::VectorXd& anchor)>;

struct MeanShiftResult {
  Eigen::VectorXd point;
  std::size_t iterations = 0;
  std::vector<Eigen::VectorXd> trajectory;  // starts at the initial point
};

// Repeats {sample around a_t, a_{t+1} = a_t + shift} until max_iterations
// steps or until |a_{t+1} - a_t|^2 < tol.
MeanShiftResult ms_iterate(const Eigen::VectorXd& start, const Sampler& sampler,
                           const MeanShiftConfig& cfg);

// Uniform in the Euclidean ball: uniform direction, radius eps * u^(1/d).
std::vector<Eigen::VectorXd> sample_around(const Eigen::VectorXd& center,
                                           double radius, std::size_t count,
                                           std::mt19937_64& rng);

// w_p = L_p / sum L; uniform when the total is below 1e-12.
std::vector<double> loss_weights(std::span<const double> losses);

}  // namespace msdarts

#endif  // MSDARTS_MEANSHIFT_HPP_
