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

// Closed-form bench for kernel-smoothed loss surfaces and the bandwidth
// sweep over full searches.
//
// The Hessian and eigenvalue formulas are exact for the variance-convention
// kernel K_h(x) = exp(-|x|^2 / (2h)):
//   hess K_h(x) = (1/h) ((1/h) x x^T - I) K_h(x)
// with eigenvalue (|x|^2/h^2 - 1/h) K_h(x) along x and -(1/h) K_h(x) on the
// orthogonal complement.

#ifndef MSDARTS_LANDSCAPE_HPP_
#define MSDARTS_LANDSCAPE_HPP_

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "msdarts/data.hpp"
#include "msdarts/meanshift.hpp"
#include "msdarts/search.hpp"

namespace msdarts {

enum class KernelNormalization {
  kNone,
  // (2 pi h)^(-2d), the constant printed alongside the bandwidth kernel.
  kAsWritten,
};

struct KdeLandscape {
  std::vector<Eigen::VectorXd> anchors;
  KernelConfig kernel;
  KernelNormalization normalization = KernelNormalization::kAsWritten;

  void validate() const;
  double constant() const;
};

// (1/N) sum_p c K_h(a - a_p).
double landscape_loss(const Eigen::VectorXd& a, const KdeLandscape& land);
Eigen::VectorXd landscape_gradient(const Eigen::VectorXd& a,
                                   const KdeLandscape& land);
// Sum of per-anchor analytic Hessian terms divided by N (times c).
Eigen::MatrixXd landscape_hessian(const Eigen::VectorXd& a,
                                  const KdeLandscape& land);

// Throws std::invalid_argument unless cfg uses the variance convention.
Eigen::MatrixXd analytic_hessian_term(const Eigen::VectorXd& offset,
                                      const KernelConfig& cfg);

struct AnalyticEigenvalues {
  double radial = 0.0;   // along the offset
  double tangent = 0.0;  // orthogonal to the offset
  std::size_t radial_multiplicity = 1;
  std::size_t tangent_multiplicity = 0;
  // Largest-magnitude eigenvalue: tangent when |x|^2 < 2h, radial otherwise.
  double dominant = 0.0;
};

AnalyticEigenvalues analytic_eigenvalues(const Eigen::VectorXd& offset,
                                         const KernelConfig& cfg);

struct SweepRow {
  std::uint64_t seed = 0;
  double h = 0.0;
  std::size_t window_start = 0;  // 1-based, inclusive
  std::size_t window_end = 0;
  double eig_mean = 0.0;
  double eig_std = 0.0;
  double final_valid_error = 0.0;
};

struct SweepOptions {
  std::vector<double> bandwidths;
  std::vector<std::uint64_t> seeds;
  std::size_t window = 20;
};

// Windowed mean/std (population) of the per-epoch lambda_max column.
std::vector<SweepRow> window_rows(const RunTrace& trace, std::uint64_t seed,
                                  double h, std::size_t window);

// Runs MS-DARTS once per (seed, h) with everything but the bandwidth fixed.
// Rows are ordered by seed, then h, then window. final_valid_error is the
// discretized architecture's validation error at the last epoch.
std::vector<SweepRow> bandwidth_sweep(const SearchConfig& base,
                                      const Dataset& dataset,
                                      const Diagnostics& diag,
                                      const SweepOptions& options);

// Pools rows of equal (h, window) across seeds: eig_mean/eig_std over the
// per-seed means, final_valid_error averaged. seed is set to 0.
std::vector<SweepRow> aggregate_over_seeds(const std::vector<SweepRow>& rows);

}  // namespace msdarts

#endif  // MSDARTS_LANDSCAPE_HPP_
