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

#include "msdarts/landscape.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <stdexcept>

namespace msdarts {
namespace {

void require_variance(const KernelConfig& cfg) {
  cfg.validate();
  if (cfg.convention != KernelConvention::kVariance) {
    throw std::invalid_argument(
        "closed-form Hessian holds for the variance kernel only; set "
        "meanshift.kernel = variance");
  }
}

}  // namespace

void KdeLandscape::validate() const {
  if (anchors.empty()) throw std::invalid_argument("landscape needs >= 1 anchor");
  kernel.validate();
}

double KdeLandscape::constant() const {
  if (normalization == KernelNormalization::kNone) return 1.0;
  const auto d = static_cast<double>(anchors.front().size());
  return std::pow(2.0 * std::numbers::pi * kernel.bandwidth, -2.0 * d);
}

double landscape_loss(const Eigen::VectorXd& a, const KdeLandscape& land) {
  land.validate();
  double total = 0.0;
  for (const auto& p : land.anchors) total += kernel_value(a - p, land.kernel);
  return land.constant() * total / static_cast<double>(land.anchors.size());
}

Eigen::VectorXd landscape_gradient(const Eigen::VectorXd& a,
                                   const KdeLandscape& land) {
  land.validate();
  const double h = land.kernel.bandwidth;
  const double inv_sq =
      land.kernel.convention == KernelConvention::kVariance ? 1.0 / h : 1.0 / (h * h);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(a.size());
  for (const auto& p : land.anchors) {
    const Eigen::VectorXd off = a - p;
    g -= inv_sq * kernel_value(off, land.kernel) * off;
  }
  return land.constant() * g / static_cast<double>(land.anchors.size());
}

Eigen::MatrixXd landscape_hessian(const Eigen::VectorXd& a,
                                  const KdeLandscape& land) {
  land.validate();
  Eigen::MatrixXd hsum = Eigen::MatrixXd::Zero(a.size(), a.size());
  for (const auto& p : land.anchors) hsum += analytic_hessian_term(a - p, land.kernel);
  return land.constant() * hsum / static_cast<double>(land.anchors.size());
}

Eigen::MatrixXd analytic_hessian_term(const Eigen::VectorXd& offset,
                                      const KernelConfig& cfg) {
  require_variance(cfg);
  const double h = cfg.bandwidth;
  const double k = kernel_value(offset, cfg);
  const auto d = offset.size();
  Eigen::MatrixXd m = (offset * offset.transpose()) / h;
  m -= Eigen::MatrixXd::Identity(d, d);
  return (k / h) * m;
}

AnalyticEigenvalues analytic_eigenvalues(const Eigen::VectorXd& offset,
                                         const KernelConfig& cfg) {
  require_variance(cfg);
  const double h = cfg.bandwidth;
  const double k = kernel_value(offset, cfg);
  const double sq = offset.squaredNorm();
  AnalyticEigenvalues ev;
  ev.radial = (sq / (h * h) - 1.0 / h) * k;
  ev.tangent = -k / h;
  ev.radial_multiplicity = 1;
  ev.tangent_multiplicity = static_cast<std::size_t>(offset.size()) - 1;
  if (ev.tangent_multiplicity == 0) {
    ev.dominant = ev.radial;
  } else {
    ev.dominant = sq < 2.0 * h ? ev.tangent : ev.radial;
  }
  return ev;
}

std::vector<SweepRow> window_rows(const RunTrace& trace, std::uint64_t seed,
                                  double h, std::size_t window) {
  if (window == 0) throw std::invalid_argument("window must be positive");
  std::vector<SweepRow> rows;
  const auto& epochs = trace.rows;
  const double final_error =
      epochs.empty() ? 0.0 : 1.0 - epochs.back().gap.discrete_valid_acc;
  for (std::size_t start = 0; start < epochs.size(); start += window) {
    const std::size_t end = std::min(epochs.size(), start + window);
    double mean = 0.0;
    for (std::size_t i = start; i < end; ++i) mean += epochs[i].lambda_max;
    mean /= static_cast<double>(end - start);
    double var = 0.0;
    for (std::size_t i = start; i < end; ++i) {
      const double d = epochs[i].lambda_max - mean;
      var += d * d;
    }
    var /= static_cast<double>(end - start);
    rows.push_back({seed, h, epochs[start].epoch, epochs[end - 1].epoch, mean,
                    std::sqrt(var), final_error});
  }
  return rows;
}

std::vector<SweepRow> bandwidth_sweep(const SearchConfig& base,
                                      const Dataset& dataset,
                                      const Diagnostics& diag,
                                      const SweepOptions& options) {
  if (options.bandwidths.size() < 2) {
    throw std::invalid_argument("bandwidth sweep needs at least two h values");
  }
  if (options.seeds.empty()) throw std::invalid_argument("bandwidth sweep needs a seed");
  Diagnostics d = diag;
  d.eigen = true;
  d.gap = true;
  std::vector<SweepRow> rows;
  for (std::uint64_t seed : options.seeds) {
    for (double h : options.bandwidths) {
      SearchConfig cfg = base;
      cfg.method = Method::kMsDarts;
      cfg.seed = seed;
      cfg.ms.bandwidth = h;
      const SearchResult r = run_search(cfg, dataset, d);
      auto w = window_rows(r.trace, seed, h, options.window);
      rows.insert(rows.end(), w.begin(), w.end());
    }
  }
  return rows;
}

std::vector<SweepRow> aggregate_over_seeds(const std::vector<SweepRow>& rows) {
  struct Acc {
    SweepRow first;
    std::vector<double> means;
    double error_sum = 0.0;
  };
  // Keyed by (h, window_start); std::map gives a deterministic order.
  std::map<std::pair<double, std::size_t>, Acc> groups;
  for (const auto& r : rows) {
    auto [it, inserted] = groups.try_emplace({r.h, r.window_start});
    if (inserted) it->second.first = r;
    it->second.means.push_back(r.eig_mean);
    it->second.error_sum += r.final_valid_error;
  }
  std::vector<SweepRow> out;
  for (const auto& [key, acc] : groups) {
    SweepRow row = acc.first;
    row.seed = 0;
    const auto n = static_cast<double>(acc.means.size());
    double mean = 0.0;
    for (double m : acc.means) mean += m;
    mean /= n;
    double var = 0.0;
    for (double m : acc.means) var += (m - mean) * (m - mean);
    row.eig_mean = mean;
    row.eig_std = std::sqrt(var / n);
    row.final_valid_error = acc.error_sum / n;
    out.push_back(row);
  }
  return out;
}

}  // namespace msdarts
