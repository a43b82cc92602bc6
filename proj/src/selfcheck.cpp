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
#include <array>
#include <cmath>
#include <random>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "msdarts/experiment.hpp"

namespace msdarts {
namespace {

double rel_error(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-6});
}

std::string describe(double worst, double tol) {
  std::ostringstream s;
  s << "max error " << worst << " (tol " << tol << ")";
  return s.str();
}

CheckResult supernet_gradients(std::mt19937_64& rng) {
  SupernetConfig nc;
  nc.width = 4;
  nc.cells = 1;
  nc.intermediate_nodes = 2;
  const Supernet net(nc);
  const Weights w0 = net.init_weights(rng);
  const ArchParams arch = net.init_arch(rng, 0.5);
  std::normal_distribution<double> n01;
  Batch b;
  b.x = Tensor({6, nc.width});
  for (double& v : b.x.data()) v = n01(rng);
  for (int i = 0; i < 6; ++i) b.y.push_back(i % 2);

  const LossGrad g = loss_and_grad(net, arch, w0, b, kArch | kWeights);
  const double step = 1e-5;
  double worst = 0.0;
  for (Eigen::Index i = 0; i < arch.logits.size(); ++i) {
    Eigen::VectorXd up = arch.logits, dn = arch.logits;
    up[i] += step;
    dn[i] -= step;
    const double fd = (loss(net, arch.with_logits(up), w0, b) -
                       loss(net, arch.with_logits(dn), w0, b)) / (2 * step);
    worst = std::max(worst, rel_error(g.arch_grad[i], fd));
  }
  std::uniform_int_distribution<std::size_t> pick_t(0, w0.tensors.size() - 1);
  for (int k = 0; k < 40; ++k) {
    const std::size_t t = pick_t(rng);
    std::uniform_int_distribution<std::size_t> pick_e(0, w0.tensors[t].size() - 1);
    const std::size_t e = pick_e(rng);
    Weights up = w0, dn = w0;
    up.tensors[t][e] += step;
    dn.tensors[t][e] -= step;
    const double fd = (loss(net, arch, up, b) - loss(net, arch, dn, b)) / (2 * step);
    worst = std::max(worst, rel_error(g.weight_grad.tensors[t][e], fd));
  }
  return {"supernet gradients", worst < 1e-4, describe(worst, 1e-4)};
}

CheckResult hessian_closed_form(std::mt19937_64& rng) {
  std::normal_distribution<double> n01;
  std::uniform_real_distribution<double> uh(0.2, 2.0);
  double worst_h = 0.0, worst_ev = 0.0;
  for (int c = 0; c < 10; ++c) {
    const Eigen::Index d = 2 + c % 4;
    const KernelConfig k{uh(rng), KernelConvention::kVariance};
    Eigen::VectorXd x(d);
    for (Eigen::Index i = 0; i < d; ++i) x[i] = n01(rng);
    const Eigen::MatrixXd an = analytic_hessian_term(x, k);

    const double s = 1e-4;
    for (Eigen::Index i = 0; i < d; ++i) {
      for (Eigen::Index j = 0; j < d; ++j) {
        Eigen::VectorXd pp = x, pm = x, mp = x, mm = x;
        pp[i] += s; pp[j] += s;
        pm[i] += s; pm[j] -= s;
        mp[i] -= s; mp[j] += s;
        mm[i] -= s; mm[j] -= s;
        const double fd = (kernel_value(pp, k) - kernel_value(pm, k) -
                           kernel_value(mp, k) + kernel_value(mm, k)) / (4 * s * s);
        worst_h = std::max(worst_h, std::abs(an(i, j) - fd));
      }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(an);
    const AnalyticEigenvalues ev = analytic_eigenvalues(x, k);
    std::vector<double> expect(static_cast<std::size_t>(d), ev.tangent);
    expect[0] = ev.radial;
    std::sort(expect.begin(), expect.end());
    for (Eigen::Index i = 0; i < d; ++i) {
      worst_ev = std::max(worst_ev,
                          std::abs(es.eigenvalues()[i] - expect[static_cast<std::size_t>(i)]));
    }
  }
  const bool ok = worst_h < 1e-6 && worst_ev < 1e-8;
  std::ostringstream s;
  s << "hessian " << describe(worst_h, 1e-6) << ", eigenvalues "
    << describe(worst_ev, 1e-8);
  return {"closed-form kernel hessian", ok, s.str()};
}

CheckResult meanshift_monotone(std::mt19937_64& rng) {
  std::normal_distribution<double> n01;
  std::uniform_real_distribution<double> u01(0.05, 1.0);
  double worst_drop = 0.0;
  for (int c = 0; c < 20; ++c) {
    const Eigen::Index d = std::array<Eigen::Index, 3>{2, 8, 32}[c % 3];
    const KernelConfig k{0.5 + 2.0 * u01(rng), KernelConvention::kVariance};
    SampleSet set;
    for (int p = 0; p < 5; ++p) {
      Eigen::VectorXd v(d);
      for (Eigen::Index i = 0; i < d; ++i) v[i] = n01(rng);
      set.points.push_back(v);
      set.weights.push_back(u01(rng));
    }
    Eigen::VectorXd a = Eigen::VectorXd::Zero(d);
    for (int it = 0; it < 10; ++it) {
      const double before = weighted_kde(a, set, k);
      a += shift_vector(a, set, k);
      const double after = weighted_kde(a, set, k);
      worst_drop = std::max(worst_drop, (before - after) / before);
    }
  }
  std::ostringstream s;
  s << "largest relative kde decrease " << worst_drop;
  return {"mean-shift monotonicity", worst_drop <= 1e-12, s.str()};
}

}  // namespace

std::vector<CheckResult> run_selfchecks(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<CheckResult> out;
  out.push_back(supernet_gradients(rng));
  out.push_back(hessian_closed_form(rng));
  out.push_back(meanshift_monotone(rng));
  return out;
}

}  // namespace msdarts
