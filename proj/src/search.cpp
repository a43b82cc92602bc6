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

#include "msdarts/search.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>

namespace msdarts {

Method parse_method(const std::string& name) {
  if (name == "darts") return Method::kDarts;
  if (name == "worstcase") return Method::kWorstCase;
  if (name == "msdarts") return Method::kMsDarts;
  throw std::invalid_argument("unknown method '" + name +
                              "' (expected darts, worstcase, msdarts)");
}

std::string method_name(Method m) {
  switch (m) {
    case Method::kDarts:
      return "darts";
    case Method::kWorstCase:
      return "worstcase";
    case Method::kMsDarts:
      return "msdarts";
  }
  return "unknown";
}

StepOrder parse_step_order(const std::string& name) {
  if (name == "arch_first") return StepOrder::kArchFirst;
  if (name == "weights_first") return StepOrder::kWeightsFirst;
  throw std::invalid_argument("unknown step order '" + name +
                              "' (expected arch_first, weights_first)");
}

std::string step_order_name(StepOrder o) {
  return o == StepOrder::kArchFirst ? "arch_first" : "weights_first";
}

void SearchConfig::validate() const {
  if (batch_size == 0) throw std::invalid_argument("batch_size must be positive");
  if (arch_passes == 0) throw std::invalid_argument("arch_passes must be positive");
  if (!(lr_max >= 0.0) || !(lr_min >= 0.0) || lr_min > lr_max) {
    throw std::invalid_argument("learning rates need 0 <= lr_min <= lr_max");
  }
  if (!(arch_lr >= 0.0)) throw std::invalid_argument("arch_lr must be >= 0");
  if (!(weight_decay >= 0.0)) throw std::invalid_argument("weight_decay must be >= 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) {
    throw std::invalid_argument("momentum must be in [0, 1)");
  }
  ms.validate();
}

double cosine_lr(const SearchConfig& cfg, std::size_t epoch) {
  if (cfg.epochs <= 1) return cfg.lr_max;
  const double progress =
      static_cast<double>(epoch) / static_cast<double>(cfg.epochs - 1);
  return cfg.lr_min + 0.5 * (cfg.lr_max - cfg.lr_min) *
                          (1.0 + std::cos(std::numbers::pi * progress));
}

OptimState init_state(const Supernet& net, const SearchConfig& cfg,
                      std::mt19937_64& rng) {
  OptimState s;
  s.weights = net.init_weights(rng);
  s.arch = net.init_arch(rng, cfg.arch_init_scale);
  for (const Tensor& t : s.weights.tensors) s.momentum.emplace_back(t.shape());
  s.lr = cosine_lr(cfg, 0);
  return s;
}

NumericError::NumericError(std::size_t epoch, const std::string& what_loss)
    : std::runtime_error("epoch " + std::to_string(epoch) + ": non-finite " +
                         what_loss),
      epoch_(epoch) {}

double arch_step(const Supernet& net, OptimState& state, const Batch& valid,
                 const SearchConfig& cfg) {
  const LossGrad lg = loss_and_grad(net, state.arch, state.weights, valid, kArch);
  if (!std::isfinite(lg.loss) || !lg.arch_grad.allFinite()) {
    throw NumericError(state.epoch + 1, "validation loss in the architecture step");
  }
  if (cfg.arch_lr != 0.0) state.arch.logits -= cfg.arch_lr * lg.arch_grad;
  return lg.loss;
}

double weight_step(const Supernet& net, OptimState& state,
                   const Eigen::VectorXd& logits, const Batch& train,
                   const SearchConfig& cfg) {
  const LossGrad lg = loss_and_grad(net, state.arch.with_logits(logits),
                                    state.weights, train, kWeights);
  if (!std::isfinite(lg.loss) || !lg.weight_grad.all_finite()) {
    throw NumericError(state.epoch + 1, "training loss in the weight step");
  }
  if (state.lr == 0.0) return lg.loss;
  for (std::size_t i = 0; i < state.weights.tensors.size(); ++i) {
    auto w = state.weights.tensors[i].data();
    auto g = lg.weight_grad.tensors[i].data();
    auto m = state.momentum[i].data();
    for (std::size_t k = 0; k < w.size(); ++k) {
      const double grad = g[k] + cfg.weight_decay * w[k];
      m[k] = cfg.momentum * m[k] + grad;
      w[k] -= state.lr * m[k];
    }
  }
  return lg.loss;
}

void darts_step(const Supernet& net, OptimState& state, const Batch& train,
                const Batch& valid, const SearchConfig& cfg) {
  arch_step(net, state, valid, cfg);
  weight_step(net, state, state.arch.logits, train, cfg);
}

WorstCaseChoice worst_perturbation(const Supernet& net, const OptimState& state,
                                   const Batch& train, double radius,
                                   std::size_t candidates,
                                   std::mt19937_64& rng) {
  const auto d = state.arch.logits.size();
  WorstCaseChoice c;
  c.candidates.push_back(Eigen::VectorXd::Zero(d));
  if (candidates > 0) {
    auto drawn = sample_around(Eigen::VectorXd::Zero(d), radius, candidates, rng);
    c.candidates.insert(c.candidates.end(), drawn.begin(), drawn.end());
  }
  std::size_t best = 0;
  for (std::size_t i = 0; i < c.candidates.size(); ++i) {
    const double l = loss(net, state.arch.with_logits(state.arch.logits + c.candidates[i]),
                          state.weights, train);
    if (!std::isfinite(l)) {
      throw NumericError(state.epoch + 1, "training loss at a perturbation candidate");
    }
    c.candidate_losses.push_back(l);
    if (l > c.candidate_losses[best]) best = i;
  }
  c.delta = c.candidates[best];
  c.loss = c.candidate_losses[best];
  return c;
}

WorstCaseChoice worstcase_step(const Supernet& net, OptimState& state,
                               const Batch& train, const Batch& valid,
                               const SearchConfig& cfg, double radius,
                               std::mt19937_64& rng) {
  arch_step(net, state, valid, cfg);
  WorstCaseChoice c =
      worst_perturbation(net, state, train, radius, cfg.ms.samples, rng);
  weight_step(net, state, state.arch.logits + c.delta, train, cfg);
  return c;
}

Sampler loss_weighted_sampler(const Supernet& net, const ArchParams& arch,
                              const Weights& weights, const Batch& valid_all,
                              const MeanShiftConfig& cfg, std::mt19937_64& rng) {
  return [&net, arch, &weights, &valid_all, cfg, &rng](const Eigen::VectorXd& anchor) {
    SampleSet s;
    s.points = sample_around(anchor, cfg.radius, cfg.samples, rng);
    std::vector<double> losses;
    losses.reserve(s.points.size());
    for (const auto& p : s.points) {
      losses.push_back(loss(net, arch.with_logits(p), weights, valid_all));
    }
    s.weights = loss_weights(losses);
    return s;
  };
}

namespace {

void arch_phase(const Supernet& net, OptimState& state,
                const std::vector<Batch>& valid_batches, const SearchConfig& cfg) {
  for (std::size_t pass = 0; pass < cfg.arch_passes; ++pass) {
    for (const Batch& b : valid_batches) arch_step(net, state, b, cfg);
  }
}

// Returns the logits the weight phase used (for worst case, the last batch's).
Eigen::VectorXd weight_phase(const Supernet& net, OptimState& state,
                             const std::vector<Batch>& train_batches,
                             const Batch& valid_all, const SearchConfig& cfg,
                             std::mt19937_64& perturb_rng,
                             std::size_t& ms_iterations) {
  switch (cfg.method) {
    case Method::kDarts: {
      const Eigen::VectorXd at = state.arch.logits;
      for (const Batch& b : train_batches) weight_step(net, state, at, b, cfg);
      return at;
    }
    case Method::kWorstCase: {
      Eigen::VectorXd at = state.arch.logits;
      for (const Batch& b : train_batches) {
        const WorstCaseChoice c = worst_perturbation(
            net, state, b, cfg.ms.radius, cfg.ms.samples, perturb_rng);
        at = state.arch.logits + c.delta;
        weight_step(net, state, at, b, cfg);
      }
      return at;
    }
    case Method::kMsDarts: {
      const Sampler sampler = loss_weighted_sampler(
          net, state.arch, state.weights, valid_all, cfg.ms, perturb_rng);
      MeanShiftResult r = ms_iterate(state.arch.logits, sampler, cfg.ms);
      if (!r.point.allFinite()) {
        throw NumericError(state.epoch + 1, "mean-shift point");
      }
      ms_iterations = r.iterations;
      for (const Batch& b : train_batches) weight_step(net, state, r.point, b, cfg);
      return r.point;
    }
  }
  throw std::logic_error("unhandled method");
}

}  // namespace

EpochOutcome run_epoch(const Supernet& net, OptimState& state,
                       const std::vector<Batch>& train_batches,
                       const std::vector<Batch>& valid_batches,
                       const Batch& valid_all, const SearchConfig& cfg,
                       std::mt19937_64& perturb_rng) {
  EpochOutcome out;
  state.lr = cosine_lr(cfg, state.epoch);
  if (cfg.order == StepOrder::kArchFirst) {
    arch_phase(net, state, valid_batches, cfg);
    out.weight_logits = weight_phase(net, state, train_batches, valid_all, cfg,
                                     perturb_rng, out.ms_iterations);
  } else {
    out.weight_logits = weight_phase(net, state, train_batches, valid_all, cfg,
                                     perturb_rng, out.ms_iterations);
    arch_phase(net, state, valid_batches, cfg);
  }
  ++state.epoch;
  return out;
}

EpochOutcome msdarts_epoch(const Supernet& net, OptimState& state,
                           const std::vector<Batch>& train_batches,
                           const std::vector<Batch>& valid_batches,
                           const Batch& valid_all, const SearchConfig& cfg,
                           std::mt19937_64& perturb_rng) {
  SearchConfig ms_cfg = cfg;
  ms_cfg.method = Method::kMsDarts;
  return run_epoch(net, state, train_batches, valid_batches, valid_all, ms_cfg,
                   perturb_rng);
}

SupernetConfig network_for(const SearchConfig& cfg, const Dataset& dataset) {
  SupernetConfig net = cfg.net;
  if (dataset.width() != net.width) {
    throw std::invalid_argument("dataset width " + std::to_string(dataset.width()) +
                                " does not match supernet width " +
                                std::to_string(net.width));
  }
  net.classes = dataset.num_classes;
  return net;
}

Batch eigen_batch(const Dataset& dataset, std::size_t batch_size) {
  const std::size_t n = std::min(batch_size, dataset.valid.size());
  return gather(dataset, std::vector<std::size_t>(dataset.valid.begin(),
                                                  dataset.valid.begin() + n));
}

SearchResult run_search(const SearchConfig& cfg, const Dataset& dataset,
                        const Diagnostics& diag, const EpochObserver& observer) {
  cfg.validate();
  if (dataset.train.empty() || dataset.valid.empty()) {
    throw std::invalid_argument("run_search needs a split dataset");
  }
  const Supernet net(network_for(cfg, dataset));

  // Independent streams derived from the single run seed, so that methods
  // which consume perturbation randomness still shuffle identically.
  std::mt19937_64 master(cfg.seed);
  std::mt19937_64 init_rng(master());
  std::mt19937_64 shuffle_rng(master());
  std::mt19937_64 perturb_rng(master());
  const std::uint64_t eigen_seed = master();

  OptimState state = init_state(net, cfg, init_rng);
  const Batch train_all = gather(dataset, dataset.train);
  const Batch valid_all = gather(dataset, dataset.valid);
  const Batch eig_batch = eigen_batch(dataset, cfg.batch_size);

  SearchResult result;
  for (std::size_t e = 0; e < cfg.epochs; ++e) {
    const auto started = std::chrono::steady_clock::now();
    const auto train_batches =
        shuffled_batches(dataset, dataset.train, cfg.batch_size, shuffle_rng);
    const auto valid_batches =
        shuffled_batches(dataset, dataset.valid, cfg.batch_size, shuffle_rng);
    const EpochOutcome outcome = run_epoch(net, state, train_batches,
                                           valid_batches, valid_all, cfg,
                                           perturb_rng);

    EpochRecord row;
    row.epoch = e + 1;
    row.train_loss = loss(net, state.arch, state.weights, train_all);
    row.valid_loss = loss(net, state.arch, state.weights, valid_all);
    if (!std::isfinite(row.train_loss)) throw NumericError(row.epoch, "training loss");
    if (!std::isfinite(row.valid_loss)) throw NumericError(row.epoch, "validation loss");
    row.lambda_max = std::numeric_limits<double>::quiet_NaN();
    row.eig_residual = std::numeric_limits<double>::quiet_NaN();
    if (diag.eigen) {
      PowerIterationConfig pic;
      pic.iterations = diag.eig_iterations;
      pic.tol = diag.eig_tol;
      pic.seed = eigen_seed;
      EigenEstimate est;
      try {
        est = supernet_lambda_max(net, state.arch, state.weights, eig_batch, pic);
      } catch (const std::runtime_error&) {
        throw NumericError(row.epoch, "curvature estimate");
      }
      row.lambda_max = est.lambda;
      row.eig_residual = est.residual;
    }
    row.gap.epoch = row.epoch;
    if (diag.gap) {
      row.gap = discretization_gap(net, state.arch, state.weights, valid_all);
      row.gap.epoch = row.epoch;
    } else {
      row.gap.gap = std::numeric_limits<double>::quiet_NaN();
    }
    row.ms_iterations = outcome.ms_iterations;
    if (diag.wall_clock) {
      row.wall_ms = std::chrono::duration<double, std::milli>(
                        std::chrono::steady_clock::now() - started)
                        .count();
    }
    result.trace.rows.push_back(row);
    result.alpha_history.push_back(state.arch.logits);
    if (observer) observer(row);
  }
  result.arch = state.arch;
  result.weights = state.weights;
  result.trace.final_arch = discretize(state.arch);
  result.trace.final_alpha = state.arch;
  return result;
}

}  // namespace msdarts
