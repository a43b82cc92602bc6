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

// First-order bilevel search drivers.
//
// Every method runs the same epoch skeleton:
//   1. one architecture step per validation batch, at the current weights;
//   2. a method-specific choice of the logits the weights train against
//      (DARTS: the current logits; worst case: the loss-maximizing sampled
//      perturbation, chosen per training batch; MS-DARTS: the mean-shift
//      point of the current logits);
//   3. one SGD step per training batch.
// With StepOrder::kWeightsFirst phases 2-3 run before phase 1.

#ifndef MSDARTS_SEARCH_HPP_
#define MSDARTS_SEARCH_HPP_

#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "msdarts/data.hpp"
#include "msdarts/meanshift.hpp"
#include "msdarts/stability.hpp"
#include "msdarts/supernet.hpp"

namespace msdarts {

enum class Method { kDarts, kWorstCase, kMsDarts };
Method parse_method(const std::string& name);
std::string method_name(Method m);

enum class StepOrder { kArchFirst, kWeightsFirst };
StepOrder parse_step_order(const std::string& name);
std::string step_order_name(StepOrder o);

struct SearchConfig {
  Method method = Method::kDarts;
  std::size_t epochs = 40;
  std::size_t batch_size = 64;
  double lr_max = 0.025;
  double lr_min = 1e-3;
  double arch_lr = 3e-4;
  double weight_decay = 3e-4;
  double momentum = 0.9;
  double arch_init_scale = 1e-3;
  StepOrder order = StepOrder::kArchFirst;
  // Passes over the validation batches per architecture phase.
  std::size_t arch_passes = 1;
  std::uint64_t seed = 0;
  SupernetConfig net;
  // Bandwidth, samples, iterations and radius for MS-DARTS; the worst-case
  // baseline reuses `radius` and `samples` as its candidate ball and count.
  MeanShiftConfig ms;

  void validate() const;
  friend bool operator==(const SearchConfig&, const SearchConfig&) = default;
};

// Cosine annealing: lr(0) = lr_max, lr(epochs - 1) = lr_min.
double cosine_lr(const SearchConfig& cfg, std::size_t epoch);

struct OptimState {
  Weights weights;
  ArchParams arch;
  std::vector<Tensor> momentum;  // one buffer per weight tensor
  double lr = 0.0;
  std::size_t epoch = 0;
};

OptimState init_state(const Supernet& net, const SearchConfig& cfg,
                      std::mt19937_64& rng);

// Thrown for non-finite losses; carries the 1-based epoch and which loss failed.
class NumericError : public std::runtime_error {
 public:
  NumericError(std::size_t epoch, const std::string& what_loss);
  std::size_t epoch() const { return epoch_; }

 private:
  std::size_t epoch_;
};

// A <- A - arch_lr * grad_A L(batch). Returns the loss before the step.
double arch_step(const Supernet& net, OptimState& state, const Batch& valid,
                 const SearchConfig& cfg);
// SGD with momentum and weight decay on W, with the loss taken at `logits`.
double weight_step(const Supernet& net, OptimState& state,
                   const Eigen::VectorXd& logits, const Batch& train,
                   const SearchConfig& cfg);

// One architecture step on `valid`, then one weight step on `train`.
void darts_step(const Supernet& net, OptimState& state, const Batch& train,
                const Batch& valid, const SearchConfig& cfg);

struct WorstCaseChoice {
  Eigen::VectorXd delta;
  double loss = 0.0;
  // Candidate 0 is the unperturbed point.
  std::vector<Eigen::VectorXd> candidates;
  std::vector<double> candidate_losses;
};

// Picks the perturbation maximizing L_train over {0} plus `candidates`
// random points of the radius ball (ties keep the earliest candidate).
WorstCaseChoice worst_perturbation(const Supernet& net, const OptimState& state,
                                   const Batch& train, double radius,
                                   std::size_t candidates,
                                   std::mt19937_64& rng);

// darts_step with the weight step taken at the worst sampled perturbation.
WorstCaseChoice worstcase_step(const Supernet& net, OptimState& state,
                               const Batch& train, const Batch& valid,
                               const SearchConfig& cfg, double radius,
                               std::mt19937_64& rng);

struct EpochOutcome {
  // Logits the weight phase trained against.
  Eigen::VectorXd weight_logits;
  std::size_t ms_iterations = 0;
};

// Sampler drawing cfg.samples points around the anchor and weighting them by
// their loss on `valid_all`.
Sampler loss_weighted_sampler(const Supernet& net, const ArchParams& arch,
                              const Weights& weights, const Batch& valid_all,
                              const MeanShiftConfig& cfg, std::mt19937_64& rng);

// One epoch of the shared skeleton for cfg.method. `valid_all` is the full
// validation split, used to weight mean-shift samples.
EpochOutcome run_epoch(const Supernet& net, OptimState& state,
                       const std::vector<Batch>& train_batches,
                       const std::vector<Batch>& valid_batches,
                       const Batch& valid_all, const SearchConfig& cfg,
                       std::mt19937_64& perturb_rng);

// MS-DARTS epoch: A* from the validation loss, mean shift from A*, weights
// from the training loss at the mean-shift point, commit A*.
EpochOutcome msdarts_epoch(const Supernet& net, OptimState& state,
                           const std::vector<Batch>& train_batches,
                           const std::vector<Batch>& valid_batches,
                           const Batch& valid_all, const SearchConfig& cfg,
                           std::mt19937_64& perturb_rng);

struct Diagnostics {
  bool eigen = true;
  bool gap = true;
  bool alpha_probe = true;
  std::size_t eig_iterations = 30;
  double eig_tol = 1e-3;
  double probe_radius = 0.05;
  std::size_t probe_directions = 64;
  std::uint64_t probe_seed = 1234;
  // Off by default so that traces are byte-reproducible.
  bool wall_clock = false;
  friend bool operator==(const Diagnostics&, const Diagnostics&) = default;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double valid_loss = 0.0;
  double lambda_max = 0.0;  // NaN when eigen diagnostics are off
  double eig_residual = 0.0;
  GapRecord gap;  // NaN gap when gap diagnostics are off
  std::size_t ms_iterations = 0;
  double wall_ms = 0.0;
};

struct RunTrace {
  std::vector<EpochRecord> rows;
  DiscreteArch final_arch;
  ArchParams final_alpha;
};

struct SearchResult {
  ArchParams arch;
  Weights weights;
  RunTrace trace;
  // Logits after each epoch, for alpha-distance curves.
  std::vector<Eigen::VectorXd> alpha_history;
};

using EpochObserver = std::function<void(const EpochRecord&)>;

SupernetConfig network_for(const SearchConfig& cfg, const Dataset& dataset);

// Runs cfg.epochs epochs. `observer` sees each row as soon as it is complete,
// so a caller can persist a partial trace before an error propagates.
SearchResult run_search(const SearchConfig& cfg, const Dataset& dataset,
                        const Diagnostics& diag = {},
                        const EpochObserver& observer = {});

// The fixed validation batch used for per-epoch curvature estimates: the
// first batch_size validation rows in split order.
Batch eigen_batch(const Dataset& dataset, std::size_t batch_size);

}  // namespace msdarts

#endif  // MSDARTS_SEARCH_HPP_
