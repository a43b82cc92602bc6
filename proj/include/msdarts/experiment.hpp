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

// Experiment orchestration behind the msdarts subcommands.
//
// Output layout of a single run directory:
//   config.echo         every effective configuration value
//   trace.csv           one row per completed epoch, flushed as it completes
//   arch.json           the discretized architecture
//   alpha.csv           final logits and softmax weights per (edge, op)
//   alpha_distance.csv  |alpha_t - alpha_final| and train loss per epoch
//   probe.csv           train loss along fixed random directions
//   metrics.csv         final lambda_max, gap, discrete accuracy, sharpness

#ifndef MSDARTS_EXPERIMENT_HPP_
#define MSDARTS_EXPERIMENT_HPP_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "msdarts/config.hpp"
#include "msdarts/landscape.hpp"
#include "msdarts/search.hpp"

namespace msdarts {

inline constexpr char kTraceHeader[] =
    "epoch,train_loss,valid_loss,lambda_max,eig_residual,gap,ms_iters,wall_ms";

// Shortest representation that parses back to the same double; "nan"/"inf"
// for non-finite values.
std::string format_number(double v);

std::string trace_row(const EpochRecord& r);
std::string trace_csv(const RunTrace& trace);

// MSDARTS_OUT when set and nonempty, else the spec's output_dir.
std::filesystem::path resolve_output_dir(const ExperimentSpec& spec);

// "0..4" (inclusive range) or "0,3,7".
std::vector<std::uint64_t> parse_seed_list(const std::string& text);
// "0.2,0.6,1.0".
std::vector<double> parse_double_list(const std::string& text);

struct RunSummary {
  bool ok = false;
  std::string error;
  double final_lambda_max = 0.0;
  double final_gap = 0.0;
  double discrete_valid_acc = 0.0;
  double sharpness = 0.0;
  std::size_t epochs_completed = 0;
};

// Mean training-loss increase over the spec's fixed probe directions and
// their negatives at diagnostics.probe_radius around the final logits.
double final_sharpness(const ExperimentSpec& spec, const Dataset& dataset,
                       const SearchResult& result);

// Runs one search and writes the run directory. Never throws for search or
// I/O failures; they are reported through RunSummary::error.
RunSummary execute_run(const ExperimentSpec& spec, const Dataset& dataset,
                       const std::filesystem::path& dir);

struct CompareRow {
  std::string method;
  std::uint64_t seed = 0;
  RunSummary summary;
};

struct CompareAggregate {
  std::string method;
  std::size_t runs = 0;  // successful runs pooled
  double lambda_mean = 0.0, lambda_std = 0.0;
  double gap_mean = 0.0, gap_std = 0.0;
  double acc_mean = 0.0, acc_std = 0.0;
  double sharpness_mean = 0.0, sharpness_std = 0.0;
};

// Population statistics over the successful rows of `method`.
CompareAggregate aggregate_compare(const std::vector<CompareRow>& rows,
                                   const std::string& method);
std::string summary_csv(const std::vector<CompareRow>& rows,
                        const std::vector<CompareAggregate>& aggregates);
std::string sweep_csv(const std::vector<SweepRow>& rows);

// Subcommands. Each returns a process exit code and writes a diagnostic line
// to `err` on failure.
int cmd_run(const ExperimentSpec& spec, std::ostream& out, std::ostream& err);
int cmd_compare(const ExperimentSpec& a, const ExperimentSpec& b,
                const std::vector<std::uint64_t>& seeds, std::ostream& out,
                std::ostream& err);
int cmd_sweep(const ExperimentSpec& spec, const std::vector<double>& bandwidths,
              const std::vector<std::uint64_t>& seeds, std::ostream& out,
              std::ostream& err);

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

// Gradient checks, closed-form Hessian verification and mean-shift
// monotonicity on small random instances.
std::vector<CheckResult> run_selfchecks(std::uint64_t seed = 0);
int cmd_selfcheck(std::ostream& out);

}  // namespace msdarts

#endif  // MSDARTS_EXPERIMENT_HPP_
