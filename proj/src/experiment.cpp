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

#include "msdarts/experiment.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace msdarts {
namespace fs = std::filesystem;
namespace {

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out = open_output(path);
  out << content;
  out.flush();
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t") - b + 1);
}

std::uint64_t parse_u64(const std::string& s) {
  std::uint64_t v = 0;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size()) {
    throw std::invalid_argument("bad seed '" + s + "'");
  }
  return v;
}

std::string alpha_csv(const ArchParams& arch) {
  std::ostringstream out;
  out << "edge,from,to,op,logit,weight\n";
  for (std::size_t e = 0; e < arch.num_edges(); ++e) {
    const Eigen::VectorXd w = arch.edge_weights(e);
    for (std::size_t o = 0; o < arch.num_ops(); ++o) {
      out << e << ',' << arch.edges[e].from << ',' << arch.edges[e].to << ','
          << op_name(arch.ops[o]) << ','
          << format_number(arch.logits[static_cast<Eigen::Index>(arch.position(e, o))])
          << ',' << format_number(w[static_cast<Eigen::Index>(o)]) << '\n';
    }
  }
  return out.str();
}

std::vector<double> probe_radii(double r) {
  return {0.0, 0.25 * r, 0.5 * r, r, 2.0 * r, 4.0 * r};
}

void write_probe_files(const ExperimentSpec& spec, const Dataset& dataset,
                       const SearchResult& result, const fs::path& dir) {
  const Supernet net(network_for(spec.search, dataset));
  const Batch train = gather(dataset, dataset.train);
  const LossFn fn = arch_loss_fn(net, result.arch, result.weights, train);
  const auto dirs = random_unit_directions(result.arch.dim(),
                                           spec.diagnostics.probe_directions,
                                           spec.diagnostics.probe_seed);
  const AlphaDistanceCurve curve =
      alpha_distance_probe(fn, result.arch.logits, dirs,
                           probe_radii(spec.diagnostics.probe_radius),
                           result.alpha_history);
  std::ostringstream dist;
  dist << "epoch,distance,train_loss\n";
  for (const auto& p : curve.history) {
    dist << p.epoch << ',' << format_number(p.distance) << ','
         << format_number(p.loss) << '\n';
  }
  write_file(dir / "alpha_distance.csv", dist.str());
  std::ostringstream probe;
  probe << "direction,radius,train_loss\n";
  for (const auto& p : curve.probes) {
    probe << p.direction << ',' << format_number(p.radius) << ','
          << format_number(p.loss) << '\n';
  }
  write_file(dir / "probe.csv", probe.str());
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? std::numeric_limits<double>::quiet_NaN()
                   : s / static_cast<double>(v.size());
}

double pop_std(const std::vector<double>& v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size()));
}

}  // namespace

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

std::string trace_row(const EpochRecord& r) {
  std::string s = std::to_string(r.epoch);
  for (double v : {r.train_loss, r.valid_loss, r.lambda_max, r.eig_residual, r.gap.gap}) {
    s += ',';
    s += format_number(v);
  }
  s += ',' + std::to_string(r.ms_iterations) + ',' + format_number(r.wall_ms);
  return s;
}

std::string trace_csv(const RunTrace& trace) {
  std::string out = std::string(kTraceHeader) + "\n";
  for (const auto& r : trace.rows) out += trace_row(r) + "\n";
  return out;
}

fs::path resolve_output_dir(const ExperimentSpec& spec) {
  const char* env = std::getenv("MSDARTS_OUT");
  if (env != nullptr && *env != '\0') return fs::path(env);
  return fs::path(spec.output_dir);
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  const std::string t = trim(text);
  std::vector<std::uint64_t> seeds;
  const auto dots = t.find("..");
  if (dots != std::string::npos) {
    const std::uint64_t lo = parse_u64(trim(t.substr(0, dots)));
    const std::uint64_t hi = parse_u64(trim(t.substr(dots + 2)));
    if (hi < lo) throw std::invalid_argument("empty seed range '" + t + "'");
    for (std::uint64_t s = lo; s <= hi; ++s) seeds.push_back(s);
    return seeds;
  }
  std::stringstream ss(t);
  std::string item;
  while (std::getline(ss, item, ',')) seeds.push_back(parse_u64(trim(item)));
  if (seeds.empty()) throw std::invalid_argument("no seeds given");
  return seeds;
}

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const std::string v = trim(item);
    double d = 0.0;
    auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), d);
    if (v.empty() || ec != std::errc() || end != v.data() + v.size()) {
      throw std::invalid_argument("bad number '" + v + "'");
    }
    out.push_back(d);
  }
  if (out.empty()) throw std::invalid_argument("empty list");
  return out;
}

double final_sharpness(const ExperimentSpec& spec, const Dataset& dataset,
                       const SearchResult& result) {
  const Supernet net(network_for(spec.search, dataset));
  const Batch train = gather(dataset, dataset.train);
  const LossFn fn = arch_loss_fn(net, result.arch, result.weights, train);
  // Antipodal pairs cancel the first-order term, which otherwise swamps the
  // curvature signal at small radii.
  const auto dirs = with_antipodes(random_unit_directions(
      result.arch.dim(), spec.diagnostics.probe_directions, spec.diagnostics.probe_seed));
  return sharpness_score(fn, result.arch.logits, dirs,
                         spec.diagnostics.probe_radius);
}

RunSummary execute_run(const ExperimentSpec& spec, const Dataset& dataset,
                       const fs::path& dir) {
  RunSummary summary;
  try {
    fs::create_directories(dir);
    write_file(dir / "config.echo", serialize(spec));
    std::ofstream trace = open_output(dir / "trace.csv");
    trace << kTraceHeader << '\n';
    trace.flush();
    const auto observer = [&](const EpochRecord& r) {
      trace << trace_row(r) << '\n';
      trace.flush();
      ++summary.epochs_completed;
    };
    const SearchResult result =
        run_search(spec.search, dataset, spec.diagnostics, observer);
    if (!trace) throw std::runtime_error("write failed: " + (dir / "trace.csv").string());
    write_file(dir / "arch.json", to_json(result.trace.final_arch));
    write_file(dir / "alpha.csv", alpha_csv(result.arch));
    if (spec.diagnostics.alpha_probe) write_probe_files(spec, dataset, result, dir);

    const EpochRecord& last = result.trace.rows.back();
    summary.final_lambda_max = last.lambda_max;
    summary.final_gap = last.gap.gap;
    summary.discrete_valid_acc = last.gap.discrete_valid_acc;
    summary.sharpness = final_sharpness(spec, dataset, result);
    std::ostringstream metrics;
    metrics << "final_lambda_max,final_gap,discrete_valid_acc,sharpness\n"
            << format_number(summary.final_lambda_max) << ','
            << format_number(summary.final_gap) << ','
            << format_number(summary.discrete_valid_acc) << ','
            << format_number(summary.sharpness) << '\n';
    write_file(dir / "metrics.csv", metrics.str());
    summary.ok = true;
  } catch (const NumericError& e) {
    summary.error = e.what();
  } catch (const std::exception& e) {
    summary.error = e.what();
  }
  return summary;
}

CompareAggregate aggregate_compare(const std::vector<CompareRow>& rows,
                                   const std::string& method) {
  std::vector<double> lam, gap, acc, sharp;
  for (const auto& r : rows) {
    if (r.method != method || !r.summary.ok) continue;
    lam.push_back(r.summary.final_lambda_max);
    gap.push_back(r.summary.final_gap);
    acc.push_back(r.summary.discrete_valid_acc);
    sharp.push_back(r.summary.sharpness);
  }
  CompareAggregate a;
  a.method = method;
  a.runs = lam.size();
  a.lambda_mean = mean_of(lam);
  a.lambda_std = pop_std(lam);
  a.gap_mean = mean_of(gap);
  a.gap_std = pop_std(gap);
  a.acc_mean = mean_of(acc);
  a.acc_std = pop_std(acc);
  a.sharpness_mean = mean_of(sharp);
  a.sharpness_std = pop_std(sharp);
  return a;
}

std::string summary_csv(const std::vector<CompareRow>& rows,
                        const std::vector<CompareAggregate>& aggregates) {
  std::ostringstream out;
  out << "method,seed,status,final_lambda_max,final_gap,discrete_valid_acc,"
         "sharpness,final_lambda_max_std,final_gap_std,discrete_valid_acc_std,"
         "sharpness_std\n";
  for (const auto& r : rows) {
    out << r.method << ',' << r.seed << ',';
    if (r.summary.ok) {
      out << "ok," << format_number(r.summary.final_lambda_max) << ','
          << format_number(r.summary.final_gap) << ','
          << format_number(r.summary.discrete_valid_acc) << ','
          << format_number(r.summary.sharpness) << ",,,,\n";
    } else {
      out << "failed,,,,,,,,\n";
    }
  }
  for (const auto& a : aggregates) {
    out << a.method << ",all,mean," << format_number(a.lambda_mean) << ','
        << format_number(a.gap_mean) << ',' << format_number(a.acc_mean) << ','
        << format_number(a.sharpness_mean) << ',' << format_number(a.lambda_std)
        << ',' << format_number(a.gap_std) << ',' << format_number(a.acc_std)
        << ',' << format_number(a.sharpness_std) << '\n';
  }
  return out.str();
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream out;
  out << "h,window_start,window_end,eig_mean,eig_std,final_valid_error\n";
  for (const auto& r : rows) {
    out << format_number(r.h) << ',' << r.window_start << ',' << r.window_end
        << ',' << format_number(r.eig_mean) << ',' << format_number(r.eig_std)
        << ',' << format_number(r.final_valid_error) << '\n';
  }
  return out.str();
}

int cmd_run(const ExperimentSpec& spec, std::ostream& out, std::ostream& err) {
  Dataset dataset;
  try {
    dataset = build_dataset(spec);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  const fs::path dir = resolve_output_dir(spec);
  const RunSummary s = execute_run(spec, dataset, dir);
  if (!s.ok) {
    err << "error: " << s.error << " (" << s.epochs_completed
        << " epochs written to " << (dir / "trace.csv").string() << ")\n";
    return 1;
  }
  out << spec.name << ": " << method_name(spec.search.method) << " seed "
      << spec.search.seed << " lambda_max " << format_number(s.final_lambda_max)
      << " gap " << format_number(s.final_gap) << " discrete_acc "
      << format_number(s.discrete_valid_acc) << " sharpness "
      << format_number(s.sharpness) << " -> " << dir.string() << '\n';
  return 0;
}

int cmd_compare(const ExperimentSpec& a, const ExperimentSpec& b,
                const std::vector<std::uint64_t>& seeds, std::ostream& out,
                std::ostream& err) {
  if (seeds.size() < 2) {
    err << "error: compare needs at least two seeds\n";
    return 1;
  }
  if (a.name == b.name) {
    err << "error: compared configs need distinct names (both are '" << a.name
        << "')\n";
    return 1;
  }
  const fs::path root = resolve_output_dir(a);
  std::vector<CompareRow> rows;
  std::map<std::string, Dataset> datasets;
  for (const ExperimentSpec* base : {&a, &b}) {
    Dataset dataset;
    try {
      dataset = build_dataset(*base);
    } catch (const std::exception& e) {
      err << "error: " << base->name << ": " << e.what() << '\n';
      return 1;
    }
    for (std::uint64_t seed : seeds) {
      ExperimentSpec spec = *base;
      spec.search.seed = seed;
      const fs::path dir = root / (spec.name + "_seed" + std::to_string(seed));
      CompareRow row{method_name(spec.search.method), seed,
                     execute_run(spec, dataset, dir)};
      if (!row.summary.ok) {
        err << "warning: " << spec.name << " seed " << seed
            << " failed: " << row.summary.error << '\n';
      }
      out << spec.name << " seed " << seed << ": "
          << (row.summary.ok ? "lambda_max " + format_number(row.summary.final_lambda_max)
                             : std::string("failed"))
          << '\n';
      rows.push_back(std::move(row));
    }
  }
  std::vector<CompareAggregate> aggs;
  aggs.push_back(aggregate_compare(rows, method_name(a.search.method)));
  if (b.search.method != a.search.method) {
    aggs.push_back(aggregate_compare(rows, method_name(b.search.method)));
  }
  try {
    fs::create_directories(root);
    write_file(root / "summary.csv", summary_csv(rows, aggs));
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  for (const auto& g : aggs) {
    out << g.method << ": mean lambda_max " << format_number(g.lambda_mean)
        << " over " << g.runs << " runs\n";
  }
  out << "summary -> " << (root / "summary.csv").string() << '\n';
  return 0;
}

int cmd_sweep(const ExperimentSpec& spec, const std::vector<double>& bandwidths,
              const std::vector<std::uint64_t>& seeds, std::ostream& out,
              std::ostream& err) {
  const fs::path root = resolve_output_dir(spec);
  try {
    const Dataset dataset = build_dataset(spec);
    SweepOptions opt{bandwidths, seeds, spec.window};
    const auto rows = bandwidth_sweep(spec.search, dataset, spec.diagnostics, opt);
    fs::create_directories(root);
    for (std::uint64_t seed : seeds) {
      std::vector<SweepRow> mine;
      for (const auto& r : rows) {
        if (r.seed == seed) mine.push_back(r);
      }
      write_file(root / ("sweep_seed" + std::to_string(seed) + ".csv"),
                 sweep_csv(mine));
    }
    write_file(root / "sweep.csv", sweep_csv(aggregate_over_seeds(rows)));
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  out << "sweep -> " << (root / "sweep.csv").string() << '\n';
  return 0;
}

int cmd_selfcheck(std::ostream& out) {
  bool all = true;
  for (const auto& c : run_selfchecks()) {
    out << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << c.detail << '\n';
    all = all && c.passed;
  }
  return all ? 0 : 1;
}

}  // namespace msdarts
