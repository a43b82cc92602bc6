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

// msdarts: architecture search runs, method comparisons, bandwidth sweeps.

#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "msdarts/config.hpp"
#include "msdarts/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Mean-shift smoothed differentiable architecture search"};
  app.require_subcommand(1);

  std::string run_config;
  auto* run = app.add_subcommand("run", "Run one search and write its artifacts");
  run->add_option("config", run_config, "Experiment config file")
      ->required()
      ->check(CLI::ExistingFile);

  std::string cfg_a, cfg_b, compare_seeds = "0..4";
  auto* compare = app.add_subcommand("compare", "Run two configs over a seed list");
  compare->add_option("config_a", cfg_a, "First config")->required()->check(CLI::ExistingFile);
  compare->add_option("config_b", cfg_b, "Second config")->required()->check(CLI::ExistingFile);
  compare->add_option("--seeds", compare_seeds, "Seed range a..b or list a,b,c")
      ->capture_default_str();

  std::string sweep_config, sweep_h = "0.2,0.4,0.6,0.8,1.0,1.2,1.4", sweep_seeds;
  auto* sweep = app.add_subcommand("sweep", "Sweep the mean-shift bandwidth");
  sweep->set_help_flag("--help", "Print this help message and exit");
  sweep->add_option("config", sweep_config, "Base config")->required()->check(CLI::ExistingFile);
  sweep->add_option("--h", sweep_h, "Comma-separated bandwidths")->capture_default_str();
  sweep->add_option("--seeds", sweep_seeds, "Seeds (default: the config's seed)");

  auto* selfcheck = app.add_subcommand("selfcheck", "Run the built-in numerical checks");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      return msdarts::cmd_run(msdarts::parse_config(run_config), std::cout, std::cerr);
    }
    if (compare->parsed()) {
      return msdarts::cmd_compare(msdarts::parse_config(cfg_a),
                                  msdarts::parse_config(cfg_b),
                                  msdarts::parse_seed_list(compare_seeds),
                                  std::cout, std::cerr);
    }
    if (sweep->parsed()) {
      const auto spec = msdarts::parse_config(sweep_config);
      const auto seeds = sweep_seeds.empty()
                             ? std::vector<std::uint64_t>{spec.search.seed}
                             : msdarts::parse_seed_list(sweep_seeds);
      return msdarts::cmd_sweep(spec, msdarts::parse_double_list(sweep_h), seeds,
                                std::cout, std::cerr);
    }
    if (selfcheck->parsed()) return msdarts::cmd_selfcheck(std::cout);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
