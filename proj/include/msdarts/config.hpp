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

// Experiment configuration files.
//
// Flat `key = value` lines grouped by [search], [meanshift], [data] and
// [diagnostics] headers; `name` and `output_dir` may appear before the first
// header. `#` and `;` start comment lines. Parsing is strict: unknown keys,
// duplicate keys, malformed values and failed validation are errors that name
// the key and line. Only search.method is required.

#ifndef MSDARTS_CONFIG_HPP_
#define MSDARTS_CONFIG_HPP_

#include <filesystem>
#include <stdexcept>
#include <string>

#include "msdarts/data.hpp"
#include "msdarts/search.hpp"

namespace msdarts {

struct ExperimentSpec {
  std::string name = "experiment";
  std::string output_dir = "msdarts_out";
  SearchConfig search;
  DatasetSpec data;
  double train_fraction = 0.5;
  std::uint64_t split_seed = 0;
  Diagnostics diagnostics;
  // Epochs per window in bandwidth sweeps.
  std::size_t window = 20;

  void validate() const;
  friend bool operator==(const ExperimentSpec&, const ExperimentSpec&) = default;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

ExperimentSpec parse_config_text(const std::string& text,
                                 const std::string& source = "<config>");
ExperimentSpec parse_config(const std::filesystem::path& path);

// Every effective value, in the same format parse_config reads.
std::string serialize(const ExperimentSpec& spec);

// Builds and splits the dataset described by the spec.
Dataset build_dataset(const ExperimentSpec& spec);

}  // namespace msdarts

#endif  // MSDARTS_CONFIG_HPP_
