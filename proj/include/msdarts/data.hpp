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

// Synthetic classification datasets.
//
// Every generator produces 2-D points, which are standardized and then lifted
// to `width` features through a fixed random projection followed by tanh
// (seeded separately from the points). Lifted features are standardized per
// column again.

#ifndef MSDARTS_DATA_HPP_
#define MSDARTS_DATA_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "msdarts/tensor.hpp"

namespace msdarts {

enum class DatasetKind { kTwoMoons, kSpirals, kGaussianBlobs };

DatasetKind parse_dataset_kind(const std::string& name);
std::string dataset_kind_name(DatasetKind kind);

struct DatasetSpec {
  DatasetKind kind = DatasetKind::kTwoMoons;
  std::size_t n = 400;
  double noise = 0.1;
  std::uint64_t seed = 0;
  std::size_t width = 16;
  std::uint64_t lift_seed = 7;
  // Used by spirals and blobs; two_moons always has two classes.
  std::size_t classes = 0;
  friend bool operator==(const DatasetSpec&, const DatasetSpec&) = default;
};

struct Dataset {
  Tensor features;  // n x width
  std::vector<int> labels;
  std::size_t num_classes = 0;
  // The 2-D points before standardization and lifting.
  std::vector<std::array<double, 2>> raw;
  std::vector<std::size_t> train;
  std::vector<std::size_t> valid;

  std::size_t size() const { return labels.size(); }
  std::size_t width() const { return features.cols(); }
};

std::size_t default_classes(DatasetKind kind);

// Deterministic in (kind, n, noise, seed, width, lift_seed, classes).
// Throws std::invalid_argument if n < 2 * classes.
Dataset make_dataset(const DatasetSpec& spec);

// Stratified shuffle split; `fraction` of each class goes to train.
Dataset split(Dataset dataset, double fraction, std::uint64_t seed);

struct Batch {
  Tensor x;  // rows x width
  std::vector<int> y;
  std::size_t size() const { return y.size(); }
};

Batch gather(const Dataset& dataset, const std::vector<std::size_t>& rows);

// Consecutive batches over `rows` in the given order; the last batch may be
// short.
std::vector<Batch> make_batches(const Dataset& dataset,
                                const std::vector<std::size_t>& rows,
                                std::size_t batch_size);

// Same as make_batches after shuffling `rows` with `rng`.
std::vector<Batch> shuffled_batches(const Dataset& dataset,
                                    std::vector<std::size_t> rows,
                                    std::size_t batch_size,
                                    std::mt19937_64& rng);

// CSV with header f0..f{w-1},label. Splits are not stored.
void save_csv(const Dataset& dataset, const std::filesystem::path& path);
Dataset load_csv(const std::filesystem::path& path);

}  // namespace msdarts

#endif  // MSDARTS_DATA_HPP_
