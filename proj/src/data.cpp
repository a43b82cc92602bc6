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

#include "msdarts/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace msdarts {
namespace {

constexpr double kPi = std::numbers::pi;

void standardize_columns(std::vector<double>& values, std::size_t rows,
                         std::size_t cols) {
  for (std::size_t c = 0; c < cols; ++c) {
    double mean = 0.0;
    for (std::size_t r = 0; r < rows; ++r) mean += values[r * cols + c];
    mean /= static_cast<double>(rows);
    double var = 0.0;
    for (std::size_t r = 0; r < rows; ++r) {
      const double d = values[r * cols + c] - mean;
      var += d * d;
    }
    const double sd = std::sqrt(var / static_cast<double>(rows));
    const double inv = sd > 0.0 ? 1.0 / sd : 1.0;
    for (std::size_t r = 0; r < rows; ++r) {
      values[r * cols + c] = (values[r * cols + c] - mean) * inv;
    }
  }
}

std::array<double, 2> moon_point(int label, double t) {
  if (label == 0) return {std::cos(t), std::sin(t)};
  return {1.0 - std::cos(t), 0.5 - std::sin(t)};
}

std::array<double, 2> spiral_point(int label, std::size_t classes, double u) {
  // u in [0, 1) walks one and a half turns outward.
  const double radius = 0.2 + 0.8 * u;
  const double angle = 3.0 * kPi * u + 2.0 * kPi * label / classes;
  return {radius * std::cos(angle), radius * std::sin(angle)};
}

std::array<double, 2> blob_center(int label, std::size_t classes) {
  const double angle = 2.0 * kPi * label / classes;
  return {2.0 * std::cos(angle), 2.0 * std::sin(angle)};
}

}  // namespace

DatasetKind parse_dataset_kind(const std::string& name) {
  if (name == "two_moons") return DatasetKind::kTwoMoons;
  if (name == "spirals") return DatasetKind::kSpirals;
  if (name == "gaussian_blobs") return DatasetKind::kGaussianBlobs;
  throw std::invalid_argument("unknown dataset kind '" + name +
                              "' (expected two_moons, spirals, gaussian_blobs)");
}

std::string dataset_kind_name(DatasetKind kind) {
  switch (kind) {
    case DatasetKind::kTwoMoons:
      return "two_moons";
    case DatasetKind::kSpirals:
      return "spirals";
    case DatasetKind::kGaussianBlobs:
      return "gaussian_blobs";
  }
  return "unknown";
}

std::size_t default_classes(DatasetKind kind) {
  return kind == DatasetKind::kGaussianBlobs ? 3 : 2;
}

Dataset make_dataset(const DatasetSpec& spec) {
  std::size_t classes = spec.classes ? spec.classes : default_classes(spec.kind);
  if (spec.kind == DatasetKind::kTwoMoons) classes = 2;
  if (spec.n < 2 * classes) {
    throw std::invalid_argument("dataset needs n >= 2 * classes, got n=" +
                                std::to_string(spec.n));
  }
  if (spec.width == 0) throw std::invalid_argument("dataset width must be > 0");
  if (spec.noise < 0.0) throw std::invalid_argument("noise must be >= 0");

  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  Dataset ds;
  ds.num_classes = classes;
  ds.raw.reserve(spec.n);
  ds.labels.reserve(spec.n);
  for (std::size_t c = 0; c < classes; ++c) {
    const std::size_t count = spec.n / classes + (c < spec.n % classes ? 1 : 0);
    for (std::size_t i = 0; i < count; ++i) {
      const int label = static_cast<int>(c);
      std::array<double, 2> p{};
      switch (spec.kind) {
        case DatasetKind::kTwoMoons:
          p = moon_point(label, kPi * unit(rng));
          break;
        case DatasetKind::kSpirals:
          p = spiral_point(label, classes, unit(rng));
          break;
        case DatasetKind::kGaussianBlobs:
          p = blob_center(label, classes);
          break;
      }
      p[0] += spec.noise * gauss(rng);
      p[1] += spec.noise * gauss(rng);
      ds.raw.push_back(p);
      ds.labels.push_back(label);
    }
  }

  const std::size_t n = ds.raw.size();
  std::vector<double> plane(2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    plane[2 * i] = ds.raw[i][0];
    plane[2 * i + 1] = ds.raw[i][1];
  }
  standardize_columns(plane, n, 2);

  std::mt19937_64 lift_rng(spec.lift_seed);
  std::vector<double> proj(spec.width * 2), bias(spec.width);
  for (double& v : proj) v = gauss(lift_rng);
  for (double& v : bias) v = 0.5 * gauss(lift_rng);

  std::vector<double> lifted(n * spec.width);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < spec.width; ++k) {
      const double z = proj[2 * k] * plane[2 * i] +
                       proj[2 * k + 1] * plane[2 * i + 1] + bias[k];
      lifted[i * spec.width + k] = std::tanh(z);
    }
  }
  standardize_columns(lifted, n, spec.width);
  ds.features = Tensor::matrix(n, spec.width, std::move(lifted));
  return ds;
}

Dataset split(Dataset dataset, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw std::invalid_argument("split fraction must be in (0, 1)");
  }
  std::mt19937_64 rng(seed);
  std::vector<std::vector<std::size_t>> by_class(dataset.num_classes);
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    by_class.at(static_cast<std::size_t>(dataset.labels[i])).push_back(i);
  }
  dataset.train.clear();
  dataset.valid.clear();
  for (auto& members : by_class) {
    std::shuffle(members.begin(), members.end(), rng);
    const auto take = static_cast<std::size_t>(
        std::llround(fraction * static_cast<double>(members.size())));
    dataset.train.insert(dataset.train.end(), members.begin(),
                         members.begin() + static_cast<std::ptrdiff_t>(take));
    dataset.valid.insert(dataset.valid.end(),
                         members.begin() + static_cast<std::ptrdiff_t>(take),
                         members.end());
  }
  if (dataset.train.empty() || dataset.valid.empty()) {
    throw std::invalid_argument("split fraction leaves an empty split");
  }
  return dataset;
}

Batch gather(const Dataset& dataset, const std::vector<std::size_t>& rows) {
  const std::size_t w = dataset.width();
  std::vector<double> x;
  x.reserve(rows.size() * w);
  Batch b;
  b.y.reserve(rows.size());
  for (std::size_t r : rows) {
    for (std::size_t c = 0; c < w; ++c) x.push_back(dataset.features.at(r, c));
    b.y.push_back(dataset.labels.at(r));
  }
  b.x = Tensor::matrix(rows.size(), w, std::move(x));
  return b;
}

std::vector<Batch> make_batches(const Dataset& dataset,
                                const std::vector<std::size_t>& rows,
                                std::size_t batch_size) {
  if (batch_size == 0) throw std::invalid_argument("batch_size must be > 0");
  std::vector<Batch> out;
  for (std::size_t start = 0; start < rows.size(); start += batch_size) {
    const std::size_t end = std::min(rows.size(), start + batch_size);
    out.push_back(gather(
        dataset, std::vector<std::size_t>(rows.begin() + start, rows.begin() + end)));
  }
  return out;
}

std::vector<Batch> shuffled_batches(const Dataset& dataset,
                                    std::vector<std::size_t> rows,
                                    std::size_t batch_size,
                                    std::mt19937_64& rng) {
  std::shuffle(rows.begin(), rows.end(), rng);
  return make_batches(dataset, rows, batch_size);
}

void save_csv(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  const std::size_t w = dataset.width();
  for (std::size_t c = 0; c < w; ++c) out << 'f' << c << ',';
  out << "label\n";
  out.precision(17);
  for (std::size_t r = 0; r < dataset.size(); ++r) {
    for (std::size_t c = 0; c < w; ++c) out << dataset.features.at(r, c) << ',';
    out << dataset.labels[r] << '\n';
  }
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

Dataset load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line)) {
    throw std::runtime_error(path.string() + ": empty file");
  }
  const auto width = static_cast<std::size_t>(
      std::count(line.begin(), line.end(), ','));
  if (width == 0 || line.substr(line.rfind(',') + 1) != "label") {
    throw std::runtime_error(path.string() + ": bad header");
  }
  Dataset ds;
  std::vector<double> values;
  int max_label = -1;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream row(line);
    std::string cell;
    std::size_t col = 0;
    while (std::getline(row, cell, ',')) {
      if (col < width) {
        values.push_back(std::stod(cell));
      } else {
        const int label = std::stoi(cell);
        if (label < 0) {
          throw std::runtime_error(path.string() + ":" +
                                   std::to_string(lineno) + ": negative label");
        }
        ds.labels.push_back(label);
        max_label = std::max(max_label, label);
      }
      ++col;
    }
    if (col != width + 1) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                               ": expected " + std::to_string(width + 1) +
                               " fields");
    }
  }
  ds.num_classes = static_cast<std::size_t>(max_label + 1);
  ds.features = Tensor::matrix(ds.labels.size(), width, std::move(values));
  return ds;
}

}  // namespace msdarts
