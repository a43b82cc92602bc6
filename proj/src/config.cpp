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

#include "msdarts/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <vector>

namespace msdarts {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

double to_double(const std::string& v) {
  double out = 0.0;
  auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || end != v.data() + v.size()) {
    throw std::invalid_argument("expected a number, got '" + v + "'");
  }
  return out;
}

std::uint64_t to_uint(const std::string& v) {
  std::uint64_t out = 0;
  auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || end != v.data() + v.size()) {
    throw std::invalid_argument("expected a non-negative integer, got '" + v + "'");
  }
  return out;
}

bool to_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw std::invalid_argument("expected true or false, got '" + v + "'");
}

std::string from_bool(bool b) { return b ? "true" : "false"; }

std::vector<OpKind> to_ops(const std::string& v) {
  std::vector<OpKind> ops;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) ops.push_back(parse_op(trim(item)));
  if (ops.empty()) throw std::invalid_argument("op list is empty");
  return ops;
}

std::string from_ops(const std::vector<OpKind>& ops) {
  std::string out;
  for (std::size_t i = 0; i < ops.size(); ++i) {
    if (i) out += ',';
    out += op_name(ops[i]);
  }
  return out;
}

struct Key {
  std::string section;  // empty for top-level keys
  std::string name;
  std::function<void(ExperimentSpec&, const std::string&)> set;
  std::function<std::string(const ExperimentSpec&)> get;
};

#define MSDARTS_UINT(section, key, field)                                      \
  Key {                                                                        \
    section, key,                                                              \
        [](ExperimentSpec& s, const std::string& v) {                          \
          s.field = static_cast<decltype(s.field)>(to_uint(v));                \
        },                                                                     \
        [](const ExperimentSpec& s) { return std::to_string(s.field); }        \
  }
#define MSDARTS_DOUBLE(section, key, field)                                    \
  Key {                                                                        \
    section, key,                                                              \
        [](ExperimentSpec& s, const std::string& v) { s.field = to_double(v); }, \
        [](const ExperimentSpec& s) { return format_double(s.field); }         \
  }
#define MSDARTS_BOOL(section, key, field)                                      \
  Key {                                                                        \
    section, key,                                                              \
        [](ExperimentSpec& s, const std::string& v) { s.field = to_bool(v); }, \
        [](const ExperimentSpec& s) { return from_bool(s.field); }             \
  }

const std::vector<Key>& keys() {
  static const std::vector<Key> table = {
      {"", "name", [](ExperimentSpec& s, const std::string& v) { s.name = v; },
       [](const ExperimentSpec& s) { return s.name; }},
      {"", "output_dir",
       [](ExperimentSpec& s, const std::string& v) { s.output_dir = v; },
       [](const ExperimentSpec& s) { return s.output_dir; }},

      {"search", "method",
       [](ExperimentSpec& s, const std::string& v) { s.search.method = parse_method(v); },
       [](const ExperimentSpec& s) { return method_name(s.search.method); }},
      MSDARTS_UINT("search", "epochs", search.epochs),
      MSDARTS_UINT("search", "batch_size", search.batch_size),
      MSDARTS_DOUBLE("search", "lr_max", search.lr_max),
      MSDARTS_DOUBLE("search", "lr_min", search.lr_min),
      MSDARTS_DOUBLE("search", "arch_lr", search.arch_lr),
      MSDARTS_DOUBLE("search", "weight_decay", search.weight_decay),
      MSDARTS_DOUBLE("search", "momentum", search.momentum),
      MSDARTS_DOUBLE("search", "arch_init_scale", search.arch_init_scale),
      {"search", "order",
       [](ExperimentSpec& s, const std::string& v) { s.search.order = parse_step_order(v); },
       [](const ExperimentSpec& s) { return step_order_name(s.search.order); }},
      MSDARTS_UINT("search", "arch_passes", search.arch_passes),
      MSDARTS_UINT("search", "seed", search.seed),
      MSDARTS_UINT("search", "cells", search.net.cells),
      MSDARTS_UINT("search", "nodes", search.net.intermediate_nodes),
      MSDARTS_UINT("search", "width", search.net.width),
      {"search", "ops",
       [](ExperimentSpec& s, const std::string& v) { s.search.net.ops = to_ops(v); },
       [](const ExperimentSpec& s) { return from_ops(s.search.net.ops); }},

      MSDARTS_DOUBLE("meanshift", "h", search.ms.bandwidth),
      MSDARTS_UINT("meanshift", "samples", search.ms.samples),
      MSDARTS_UINT("meanshift", "iterations", search.ms.max_iterations),
      MSDARTS_DOUBLE("meanshift", "eps", search.ms.radius),
      MSDARTS_DOUBLE("meanshift", "tol", search.ms.tol),
      {"meanshift", "kernel",
       [](ExperimentSpec& s, const std::string& v) {
         s.search.ms.convention = parse_kernel_convention(v);
       },
       [](const ExperimentSpec& s) { return kernel_convention_name(s.search.ms.convention); }},

      {"data", "kind",
       [](ExperimentSpec& s, const std::string& v) { s.data.kind = parse_dataset_kind(v); },
       [](const ExperimentSpec& s) { return dataset_kind_name(s.data.kind); }},
      MSDARTS_UINT("data", "n", data.n),
      MSDARTS_DOUBLE("data", "noise", data.noise),
      MSDARTS_UINT("data", "seed", data.seed),
      MSDARTS_UINT("data", "lift_seed", data.lift_seed),
      MSDARTS_UINT("data", "classes", data.classes),
      MSDARTS_DOUBLE("data", "train_fraction", train_fraction),
      MSDARTS_UINT("data", "split_seed", split_seed),

      MSDARTS_BOOL("diagnostics", "eigen", diagnostics.eigen),
      MSDARTS_BOOL("diagnostics", "gap", diagnostics.gap),
      MSDARTS_BOOL("diagnostics", "alpha_probe", diagnostics.alpha_probe),
      MSDARTS_UINT("diagnostics", "eig_iters", diagnostics.eig_iterations),
      MSDARTS_DOUBLE("diagnostics", "eig_tol", diagnostics.eig_tol),
      MSDARTS_DOUBLE("diagnostics", "probe_radius", diagnostics.probe_radius),
      MSDARTS_UINT("diagnostics", "probe_directions", diagnostics.probe_directions),
      MSDARTS_UINT("diagnostics", "probe_seed", diagnostics.probe_seed),
      MSDARTS_BOOL("diagnostics", "wall_clock", diagnostics.wall_clock),
      MSDARTS_UINT("diagnostics", "window", window),
  };
  return table;
}

#undef MSDARTS_UINT
#undef MSDARTS_DOUBLE
#undef MSDARTS_BOOL

const Key* find_key(const std::string& section, const std::string& name) {
  for (const Key& k : keys()) {
    if (k.section == section && k.name == name) return &k;
  }
  return nullptr;
}

std::string qualified(const std::string& section, const std::string& name) {
  return section.empty() ? name : section + "." + name;
}

}  // namespace

void ExperimentSpec::validate() const {
  if (name.empty()) throw std::invalid_argument("name must be nonempty");
  if (output_dir.empty()) throw std::invalid_argument("output_dir must be nonempty");
  search.validate();
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw std::invalid_argument("train_fraction must be in (0, 1)");
  }
  if (search.net.width != data.width) {
    throw std::invalid_argument("search.width must equal the dataset width (" +
                                std::to_string(data.width) + ")");
  }
  if (diagnostics.eig_iterations < 1) {
    throw std::invalid_argument("eig_iters must be >= 1");
  }
  if (diagnostics.probe_directions < 1) {
    throw std::invalid_argument("probe_directions must be >= 1");
  }
  if (window < 1) throw std::invalid_argument("window must be >= 1");
}

ExperimentSpec parse_config_text(const std::string& text,
                                 const std::string& source) {
  ExperimentSpec spec;
  std::istringstream in(text);
  std::string raw;
  std::string section;
  std::set<std::string> seen;
  std::size_t lineno = 0;
  bool have_method = false;

  const auto fail = [&](const std::string& msg) -> ConfigError {
    return ConfigError(source + ":" + std::to_string(lineno) + ": " + msg);
  };

  while (std::getline(in, raw)) {
    ++lineno;
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw fail("malformed section header '" + line + "'");
      section = trim(line.substr(1, line.size() - 2));
      if (section != "search" && section != "meanshift" && section != "data" &&
          section != "diagnostics") {
        throw fail("unknown section [" + section + "]");
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw fail("expected key = value, got '" + line + "'");
    const std::string name = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const std::string full = qualified(section, name);
    const Key* key = find_key(section, name);
    if (!key) throw fail("unknown key '" + full + "'");
    if (!seen.insert(full).second) throw fail("duplicate key '" + full + "'");
    try {
      key->set(spec, value);
    } catch (const std::exception& e) {
      throw fail(full + ": " + e.what());
    }
    if (full == "search.method") have_method = true;
    // Validate eagerly so range errors point at the offending line.
    try {
      if (section == "meanshift") spec.search.ms.validate();
    } catch (const std::exception& e) {
      throw fail(full + ": " + e.what());
    }
  }
  if (!have_method) {
    throw ConfigError(source + ": missing required key 'search.method'");
  }
  try {
    spec.validate();
  } catch (const std::exception& e) {
    throw ConfigError(source + ": " + e.what());
  }
  return spec;
}

ExperimentSpec parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), path.string());
}

std::string serialize(const ExperimentSpec& spec) {
  std::ostringstream out;
  std::string section;
  for (const Key& k : keys()) {
    if (k.section != section) {
      section = k.section;
      out << "\n[" << section << "]\n";
    }
    out << k.name << " = " << k.get(spec) << '\n';
  }
  return out.str();
}

Dataset build_dataset(const ExperimentSpec& spec) {
  return split(make_dataset(spec.data), spec.train_fraction, spec.split_seed);
}

}  // namespace msdarts
