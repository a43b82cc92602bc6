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

// Reverse-mode automatic differentiation on a linear tape.
//
// A Tape records every primitive in the order it is evaluated, so node inputs
// always precede the node itself. backward() walks the tape once in reverse.
// Tapes are single-threaded; independent tapes can read shared parameters
// concurrently because leaves copy their values in.

#ifndef MSDARTS_TAPE_HPP_
#define MSDARTS_TAPE_HPP_

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "msdarts/tensor.hpp"

namespace msdarts {

// Handle to a node on a Tape.
struct Var {
  std::size_t id = 0;
  friend bool operator==(Var, Var) = default;
};

class Gradients {
 public:
  Gradients() = default;
  explicit Gradients(std::vector<std::optional<Tensor>> grads)
      : grads_(std::move(grads)) {}

  // Throws std::out_of_range unless `v` is a trainable leaf of the tape that
  // produced this map.
  const Tensor& operator[](Var v) const;
  bool contains(Var v) const;

 private:
  std::vector<std::optional<Tensor>> grads_;
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  Tape(Tape&&) = default;
  Tape& operator=(Tape&&) = default;

  Var leaf(Tensor value, bool trainable = true);
  Var constant(Tensor value) { return leaf(std::move(value), false); }

  // (m x k) . (k x n) -> (m x n). Rank-1 operands are treated as rows.
  Var matmul(Var a, Var b);
  // Same-shape add, or bias-add where `b` has shape [n] or [1 x n] and `a`
  // has n columns.
  Var add(Var a, Var b);
  Var mul(Var a, Var b);
  Var relu(Var x);
  Var tanh(Var x);
  // Row-wise over the last dimension.
  Var softmax(Var x);
  Var log_softmax(Var x);
  Var mean(Var x);
  Var sum(Var x);
  Var scale(Var x, double factor);
  // sum_i weights[i] * terms[i]; `weights` has exactly terms.size() entries
  // and all terms share one shape.
  Var weighted_sum(Var weights, std::span<const Var> terms);

  const Tensor& value(Var v) const { return nodes_.at(v.id).value; }
  std::size_t size() const { return nodes_.size(); }

  // Requires a scalar output. Every trainable leaf receives a gradient; leaves
  // the output does not depend on get zeros.
  Gradients backward(Var output) const;

 private:
  using GradSlots = std::vector<std::optional<Tensor>>;
  // Receives the tape, the node's own output value and its upstream gradient;
  // accumulates into the input slots.
  using BackwardFn = std::function<void(const Tape& tape, const Tensor& out,
                                        const Tensor& grad_out,
                                        GradSlots& slots)>;

  struct Node {
    std::string op;
    Tensor value;
    std::vector<std::size_t> inputs;
    BackwardFn backward;
    bool trainable = false;
    bool leaf = false;
    bool requires_grad = false;
  };

  Var push(std::string op, Tensor value, std::vector<std::size_t> inputs,
           BackwardFn backward);
  const Node& node(Var v) const;
  bool needs_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  static void accumulate(GradSlots& slots, std::size_t id, Tensor grad);

  std::vector<Node> nodes_;
};

}  // namespace msdarts

#endif  // MSDARTS_TAPE_HPP_
