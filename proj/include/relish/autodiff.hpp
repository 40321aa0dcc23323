// SPDX-FileCopyrightText: © 2026 The relish-head Authors
//
// SPDX-License-Identifier: Apache-2.0

// Tensor-level reverse-mode differentiation.
//
// A Graph records operations in creation order, which is already a
// topological order, so backward() is a single reverse sweep. Parameter
// leaves read their value straight from a ParamStore and, on backward, add
// their gradient into the store's slot. Gradients accumulate across calls
// until ParamStore::zero_grad().
//
// A Graph is single-use and not thread-safe. Any number of graphs may read
// the same ParamStore concurrently as long as nobody calls backward().

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "relish/functional.hpp"
#include "relish/param_store.hpp"
#include "relish/random.hpp"
#include "relish/tensor.hpp"

namespace relish {

/// Handle to a recorded node.
struct Var {
  std::uint32_t index = 0;
  std::uint64_t graph = 0;
};

template <typename T>
class Graph {
 public:
  /// `params` may be null for graphs without trainable leaves. `dropout_rng`
  /// null means dropout ops are identities (evaluation mode).
  explicit Graph(ParamStore<T>* params = nullptr, Rng* dropout_rng = nullptr);
  /// Inference graph: parameter leaves are read-only and record no gradient.
  explicit Graph(const ParamStore<T>& frozen);

  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var constant(Tensor2<T> value);
  /// Leaf that tracks a gradient but is not backed by a ParamStore.
  Var variable(Tensor2<T> value);
  Var param(const std::string& name);

  [[nodiscard]] const Tensor2<T>& value(Var v) const;
  [[nodiscard]] T scalar(Var v) const;
  /// Gradient of the last backward() with respect to v (zeros if unreached).
  [[nodiscard]] Tensor2<T> grad(Var v) const;
  [[nodiscard]] std::size_t size() const noexcept { return nodes_.size(); }
  [[nodiscard]] bool training() const noexcept { return rng_ != nullptr; }

  /// Propagates seed·∂loss into every reachable leaf. loss must be 1×1.
  void backward(Var loss, T seed = T{1});

  // c = a·b
  Var matmul(Var a, Var b);
  // c = a·bᵀ
  Var matmul_nt(Var a, Var b);
  Var add(Var a, Var b);
  // a (r×c) + bias (1×c) on every row
  Var add_row(Var a, Var bias);
  Var scale(Var a, T factor);
  Var gelu(Var a);
  Var relu(Var a);
  // Inverted dropout; identity when the graph has no RNG or rate == 0.
  Var dropout(Var a, T rate);
  // Row-wise layer normalization; gamma and beta are 1×c.
  Var layer_norm(Var x, Var gamma, Var beta, T eps = static_cast<T>(kLayerNormEps));
  // Row-wise masked softmax; mask length equals the column count.
  Var masked_softmax(Var logits, std::span<const std::uint8_t> mask);
  // Single-query multi-head attention: q is 1×D, keys/values are S×D, the D
  // columns split into `heads` contiguous blocks with scale 1/sqrt(D/heads).
  Var attention(Var query, Var keys, Var values, std::span<const std::uint8_t> mask,
                std::size_t heads);
  Var sum(Var a);
  // Scalar losses on a 1×1 prediction.
  Var huber(Var prediction, T target, T delta);
  Var squared_error(Var prediction, T target);

 private:
  struct Node {
    Tensor2<T> owned;
    const Tensor2<T>* external = nullptr;
    Tensor2<T> grad;
    Tensor2<T>* param_grad = nullptr;
    bool requires_grad = false;
    std::function<void(Graph&, std::uint32_t)> backward;

    const Tensor2<T>& value() const { return external ? *external : owned; }
  };

  Var push(Node node);
  const Node& node(Var v) const;
  Node& node(Var v);
  bool needs(Var v) const { return node(v).requires_grad; }
  Tensor2<T>& grad_slot(std::uint32_t index);

  std::vector<Node> nodes_;
  ParamStore<T>* params_ = nullptr;
  const ParamStore<T>* frozen_ = nullptr;
  Rng* rng_ = nullptr;
  std::uint64_t id_;
};

extern template class Graph<float>;
extern template class Graph<double>;

}  // namespace relish
