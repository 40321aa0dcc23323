// SPDX-FileCopyrightText: © 2026 The relish-head Authors
//
// SPDX-License-Identifier: Apache-2.0

#include "relish/autodiff.hpp"

#include <atomic>
#include <cmath>
#include <utility>

#include "relish/kernels.hpp"

namespace relish {

namespace {

std::uint64_t next_graph_id() {
  static std::atomic<std::uint64_t> counter{1};
  return counter.fetch_add(1, std::memory_order_relaxed);
}

template <typename T>
void require_same_shape(const Tensor2<T>& a, const Tensor2<T>& b, const char* op) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(op) + ": shape " + shape_string(a) + " vs " + shape_string(b));
  }
}

template <typename T>
void add_into(Tensor2<T>& dst, const Tensor2<T>& src) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

}  // namespace

template <typename T>
Graph<T>::Graph(ParamStore<T>* params, Rng* dropout_rng)
    : params_(params), rng_(dropout_rng), id_(next_graph_id()) {
  nodes_.reserve(64);
}

template <typename T>
Graph<T>::Graph(const ParamStore<T>& frozen) : frozen_(&frozen), id_(next_graph_id()) {
  nodes_.reserve(64);
}

template <typename T>
Var Graph<T>::push(Node n) {
  if (!n.value().all_finite()) {
    throw EvaluationError("non-finite value produced at tape node " +
                          std::to_string(nodes_.size()));
  }
  nodes_.push_back(std::move(n));
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1), id_};
}

template <typename T>
auto Graph<T>::node(Var v) const -> const Node& {
  if (v.graph != id_ || v.index >= nodes_.size()) {
    throw InternalError("variable does not belong to this graph (unrecorded op)");
  }
  return nodes_[v.index];
}

template <typename T>
auto Graph<T>::node(Var v) -> Node& {
  if (v.graph != id_ || v.index >= nodes_.size()) {
    throw InternalError("variable does not belong to this graph (unrecorded op)");
  }
  return nodes_[v.index];
}

template <typename T>
Tensor2<T>& Graph<T>::grad_slot(std::uint32_t index) {
  Node& n = nodes_[index];
  if (n.grad.empty() && !n.value().empty()) {
    n.grad = Tensor2<T>(n.value().rows(), n.value().cols());
  }
  return n.grad;
}

template <typename T>
Var Graph<T>::constant(Tensor2<T> value) {
  Node n;
  n.owned = std::move(value);
  return push(std::move(n));
}

template <typename T>
Var Graph<T>::variable(Tensor2<T> value) {
  Node n;
  n.owned = std::move(value);
  n.requires_grad = true;
  return push(std::move(n));
}

template <typename T>
Var Graph<T>::param(const std::string& name) {
  Node n;
  if (params_ != nullptr) {
    n.external = &params_->value(name);
    n.param_grad = &params_->grad(name);
    n.requires_grad = true;
  } else if (frozen_ != nullptr) {
    n.external = &frozen_->value(name);
  } else {
    throw InternalError("graph has no parameter store");
  }
  return push(std::move(n));
}

template <typename T>
const Tensor2<T>& Graph<T>::value(Var v) const {
  return node(v).value();
}

template <typename T>
T Graph<T>::scalar(Var v) const {
  const Tensor2<T>& t = value(v);
  if (t.size() != 1) throw ShapeError("scalar(): node has shape " + shape_string(t));
  return t[0];
}

template <typename T>
Tensor2<T> Graph<T>::grad(Var v) const {
  const Node& n = node(v);
  if (n.grad.empty()) return Tensor2<T>(n.value().rows(), n.value().cols());
  return n.grad;
}

template <typename T>
void Graph<T>::backward(Var loss, T seed) {
  const Node& root = node(loss);
  if (root.value().size() != 1) {
    throw ShapeError("backward(): loss must be 1x1, got " + shape_string(root.value()));
  }
  if (!std::isfinite(root.value()[0])) throw EvaluationError("backward(): non-finite loss");
  for (Node& n : nodes_) n.grad = Tensor2<T>();
  if (!root.requires_grad) return;
  grad_slot(loss.index)[0] = seed;
  for (std::uint32_t i = loss.index + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.requires_grad || n.grad.empty()) continue;
    if (n.backward) n.backward(*this, i);
    Node& again = nodes_[i];
    if (again.param_grad != nullptr) add_into(*again.param_grad, again.grad);
  }
}

template <typename T>
Var Graph<T>::matmul(Var a, Var b) {
  const Tensor2<T>& av = value(a);
  const Tensor2<T>& bv = value(b);
  if (av.cols() != bv.rows()) {
    throw ShapeError("matmul: cannot multiply " + shape_string(av) + " by " + shape_string(bv));
  }
  Node n;
  n.owned = Tensor2<T>(av.rows(), bv.cols());
  kernels::parallel::gemm_nn<T>(av.span(), bv.span(), n.owned.span(), av.rows(), av.cols(),
                                bv.cols(), false);
  n.requires_grad = needs(a) || needs(b);
  if (n.requires_grad) {
    n.backward = [a, b](Graph& g, std::uint32_t self) {
      const Tensor2<T>& dc = g.nodes_[self].grad;
      const Tensor2<T>& A = g.value(a);
      const Tensor2<T>& B = g.value(b);
      const std::size_t m = A.rows(), k = A.cols(), ncol = B.cols();
      if (g.needs(a)) {
        kernels::parallel::gemm_nt<T>(dc.span(), B.span(), g.grad_slot(a.index).span(), m, k,
                                      ncol);
      }
      if (g.needs(b)) {
        kernels::parallel::gemm_tn<T>(A.span(), dc.span(), g.grad_slot(b.index).span(), m, k,
                                      ncol);
      }
    };
  }
  return push(std::move(n));
}

template <typename T>
Var Graph<T>::matmul_nt(Var a, Var b) {
  const Tensor2<T>& av = value(a);
  const Tensor2<T>& bv = value(b);
  if (av.cols() != bv.cols()) {
    throw ShapeError("matmul_nt: cannot multiply " + shape_string(av) + " by transpose of " +
                     shape_string(bv));
  }
  Node n;
  n.owned = Tensor2<T>(av.rows(), bv.rows());
  kernels::parallel::gemm_nt<T>(av.span(), bv.span(), n.owned.span(), av.rows(), bv.rows(),
                                av.cols());
  n.requires_grad = needs(a) || needs(b);
  if (n.requires_grad) {
    n.backward = [a, b](Graph& g, std::uint32_t self) {
      const Tensor2<T>& dc = g.nodes_[self].grad;  // m×k
      const Tensor2<T>& A = g.value(a);            // m×n
      const Tensor2<T>& B = g.value(b);            // k×n
      const std::size_t m = A.rows(), k = B.rows(), ncol = A.cols();
      if (g.needs(a)) {
        kernels::parallel::gemm_nn<T>(dc.span(), B.span(), g.grad_slot(a.index).span(), m, k,
                                      ncol, true);
      }
      if (g.needs(b)) {
        kernels::parallel::gemm_tn<T>(dc.span(), A.span(), g.grad_slot(b.index).span(), m, k,
                                      ncol);
      }
    };
  }
  return push(std::move(n));
}

template <typename T>
Var Graph<T>::add(Var a, Var b) {
  const Tensor2<T>& av = value(a);
  const Tensor2<T>& bv = value(b);
  require_same_shape(av, bv, "add");
  Node n;
  n.owned = av;
  add_into(n.owned, bv);
  n.requires_grad = needs(a) || needs(b);
  if (n.requires_grad) {
    n.backward = [a, b](Graph& g, std::uint32_t self) {
      const Tensor2<T>& dc = g.nodes_[self].grad;
      if (g.needs(a)) add_into(g.grad_slot(a.index), dc);
      if (g.needs(b)) add_into(g.grad_slot(b.index), dc);
    };
  }
  return push(std::move(n));
}

template <typename T>
Var Graph<T>::add_row(Var a, Var bias) {
  const Tensor2<T>& av = value(a);
  const Tensor2<T>& bv = value(bias);
  if (bv.rows() != 1 || bv.cols() != av.cols()) {
    throw ShapeError("add_row: bias " + shape_string(bv) + " for input " + shape_string(av));
  }
  Node n;
  n.owned = av;
  for (std::size_t r = 0; r < av.rows(); ++r) {
    for (std::size_t c = 0; c < av.cols(); ++c) n.owned(r, c) += bv[c];
  }
  n.requires_grad = needs(a) || needs(bias);
  if (n.requires_grad) {
    n.backward = [a, bias](Graph& g, std::uint32_t self) {
      const Tensor2<T>& dc = g.nodes_[self].grad;
      if (g.needs(a)) add_into(g.grad_slot(a.index), dc);
      if (g.needs(bias)) {
        Tensor2<T>& db = g.grad_slot(bias.index);
        for (std::size_t r = 0; r < dc.rows(); ++r) {
          for (std::size_t c = 0; c < dc.cols(); ++c) db[c] += dc(r, c);
        }
      }
    };
  }
  return push(std::move(n));
}

template <typename T>
Var Graph<T>::scale(Var a, T factor) {
  Node n;
  n.owned = value(a);
  for (std::size_t i = 0; i < n.owned.size(); ++i) n.owned[i] *= factor;
  n.requires_grad = needs(a);
  if (n.requires_grad) {
    n.backward = [a, factor](Graph& g, std::uint32_t self) {
      const Tensor2<T>& dc = g.nodes_[self].grad;
      Tensor2<T>& da = g.grad_slot(a.index);
      for (std::size_t i = 0; i < dc.size(); ++i) da[i] += factor * dc[i];
    };
  }
  return push(std::move(n));
}

template <typename T>
Var Graph<T>::gelu(Var a) {
  const Tensor2<T>& av = value(a);
  Node n;
  n.owned = Tensor2<T>(av.rows(), av.cols());
  for (std::size_t i = 0; i < av.size(); ++i) n.owned[i] = relish::gelu(av[i]);
  n.requires_grad = needs(a);
  if (n.requires_grad) {
    n.backward = [a](Graph& g, std::uint32_t self) {
      const Tensor2<T>& dc = g.nodes_[self].grad;
      const Tensor2<T>& x = g.value(a);
      Tensor2<T>& da = g.grad_slot(a.index);
      for (std::size_t i = 0; i < dc.size(); ++i) da[i] += dc[i] * gelu_derivative(x[i]);
    };
  }
  return push(std::move(n));
}

template <typename T>
Var Graph<T>::relu(Var a) {
  const Tensor2<T>& av = value(a);
  Node n;
  n.owned = Tensor2<T>(av.rows(), av.cols());
  for (std::size_t i = 0; i < av.size(); ++i) n.owned[i] = av[i] > T{0} ? av[i] : T{0};
  n.requires_grad = needs(a);
  if (n.requires_grad) {
    n.backward = [a](Graph& g, std::uint32_t self) {
      const Tensor2<T>& dc = g.nodes_[self].grad;
      const Tensor2<T>& x = g.value(a);
      Tensor2<T>& da = g.grad_slot(a.index);
      for (std::size_t i = 0; i < dc.size(); ++i) {
        if (x[i] > T{0}) da[i] += dc[i];
      }
    };
  }
  return push(std::move(n));
}

template <typename T>
Var Graph<T>::dropout(Var a, T rate) {
  if (rng_ == nullptr || rate <= T{0}) return a;
  if (rate >= T{1}) throw RangeError("dropout rate must be below 1");
  const Tensor2<T>& av = value(a);
  const T keep_scale = T{1} / (T{1} - rate);
  Tensor2<T> keep(av.rows(), av.cols());
  for (std::size_t i = 0; i < keep.size(); ++i) {
    keep[i] = rng_->uniform01() >= static_cast<double>(rate) ? keep_scale : T{0};
  }
  Node n;
  n.owned = av;
  for (std::size_t i = 0; i < av.size(); ++i) n.owned[i] *= keep[i];
  n.requires_grad = needs(a);
  if (n.requires_grad) {
    n.backward = [a, keep = std::move(keep)](Graph& g, std::uint32_t self) {
      const Tensor2<T>& dc = g.nodes_[self].grad;
      Tensor2<T>& da = g.grad_slot(a.index);
      for (std::size_t i = 0; i < dc.size(); ++i) da[i] += dc[i] * keep[i];
    };
  }
  return push(std::move(n));
}

template <typename T>
Var Graph<T>::layer_norm(Var x, Var gamma, Var beta, T eps) {
  const Tensor2<T>& xv = value(x);
  const Tensor2<T>& gv = value(gamma);
  const Tensor2<T>& bv = value(beta);
  if (gv.rows() != 1 || gv.cols() != xv.cols() || !gv.same_shape(bv)) {
    throw ShapeError("layer_norm: gamma/beta " + shape_string(gv) + " for input " +
                     shape_string(xv));
  }
  const std::size_t rows = xv.rows(), cols = xv.cols();
  Tensor2<T> xhat(rows, cols);
  std::vector<T> inv_std(rows);
  Node n;
  n.owned = Tensor2<T>(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    T mean{0};
    for (std::size_t c = 0; c < cols; ++c) mean += xv(r, c);
    mean /= static_cast<T>(cols);
    T var{0};
    for (std::size_t c = 0; c < cols; ++c) var += (xv(r, c) - mean) * (xv(r, c) - mean);
    var /= static_cast<T>(cols);
    inv_std[r] = T{1} / std::sqrt(var + eps);
    for (std::size_t c = 0; c < cols; ++c) {
      xhat(r, c) = (xv(r, c) - mean) * inv_std[r];
      n.owned(r, c) = gv[c] * xhat(r, c) + bv[c];
    }
  }
  n.requires_grad = needs(x) || needs(gamma) || needs(beta);
  if (n.requires_grad) {
    n.backward = [x, gamma, beta, xhat = std::move(xhat), inv_std = std::move(inv_std)](
                     Graph& g, std::uint32_t self) {
      const Tensor2<T>& dy = g.nodes_[self].grad;
      const Tensor2<T>& gv = g.value(gamma);
      const std::size_t rows = dy.rows(), cols = dy.cols();
      if (g.needs(gamma)) {
        Tensor2<T>& dg = g.grad_slot(gamma.index);
        for (std::size_t r = 0; r < rows; ++r) {
          for (std::size_t c = 0; c < cols; ++c) dg[c] += dy(r, c) * xhat(r, c);
        }
      }
      if (g.needs(beta)) {
        Tensor2<T>& db = g.grad_slot(beta.index);
        for (std::size_t r = 0; r < rows; ++r) {
          for (std::size_t c = 0; c < cols; ++c) db[c] += dy(r, c);
        }
      }
      if (g.needs(x)) {
        Tensor2<T>& dx = g.grad_slot(x.index);
        const T count = static_cast<T>(cols);
        for (std::size_t r = 0; r < rows; ++r) {
          T sum_d{0}, sum_dx{0};
          for (std::size_t c = 0; c < cols; ++c) {
            const T d = dy(r, c) * gv[c];
            sum_d += d;
            sum_dx += d * xhat(r, c);
          }
          for (std::size_t c = 0; c < cols; ++c) {
            const T d = dy(r, c) * gv[c];
            dx(r, c) += inv_std[r] / count * (count * d - sum_d - xhat(r, c) * sum_dx);
          }
        }
      }
    };
  }
  return push(std::move(n));
}

template <typename T>
Var Graph<T>::masked_softmax(Var logits, std::span<const std::uint8_t> mask) {
  const Tensor2<T>& lv = value(logits);
  if (mask.size() != lv.cols()) {
    throw ShapeError("masked_softmax: mask length " + std::to_string(mask.size()) +
                     " for logits " + shape_string(lv));
  }
  Node n;
  n.owned = Tensor2<T>(lv.rows(), lv.cols());
  for (std::size_t r = 0; r < lv.rows(); ++r) {
    const std::vector<T> p = relish::masked_softmax<T>(lv.row(r), mask);
    std::copy(p.begin(), p.end(), n.owned.row(r).begin());
  }
  n.requires_grad = needs(logits);
  if (n.requires_grad) {
    n.backward = [logits](Graph& g, std::uint32_t self) {
      const Tensor2<T>& dp = g.nodes_[self].grad;
      const Tensor2<T>& p = g.nodes_[self].value();
      Tensor2<T>& dl = g.grad_slot(logits.index);
      for (std::size_t r = 0; r < p.rows(); ++r) {
        T dot{0};
        for (std::size_t c = 0; c < p.cols(); ++c) dot += p(r, c) * dp(r, c);
        for (std::size_t c = 0; c < p.cols(); ++c) dl(r, c) += p(r, c) * (dp(r, c) - dot);
      }
    };
  }
  return push(std::move(n));
}

template <typename T>
Var Graph<T>::attention(Var query, Var keys, Var values, std::span<const std::uint8_t> mask,
                        std::size_t heads) {
  const Tensor2<T>& q = value(query);
  const Tensor2<T>& k = value(keys);
  const Tensor2<T>& v = value(values);
  const std::size_t width = q.cols();
  const std::size_t tokens = k.rows();
  if (q.rows() != 1 || k.cols() != width || !k.same_shape(v) || mask.size() != tokens) {
    throw ShapeError("attention: query " + shape_string(q) + ", keys " + shape_string(k) +
                     ", values " + shape_string(v) + ", mask " + std::to_string(mask.size()));
  }
  if (heads == 0 || width % heads != 0) {
    throw ShapeError("attention: width " + std::to_string(width) + " not divisible into " +
                     std::to_string(heads) + " heads");
  }
  const std::size_t head_dim = width / heads;
  const T scale = T{1} / std::sqrt(static_cast<T>(head_dim));

  Tensor2<T> probs(heads, tokens);
  Node n;
  n.owned = Tensor2<T>(1, width);
  std::vector<T> logits(tokens);
  for (std::size_t h = 0; h < heads; ++h) {
    const std::size_t lo = h * head_dim;
    for (std::size_t t = 0; t < tokens; ++t) {
      T acc{0};
      for (std::size_t j = 0; j < head_dim; ++j) acc += q[lo + j] * k(t, lo + j);
      logits[t] = acc * scale;
    }
    const std::vector<T> p = relish::masked_softmax<T>(logits, mask);
    for (std::size_t t = 0; t < tokens; ++t) {
      probs(h, t) = p[t];
      for (std::size_t j = 0; j < head_dim; ++j) n.owned[lo + j] += p[t] * v(t, lo + j);
    }
  }
  n.requires_grad = needs(query) || needs(keys) || needs(values);
  if (n.requires_grad) {
    n.backward = [query, keys, values, heads, head_dim, scale, probs = std::move(probs)](
                     Graph& g, std::uint32_t self) {
      const Tensor2<T>& dout = g.nodes_[self].grad;
      const Tensor2<T>& q = g.value(query);
      const Tensor2<T>& k = g.value(keys);
      const Tensor2<T>& v = g.value(values);
      const std::size_t tokens = k.rows();
      const bool need_q = g.needs(query), need_k = g.needs(keys), need_v = g.needs(values);
      Tensor2<T>* dq = need_q ? &g.grad_slot(query.index) : nullptr;
      Tensor2<T>* dk = need_k ? &g.grad_slot(keys.index) : nullptr;
      Tensor2<T>* dv = need_v ? &g.grad_slot(values.index) : nullptr;
      std::vector<T> dlogit(tokens);
      for (std::size_t h = 0; h < heads; ++h) {
        const std::size_t lo = h * head_dim;
        T weighted{0};
        for (std::size_t t = 0; t < tokens; ++t) {
          T dp{0};
          for (std::size_t j = 0; j < head_dim; ++j) dp += dout[lo + j] * v(t, lo + j);
          dlogit[t] = dp;
          weighted += probs(h, t) * dp;
        }
        for (std::size_t t = 0; t < tokens; ++t) {
          const T p = probs(h, t);
          dlogit[t] = p * (dlogit[t] - weighted) * scale;
          if (dv != nullptr && p != T{0}) {
            for (std::size_t j = 0; j < head_dim; ++j) (*dv)(t, lo + j) += p * dout[lo + j];
          }
          if (dlogit[t] == T{0}) continue;
          if (dq != nullptr) {
            for (std::size_t j = 0; j < head_dim; ++j) (*dq)[lo + j] += dlogit[t] * k(t, lo + j);
          }
          if (dk != nullptr) {
            for (std::size_t j = 0; j < head_dim; ++j) (*dk)(t, lo + j) += dlogit[t] * q[lo + j];
          }
        }
      }
    };
  }
  return push(std::move(n));
}

template <typename T>
Var Graph<T>::sum(Var a) {
  const Tensor2<T>& av = value(a);
  T total{0};
  for (std::size_t i = 0; i < av.size(); ++i) total += av[i];
  Node n;
  n.owned = Tensor2<T>(1, 1, total);
  n.requires_grad = needs(a);
  if (n.requires_grad) {
    n.backward = [a](Graph& g, std::uint32_t self) {
      const T d = g.nodes_[self].grad[0];
      Tensor2<T>& da = g.grad_slot(a.index);
      for (std::size_t i = 0; i < da.size(); ++i) da[i] += d;
    };
  }
  return push(std::move(n));
}

template <typename T>
Var Graph<T>::huber(Var prediction, T target, T delta) {
  const T z = scalar(prediction);
  Node n;
  n.owned = Tensor2<T>(1, 1, huber_loss(z, target, delta));
  n.requires_grad = needs(prediction);
  if (n.requires_grad) {
    n.backward = [prediction, target, delta](Graph& g, std::uint32_t self) {
      const T d = g.nodes_[self].grad[0];
      const T z = g.value(prediction)[0];
      g.grad_slot(prediction.index)[0] += d * huber_derivative(z, target, delta);
    };
  }
  return push(std::move(n));
}

template <typename T>
Var Graph<T>::squared_error(Var prediction, T target) {
  const T r = scalar(prediction) - target;
  Node n;
  n.owned = Tensor2<T>(1, 1, r * r);
  n.requires_grad = needs(prediction);
  if (n.requires_grad) {
    n.backward = [prediction, target](Graph& g, std::uint32_t self) {
      const T d = g.nodes_[self].grad[0];
      const T r = g.value(prediction)[0] - target;
      g.grad_slot(prediction.index)[0] += d * T{2} * r;
    };
  }
  return push(std::move(n));
}

template class Graph<float>;
template class Graph<double>;

}  // namespace relish
