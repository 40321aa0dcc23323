// SPDX-FileCopyrightText: © 2026 The relish-head Authors
//
// SPDX-License-Identifier: Apache-2.0

// Dense GEMM kernels in two flavours: a serial reference and an OpenMP
// variant. Both walk every output element with the same accumulation order,
// so the parallel variant is bit-identical to the serial one for any thread
// count. Work is split across output rows only.

#pragma once

#include <cstddef>
#include <span>

#include "relish/tensor.hpp"

#if defined(_OPENMP)
#include <omp.h>
#endif

namespace relish::kernels {

// Below this many multiply-adds the OpenMP variants stay on one thread.
inline constexpr std::size_t kParallelWorkThreshold = 1u << 15;

[[nodiscard]] inline int max_threads() noexcept {
#if defined(_OPENMP)
  return omp_get_max_threads();
#else
  return 1;
#endif
}

namespace serial {

// c(m×n) = [c +] a(m×k) · b(k×n)
template <typename T>
void gemm_nn(std::span<const T> a, std::span<const T> b, std::span<T> c, std::size_t m,
             std::size_t k, std::size_t n, bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) {
    T* ci = c.data() + i * n;
    if (!accumulate) {
      for (std::size_t j = 0; j < n; ++j) ci[j] = T{0};
    }
    const T* ai = a.data() + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const T aip = ai[p];
      const T* bp = b.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += aip * bp[j];
    }
  }
}

// c(k×n) += a(m×k)ᵀ · b(m×n)
template <typename T>
void gemm_tn(std::span<const T> a, std::span<const T> b, std::span<T> c, std::size_t m,
             std::size_t k, std::size_t n) {
  for (std::size_t p = 0; p < k; ++p) {
    T* cp = c.data() + p * n;
    for (std::size_t i = 0; i < m; ++i) {
      const T aip = a[i * k + p];
      const T* bi = b.data() + i * n;
      for (std::size_t j = 0; j < n; ++j) cp[j] += aip * bi[j];
    }
  }
}

// c(m×k) += a(m×n) · b(k×n)ᵀ
template <typename T>
void gemm_nt(std::span<const T> a, std::span<const T> b, std::span<T> c, std::size_t m,
             std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const T* ai = a.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const T* bp = b.data() + p * n;
      T acc{0};
      for (std::size_t j = 0; j < n; ++j) acc += ai[j] * bp[j];
      c[i * k + p] += acc;
    }
  }
}

template <typename F>
void for_each_index(std::size_t count, F&& body) {
  for (std::size_t i = 0; i < count; ++i) body(i);
}

}  // namespace serial

namespace parallel {

template <typename T>
void gemm_nn(std::span<const T> a, std::span<const T> b, std::span<T> c, std::size_t m,
             std::size_t k, std::size_t n, bool accumulate) {
  if (m * k * n < kParallelWorkThreshold || m < 2) {
    serial::gemm_nn(a, b, c, m, k, n, accumulate);
    return;
  }
  const auto rows = static_cast<std::ptrdiff_t>(m);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ii = 0; ii < rows; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    T* ci = c.data() + i * n;
    if (!accumulate) {
      for (std::size_t j = 0; j < n; ++j) ci[j] = T{0};
    }
    const T* ai = a.data() + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const T aip = ai[p];
      const T* bp = b.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += aip * bp[j];
    }
  }
}

template <typename T>
void gemm_tn(std::span<const T> a, std::span<const T> b, std::span<T> c, std::size_t m,
             std::size_t k, std::size_t n) {
  if (m * k * n < kParallelWorkThreshold || k < 2) {
    serial::gemm_tn(a, b, c, m, k, n);
    return;
  }
  const auto out_rows = static_cast<std::ptrdiff_t>(k);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t pp = 0; pp < out_rows; ++pp) {
    const auto p = static_cast<std::size_t>(pp);
    T* cp = c.data() + p * n;
    for (std::size_t i = 0; i < m; ++i) {
      const T aip = a[i * k + p];
      const T* bi = b.data() + i * n;
      for (std::size_t j = 0; j < n; ++j) cp[j] += aip * bi[j];
    }
  }
}

template <typename T>
void gemm_nt(std::span<const T> a, std::span<const T> b, std::span<T> c, std::size_t m,
             std::size_t k, std::size_t n) {
  if (m * k * n < kParallelWorkThreshold || m < 2) {
    serial::gemm_nt(a, b, c, m, k, n);
    return;
  }
  const auto rows = static_cast<std::ptrdiff_t>(m);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ii = 0; ii < rows; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    const T* ai = a.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const T* bp = b.data() + p * n;
      T acc{0};
      for (std::size_t j = 0; j < n; ++j) acc += ai[j] * bp[j];
      c[i * k + p] += acc;
    }
  }
}

// Independent iterations only; body(i) must not touch state shared with body(j).
template <typename F>
void for_each_index(std::size_t count, F&& body) {
  const auto n = static_cast<std::ptrdiff_t>(count);
  if (count < 2 || max_threads() < 2) {
    serial::for_each_index(count, body);
    return;
  }
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t i = 0; i < n; ++i) body(static_cast<std::size_t>(i));
}

}  // namespace parallel

[[nodiscard]] constexpr bool openmp_enabled() noexcept {
#if defined(_OPENMP)
  return true;
#else
  return false;
#endif
}

/// Plain product a·b through the parallel kernel.
template <typename T>
Tensor2<T> matmul(const Tensor2<T>& a, const Tensor2<T>& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: cannot multiply " + shape_string(a) + " by " + shape_string(b));
  }
  Tensor2<T> c(a.rows(), b.cols());
  parallel::gemm_nn<T>(a.span(), b.span(), c.span(), a.rows(), a.cols(), b.cols(), false);
  return c;
}

}  // namespace relish::kernels
