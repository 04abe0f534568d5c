// Copyright 2026 The obsint Authors
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

// Scalar reference kernels. These define the semantics the SIMD variants
// are equivalence-tested against.

#include <cmath>
#include <cstddef>

#include "obsint/kernels.hpp"

namespace obsint {
namespace kernels {
namespace {

double dot_scalar(const double* x, const double* y, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

void axpy_scalar(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void gemv_acc_scalar(const double* a, std::size_t m, std::size_t n,
                     const double* x, double* y) {
  for (std::size_t i = 0; i < m; ++i) {
    y[i] += dot_scalar(a + i * n, x, n);
  }
}

void gemv_t_acc_scalar(const double* a, std::size_t m, std::size_t n,
                       const double* g, double* y) {
  for (std::size_t i = 0; i < m; ++i) {
    axpy_scalar(g[i], a + i * n, y, n);
  }
}

void ger_acc_scalar(double* a, std::size_t m, std::size_t n, const double* g,
                    const double* x) {
  for (std::size_t i = 0; i < m; ++i) {
    axpy_scalar(g[i], x, a + i * n, n);
  }
}

void adam_update_scalar(double* p, double* m, double* v, const double* g,
                        std::size_t n, double lr, double beta1, double beta2,
                        double eps, double bc1, double bc2) {
  for (std::size_t i = 0; i < n; ++i) {
    m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
    v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
    const double mhat = m[i] / bc1;
    const double vhat = v[i] / bc2;
    p[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

}  // namespace

const Backend& scalar() {
  static const Backend backend{
      "scalar",        dot_scalar,     axpy_scalar,
      gemv_acc_scalar, gemv_t_acc_scalar, ger_acc_scalar,
      adam_update_scalar,
  };
  return backend;
}

}  // namespace kernels
}  // namespace obsint
