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

#ifndef OBSINT_KERNELS_HPP_
#define OBSINT_KERNELS_HPP_

#include <cstddef>
#include <string>

namespace obsint {
namespace kernels {

// Flat double-precision kernels behind the recurrent network and the
// optimizer. Matrices are row-major. Each backend must produce results
// equal to the scalar reference within floating-point reassociation
// tolerance; selection happens once per process.
struct Backend {
  const char* name;

  // sum_i x[i] * y[i]
  double (*dot)(const double* x, const double* y, std::size_t n);

  // y[i] += a * x[i]
  void (*axpy)(double a, const double* x, double* y, std::size_t n);

  // y[i] += A(i,:) . x   for A m x n
  void (*gemv_acc)(const double* a, std::size_t m, std::size_t n,
                   const double* x, double* y);

  // y[j] += sum_i A(i,j) * g[i]   for A m x n
  void (*gemv_t_acc)(const double* a, std::size_t m, std::size_t n,
                     const double* g, double* y);

  // A(i,j) += g[i] * x[j]
  void (*ger_acc)(double* a, std::size_t m, std::size_t n, const double* g,
                  const double* x);

  // Bias-corrected Adam update over a flat parameter block:
  //   m = b1*m + (1-b1)*g;  v = b2*v + (1-b2)*g^2
  //   p -= lr * (m/bc1) / (sqrt(v/bc2) + eps)
  void (*adam_update)(double* p, double* m, double* v, const double* g,
                      std::size_t n, double lr, double beta1, double beta2,
                      double eps, double bc1, double bc2);
};

const Backend& scalar();

#if defined(__x86_64__) || defined(_M_X64)
const Backend& avx2();
#endif

bool avx2_supported();

// Backend chosen at startup: AVX2 when the CPU supports it, scalar
// otherwise. OBSINT_KERNELS=scalar|avx2 overrides.
const Backend& active();

std::string active_name();

}  // namespace kernels
}  // namespace obsint

#endif  // OBSINT_KERNELS_HPP_
