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

#include "obsint/kernels.hpp"

#include <cstdlib>
#include <cstring>

namespace obsint {
namespace kernels {

bool avx2_supported() {
#if defined(__x86_64__) || defined(_M_X64)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

namespace {

const Backend& select() {
  const char* forced = std::getenv("OBSINT_KERNELS");
  if (forced != nullptr) {
    if (std::strcmp(forced, "scalar") == 0) return scalar();
#if defined(__x86_64__) || defined(_M_X64)
    if (std::strcmp(forced, "avx2") == 0 && avx2_supported()) return avx2();
#endif
    return scalar();
  }
#if defined(__x86_64__) || defined(_M_X64)
  if (avx2_supported()) return avx2();
#endif
  return scalar();
}

}  // namespace

const Backend& active() {
  static const Backend& chosen = select();
  return chosen;
}

std::string active_name() { return active().name; }

}  // namespace kernels
}  // namespace obsint
