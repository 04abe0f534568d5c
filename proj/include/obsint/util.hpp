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

#ifndef OBSINT_UTIL_HPP_
#define OBSINT_UTIL_HPP_

#include <cstddef>
#include <functional>

namespace obsint {

// Worker cap: OBSINT_THREADS when set, hardware concurrency otherwise.
int thread_budget();

// Runs fn(i) for i in [0, n). Results must be stored by index by the caller;
// any reduction over them afterwards is then deterministic regardless of
// scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace obsint

#endif  // OBSINT_UTIL_HPP_
