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

#ifndef OBSINT_GRADCHECK_HPP_
#define OBSINT_GRADCHECK_HPP_

#include <cstdint>
#include <string>
#include <vector>

namespace obsint {

struct GradCheckEntry {
  std::string name;
  // max |analytic - numeric| normalized by the gradient scale of the
  // compared quantity
  double err = 0.0;
  double tol = 1e-4;
  bool pass = false;
};

// Central-finite-difference checks of every analytic gradient path:
// preintegration Jacobians (both schemes), the loss terms including
// bias-augmented and multi-horizon forms, network BPTT (parameters and
// inputs) and the end-to-end chain on a tiny configuration.
std::vector<GradCheckEntry> run_gradient_checks(std::uint64_t seed);

bool all_pass(const std::vector<GradCheckEntry>& entries);

}  // namespace obsint

#endif  // OBSINT_GRADCHECK_HPP_
