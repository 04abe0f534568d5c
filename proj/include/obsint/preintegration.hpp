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

#ifndef OBSINT_PREINTEGRATION_HPP_
#define OBSINT_PREINTEGRATION_HPP_

#include <span>
#include <vector>

#include "obsint/imu_model.hpp"
#include "obsint/so3.hpp"

namespace obsint {

enum class IntegrationScheme { kEuler, kMidpoint };

// Window summary (dq, dbeta, dgamma): relative rotation, the velocity-change
// integral and the position-change double integral, all expressed in the
// window's start frame. Fully determined by the measurements alone — no
// attitude, velocity or gravity enters.
struct PreintegrationDelta {
  Quat dq = so3::identity();
  Vec3 dbeta = Vec3::Zero();   // m/s
  Vec3 dgamma = Vec3::Zero();  // m
  double dt_total = 0.0;
  int n_samples = 0;
};

// Per-sample 3x3 derivative blocks of the window summary. Rows follow the
// delta components, columns the perturbed measurement. Blocks for samples a
// component does not depend on are zero.
struct PreintJacobians {
  std::vector<Mat3> dlogq_domega;
  std::vector<Mat3> dbeta_domega;
  std::vector<Mat3> dbeta_daccel;
  std::vector<Mat3> dgamma_domega;
  std::vector<Mat3> dgamma_daccel;

  void resize(std::size_t n);
};

struct PreintegrationResult {
  PreintegrationDelta delta;
  PreintJacobians jac;
};

// Discrete quadrature of the window. Requires >= 2 samples with strictly
// increasing timestamps; throws std::invalid_argument otherwise.
PreintegrationDelta preintegrate(std::span<const ImuSample> window,
                                 IntegrationScheme scheme);

// Same delta as preintegrate plus forward-accumulated derivative blocks for
// every sample in the window.
PreintegrationResult preintegrate_with_jacobians(
    std::span<const ImuSample> window, IntegrationScheme scheme);

// Deltas over the first ceil(f * N) samples for each fraction. Fractions
// must be ascending in (0, 1] and every prefix needs >= 2 samples. Each
// entry is bit-identical to preintegrate() on the truncated window.
std::vector<PreintegrationDelta> prefix_deltas(
    std::span<const ImuSample> window, std::span<const double> fractions,
    IntegrationScheme scheme);

// Prefix deltas together with their Jacobian blocks, from a single forward
// accumulation over the window.
std::vector<PreintegrationResult> prefix_deltas_with_jacobians(
    std::span<const ImuSample> window, std::span<const double> fractions,
    IntegrationScheme scheme);

// Advances a state across a window summary:
//   q1 = q0 * dq
//   v1 = v0 + g dt + R(q0) dbeta
//   p1 = p0 + v0 dt + 1/2 g dt^2 + R(q0) dgamma
// Biases are copied unchanged.
ImuState propagate_state(const ImuState& s, const PreintegrationDelta& d,
                         const GravityModel& g);

// Inverts the propagation against ground-truth boundary states, yielding the
// training targets:
//   dq     = q0^-1 q1
//   dbeta  = R(q0)^T (v1 - v0 - g dt)
//   dgamma = R(q0)^T (p1 - p0 - v0 dt - 1/2 g dt^2)
// Throws std::invalid_argument for dt <= 0.
PreintegrationDelta derive_targets(const ImuState& s0, const ImuState& s1,
                                   double dt, const GravityModel& g);

// Number of samples in the prefix for a fraction: ceil(f * n).
std::size_t prefix_length(std::size_t n_samples, double fraction);

}  // namespace obsint

#endif  // OBSINT_PREINTEGRATION_HPP_
