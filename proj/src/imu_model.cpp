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

#include "obsint/imu_model.hpp"

#include <cmath>
#include <stdexcept>

namespace obsint {

ImuSample corrupt(double t, const Vec3& true_omega, const Vec3& true_accel,
                  const ImuIntrinsics& intr, BiasState& bias, Rng& rng,
                  double dt) {
  if (!(dt > 0.0)) {
    throw std::invalid_argument("corrupt: dt must be > 0");
  }
  const double inv_sqrt_dt = 1.0 / std::sqrt(dt);
  ImuSample s;
  s.t = t;
  s.omega = intr.gyro_scale_misalignment * true_omega + bias.bg +
            intr.sigma_g * inv_sqrt_dt * rng.gaussian_vec3();
  s.accel = intr.accel_scale_misalignment * true_accel + bias.ba +
            intr.sigma_a * inv_sqrt_dt * rng.gaussian_vec3();
  const double sqrt_dt = std::sqrt(dt);
  bias.bg += intr.sigma_bg_walk * sqrt_dt * rng.gaussian_vec3();
  bias.ba += intr.sigma_ba_walk * sqrt_dt * rng.gaussian_vec3();
  return s;
}

Vec3 true_body_accel(const Quat& q, const Vec3& global_accel,
                     const GravityModel& g) {
  return so3::rot(q).transpose() * (global_accel - g.g);
}

}  // namespace obsint
