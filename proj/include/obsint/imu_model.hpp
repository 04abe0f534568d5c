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

#ifndef OBSINT_IMU_MODEL_HPP_
#define OBSINT_IMU_MODEL_HPP_

#include "obsint/rng.hpp"
#include "obsint/so3.hpp"

namespace obsint {

// One gyro + accelerometer reading. omega is the angular rate and accel the
// specific force, both in the IMU frame.
struct ImuSample {
  double t = 0.0;  // seconds
  Vec3 omega = Vec3::Zero();  // rad/s
  Vec3 accel = Vec3::Zero();  // m/s^2
};

// Full navigation state: attitude (IMU->global), gyro bias, velocity,
// accelerometer bias, position.
struct ImuState {
  Quat q = so3::identity();
  Vec3 bg = Vec3::Zero();  // rad/s
  Vec3 v = Vec3::Zero();   // m/s
  Vec3 ba = Vec3::Zero();  // m/s^2
  Vec3 p = Vec3::Zero();   // m
};

struct GravityModel {
  Vec3 g = Vec3(0.0, 0.0, -9.8);  // m/s^2
};

// Sensor error model used by the simulator and for augmentation. White-noise
// stds are continuous densities (per sqrt(Hz)); bias walks are per sqrt(s).
struct ImuIntrinsics {
  double sigma_g = 0.0;        // rad/s/sqrt(Hz)
  double sigma_a = 0.0;        // m/s^2/sqrt(Hz)
  double sigma_bg_walk = 0.0;  // rad/s/sqrt(s)
  double sigma_ba_walk = 0.0;  // m/s^2/sqrt(s)
  Vec3 initial_bg = Vec3::Zero();
  Vec3 initial_ba = Vec3::Zero();
  // Optional simulated intrinsic distortion, identity (off) by default.
  Mat3 gyro_scale_misalignment = Mat3::Identity();
  Mat3 accel_scale_misalignment = Mat3::Identity();
};

// Mutable bias state owned by the caller, one per simulated sequence.
struct BiasState {
  Vec3 bg = Vec3::Zero();
  Vec3 ba = Vec3::Zero();
};

// Applies the linear measurement model to a true rate/specific-force pair:
// measured = M * true + b + n, with n white noise scaled by 1/sqrt(dt), then
// advances the biases by their random walks (std * sqrt(dt)).
// Throws std::invalid_argument for dt <= 0.
ImuSample corrupt(double t, const Vec3& true_omega, const Vec3& true_accel,
                  const ImuIntrinsics& intr, BiasState& bias, Rng& rng,
                  double dt);

// Specific force seen by an ideal IMU: R(q)^T (a_global - g).
Vec3 true_body_accel(const Quat& q, const Vec3& global_accel,
                     const GravityModel& g);

}  // namespace obsint

#endif  // OBSINT_IMU_MODEL_HPP_
