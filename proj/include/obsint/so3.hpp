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

#ifndef OBSINT_SO3_HPP_
#define OBSINT_SO3_HPP_

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace obsint {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// Hamilton quaternion, scalar-first construction Quat(w, x, y, z).
// Used as an attitude it maps the IMU frame into the global frame.
using Quat = Eigen::Quaterniond;

namespace so3 {

// Small-angle threshold below which exp/log/right-Jacobian switch to
// their Taylor expansions.
inline constexpr double kTaylorEps = 1e-6;

inline Quat identity() { return Quat(1.0, 0.0, 0.0, 0.0); }

// Hamilton product, renormalized so downstream operations can rely on
// unit norm.
Quat mul(const Quat& a, const Quat& b);

// Inverse of a unit quaternion (conjugate).
Quat inverse(const Quat& q);

// Axis-angle exponential map. For |v| >= pi the result is still a valid
// rotation but log(exp(v)) lands on the canonical branch.
Quat exp(const Vec3& v);

// Logarithm map, canonicalized to the w >= 0 hemisphere so the returned
// rotation-vector norm is <= pi.
Vec3 log(const Quat& q);

// Rotation matrix of a unit quaternion.
Mat3 rot(const Quat& q);

// Skew-symmetric (cross-product) matrix.
Mat3 hat(const Vec3& v);

// Right Jacobian of SO(3) and its inverse:
//   exp(v + dv) = exp(v) * exp(Jr(v) dv),  log(exp(v) exp(dv)) = v + Jr^-1(v) dv
// for small dv.
Mat3 right_jacobian(const Vec3& v);
Mat3 right_jacobian_inv(const Vec3& v);

// Shortest-arc spherical interpolation, t in [0, 1].
Quat slerp(const Quat& a, const Quat& b, double t);

// Geodesic distance |log(a^-1 b)| in radians; sign-of-q insensitive.
double angular_distance(const Quat& a, const Quat& b);

}  // namespace so3
}  // namespace obsint

#endif  // OBSINT_SO3_HPP_
