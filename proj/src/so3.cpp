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

#include "obsint/so3.hpp"

#include <cmath>

namespace obsint {
namespace so3 {

Quat mul(const Quat& a, const Quat& b) {
  Quat q = a * b;
  q.normalize();
  return q;
}

Quat inverse(const Quat& q) { return q.conjugate(); }

Quat exp(const Vec3& v) {
  const double angle = v.norm();
  double scale;  // sin(angle/2) / angle
  double w;
  if (angle < kTaylorEps) {
    const double a2 = angle * angle;
    scale = 0.5 - a2 / 48.0;
    w = 1.0 - a2 / 8.0;
  } else {
    scale = std::sin(0.5 * angle) / angle;
    w = std::cos(0.5 * angle);
  }
  Quat q(w, scale * v.x(), scale * v.y(), scale * v.z());
  q.normalize();
  return q;
}

Vec3 log(const Quat& q_in) {
  // Canonicalize to w >= 0 so the angle is <= pi.
  Quat q = q_in;
  if (q.w() < 0.0) q.coeffs() = -q.coeffs();
  const Vec3 vec(q.x(), q.y(), q.z());
  const double nv = vec.norm();
  if (nv < kTaylorEps) {
    // theta = 2 * atan2(nv, w) ~= 2*nv/w * (1 - nv^2/(3 w^2)); factor out vec.
    const double w = q.w();
    return vec * (2.0 / w) * (1.0 - nv * nv / (3.0 * w * w));
  }
  const double angle = 2.0 * std::atan2(nv, q.w());
  return vec * (angle / nv);
}

Mat3 rot(const Quat& q) { return q.normalized().toRotationMatrix(); }

Mat3 hat(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  return m;
}

Mat3 right_jacobian(const Vec3& v) {
  const double angle = v.norm();
  const Mat3 vx = hat(v);
  if (angle < kTaylorEps) {
    return Mat3::Identity() - 0.5 * vx + (1.0 / 6.0) * vx * vx;
  }
  const double a2 = angle * angle;
  const double c1 = (1.0 - std::cos(angle)) / a2;
  const double c2 = (angle - std::sin(angle)) / (a2 * angle);
  return Mat3::Identity() - c1 * vx + c2 * vx * vx;
}

Mat3 right_jacobian_inv(const Vec3& v) {
  const double angle = v.norm();
  const Mat3 vx = hat(v);
  if (angle < kTaylorEps) {
    return Mat3::Identity() + 0.5 * vx + (1.0 / 12.0) * vx * vx;
  }
  const double a2 = angle * angle;
  const double c = 1.0 / a2 - (1.0 + std::cos(angle)) / (2.0 * angle * std::sin(angle));
  return Mat3::Identity() + 0.5 * vx + c * vx * vx;
}

Quat slerp(const Quat& a, const Quat& b, double t) {
  Quat bb = b;
  if (a.dot(b) < 0.0) bb.coeffs() = -bb.coeffs();
  Quat q = a.slerp(t, bb);
  q.normalize();
  return q;
}

double angular_distance(const Quat& a, const Quat& b) {
  return log(mul(inverse(a), b)).norm();
}

}  // namespace so3
}  // namespace obsint
