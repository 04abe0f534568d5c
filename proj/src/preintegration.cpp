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

#include "obsint/preintegration.hpp"

#include <cmath>
#include <stdexcept>

namespace obsint {

void PreintJacobians::resize(std::size_t n) {
  dlogq_domega.assign(n, Mat3::Zero());
  dbeta_domega.assign(n, Mat3::Zero());
  dbeta_daccel.assign(n, Mat3::Zero());
  dgamma_domega.assign(n, Mat3::Zero());
  dgamma_daccel.assign(n, Mat3::Zero());
}

namespace {

void check_window(std::span<const ImuSample> window) {
  if (window.size() < 2) {
    throw std::invalid_argument("preintegrate: window needs >= 2 samples");
  }
  for (std::size_t i = 1; i < window.size(); ++i) {
    if (!(window[i].t > window[i - 1].t)) {
      throw std::invalid_argument(
          "preintegrate: timestamps must be strictly increasing");
    }
  }
}

// Forward accumulation of the delta and, when requested, of the per-sample
// derivative blocks. Attitude perturbations live in the right tangent of the
// running rotation: q(u + du) = q(u) * exp(phi(u) du). Snapshots are taken
// after the step ending at each requested prefix boundary; arithmetic per
// step only touches samples already inside the prefix, which makes prefix
// results bit-identical to truncated recomputation.
struct Accumulator {
  const bool with_jac;
  Quat q = so3::identity();
  Vec3 beta = Vec3::Zero();
  Vec3 gamma = Vec3::Zero();
  Mat3 r = Mat3::Identity();  // rot(q), kept in sync

  // Derivative blocks keyed by sample index, allocated on first touch.
  std::vector<Mat3> phi_w;   // right-tangent of q w.r.t. omega_j
  std::vector<Mat3> b_w, b_a, g_w, g_a;
  std::size_t touched = 0;  // samples with any live block

  explicit Accumulator(std::size_t n, bool jac) : with_jac(jac) {
    if (with_jac) {
      phi_w.assign(n, Mat3::Zero());
      b_w.assign(n, Mat3::Zero());
      b_a.assign(n, Mat3::Zero());
      g_w.assign(n, Mat3::Zero());
      g_a.assign(n, Mat3::Zero());
    }
  }

  void step(std::span<const ImuSample> w, std::size_t i,
            IntegrationScheme scheme) {
    const double dt = w[i + 1].t - w[i].t;
    const bool midpoint = scheme == IntegrationScheme::kMidpoint;

    const Vec3 w_eff =
        midpoint ? Vec3(0.5 * (w[i].omega + w[i + 1].omega)) : w[i].omega;
    const Quat e_q = so3::exp(w_eff * dt);
    const Mat3 e = so3::rot(e_q);
    const Mat3 r_next = r * e;

    Vec3 a_world;  // effective acceleration in the start frame
    if (midpoint) {
      a_world = 0.5 * (r * w[i].accel + r_next * w[i + 1].accel);
    } else {
      a_world = r * w[i].accel;
    }

    if (with_jac) {
      // d(a_world)/d(right-perturbation of q_i)
      Mat3 k;
      if (midpoint) {
        k = -0.5 * (r * so3::hat(w[i].accel) +
                    r_next * so3::hat(w[i + 1].accel) * e.transpose());
      } else {
        k = -r * so3::hat(w[i].accel);
      }

      const Mat3 et = e.transpose();
      for (std::size_t j = 0; j < touched; ++j) {
        const Mat3 kp = k * phi_w[j];
        g_w[j] += b_w[j] * dt + (0.5 * dt * dt) * kp;
        b_w[j] += dt * kp;
        phi_w[j] = et * phi_w[j];
        g_a[j] += b_a[j] * dt;
      }

      const Mat3 jr = so3::right_jacobian(w_eff * dt);
      if (midpoint) {
        const Mat3 half_jr_dt = (0.5 * dt) * jr;
        phi_w[i] += half_jr_dt;
        phi_w[i + 1] += half_jr_dt;

        // abar depends on omega through r_next
        const Mat3 kw = (-0.25 * dt) * (r_next * so3::hat(w[i + 1].accel) * jr);
        b_w[i] += dt * kw;
        b_w[i + 1] += dt * kw;
        g_w[i] += (0.5 * dt * dt) * kw;
        g_w[i + 1] += (0.5 * dt * dt) * kw;

        b_a[i] += (0.5 * dt) * r;
        b_a[i + 1] += (0.5 * dt) * r_next;
        g_a[i] += (0.25 * dt * dt) * r;
        g_a[i + 1] += (0.25 * dt * dt) * r_next;
        touched = i + 2;
      } else {
        phi_w[i] += jr * dt;
        b_a[i] += dt * r;
        g_a[i] += (0.5 * dt * dt) * r;
        touched = i + 1;
      }
    }

    gamma += beta * dt + (0.5 * dt * dt) * a_world;
    beta += a_world * dt;
    q = so3::mul(q, e_q);
    r = so3::rot(q);
  }

  PreintegrationDelta delta(std::span<const ImuSample> w,
                            std::size_t n_used) const {
    PreintegrationDelta d;
    d.dq = q;
    d.dbeta = beta;
    d.dgamma = gamma;
    d.dt_total = w[n_used - 1].t - w[0].t;
    d.n_samples = static_cast<int>(n_used);
    return d;
  }

  PreintJacobians snapshot_jacobians(std::size_t n_used) const {
    PreintJacobians out;
    out.resize(n_used);
    const Mat3 jr_inv = so3::right_jacobian_inv(so3::log(q));
    for (std::size_t j = 0; j < n_used; ++j) {
      out.dlogq_domega[j] = jr_inv * phi_w[j];
      out.dbeta_domega[j] = b_w[j];
      out.dbeta_daccel[j] = b_a[j];
      out.dgamma_domega[j] = g_w[j];
      out.dgamma_daccel[j] = g_a[j];
    }
    return out;
  }
};

void check_fractions(std::span<const double> fractions, std::size_t n) {
  if (fractions.empty()) {
    throw std::invalid_argument("prefix_deltas: fractions must be non-empty");
  }
  double prev = 0.0;
  for (double f : fractions) {
    if (!(f > prev) || f > 1.0) {
      throw std::invalid_argument(
          "prefix_deltas: fractions must be ascending in (0, 1]");
    }
    if (prefix_length(n, f) < 2) {
      throw std::invalid_argument("prefix_deltas: prefix shorter than 2 samples");
    }
    prev = f;
  }
}

}  // namespace

std::size_t prefix_length(std::size_t n_samples, double fraction) {
  const auto m = static_cast<std::size_t>(
      std::ceil(fraction * static_cast<double>(n_samples)));
  return std::min(m, n_samples);
}

PreintegrationDelta preintegrate(std::span<const ImuSample> window,
                                 IntegrationScheme scheme) {
  check_window(window);
  Accumulator acc(0, false);
  for (std::size_t i = 0; i + 1 < window.size(); ++i) acc.step(window, i, scheme);
  return acc.delta(window, window.size());
}

PreintegrationResult preintegrate_with_jacobians(
    std::span<const ImuSample> window, IntegrationScheme scheme) {
  check_window(window);
  Accumulator acc(window.size(), true);
  for (std::size_t i = 0; i + 1 < window.size(); ++i) acc.step(window, i, scheme);
  PreintegrationResult res;
  res.delta = acc.delta(window, window.size());
  res.jac = acc.snapshot_jacobians(window.size());
  return res;
}

std::vector<PreintegrationDelta> prefix_deltas(
    std::span<const ImuSample> window, std::span<const double> fractions,
    IntegrationScheme scheme) {
  check_window(window);
  check_fractions(fractions, window.size());
  std::vector<PreintegrationDelta> out;
  out.reserve(fractions.size());
  Accumulator acc(0, false);
  std::size_t next = 0;
  for (std::size_t i = 0; i + 1 < window.size() && next < fractions.size(); ++i) {
    acc.step(window, i, scheme);
    while (next < fractions.size() &&
           prefix_length(window.size(), fractions[next]) == i + 2) {
      out.push_back(acc.delta(window, i + 2));
      ++next;
    }
  }
  return out;
}

std::vector<PreintegrationResult> prefix_deltas_with_jacobians(
    std::span<const ImuSample> window, std::span<const double> fractions,
    IntegrationScheme scheme) {
  check_window(window);
  check_fractions(fractions, window.size());
  std::vector<PreintegrationResult> out;
  out.reserve(fractions.size());
  Accumulator acc(window.size(), true);
  std::size_t next = 0;
  for (std::size_t i = 0; i + 1 < window.size() && next < fractions.size(); ++i) {
    acc.step(window, i, scheme);
    while (next < fractions.size() &&
           prefix_length(window.size(), fractions[next]) == i + 2) {
      PreintegrationResult res;
      res.delta = acc.delta(window, i + 2);
      res.jac = acc.snapshot_jacobians(i + 2);
      out.push_back(std::move(res));
      ++next;
    }
  }
  return out;
}

ImuState propagate_state(const ImuState& s, const PreintegrationDelta& d,
                         const GravityModel& g) {
  const Mat3 r0 = so3::rot(s.q);
  const double dt = d.dt_total;
  ImuState out;
  out.q = so3::mul(s.q, d.dq);
  out.bg = s.bg;
  out.v = s.v + g.g * dt + r0 * d.dbeta;
  out.ba = s.ba;
  out.p = s.p + s.v * dt + 0.5 * dt * dt * g.g + r0 * d.dgamma;
  return out;
}

PreintegrationDelta derive_targets(const ImuState& s0, const ImuState& s1,
                                   double dt, const GravityModel& g) {
  if (!(dt > 0.0)) {
    throw std::invalid_argument("derive_targets: dt must be > 0");
  }
  const Mat3 r0t = so3::rot(s0.q).transpose();
  PreintegrationDelta d;
  d.dq = so3::mul(so3::inverse(s0.q), s1.q);
  d.dbeta = r0t * (s1.v - s0.v - g.g * dt);
  d.dgamma = r0t * (s1.p - s0.p - s0.v * dt - 0.5 * dt * dt * g.g);
  d.dt_total = dt;
  d.n_samples = 0;
  return d;
}

}  // namespace obsint
