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

#ifndef OBSINT_LOSSES_HPP_
#define OBSINT_LOSSES_HPP_

#include <optional>
#include <span>
#include <vector>

#include "obsint/preintegration.hpp"
#include "obsint/refine_net.hpp"

namespace obsint {

struct LossConfig {
  double huber_delta_q = 0.01;  // rad
  double huber_delta_v = 0.05;  // m/s
  double huber_delta_p = 0.05;  // m
  Vec6 lambda_reg = Vec6::Zero();  // deviation dead zone per channel
  std::vector<double> horizon_fractions{0.2, 0.4, 0.6, 0.8, 1.0};
  std::vector<double> horizon_weights{1, 1, 1, 1, 1};
  double reg_weight = 1.0;
};

// Constant biases injected into a training window; the matching integrated
// terms enter the losses so the network is not asked to remove them.
struct AugmentedBias {
  Vec3 bg = Vec3::Zero();  // rad/s
  Vec3 ba = Vec3::Zero();  // m/s^2

  bool active() const { return bg.squaredNorm() + ba.squaredNorm() > 0.0; }
};

// Huber: x^2/2 inside |x| <= delta, linear outside. Applied per component.
double huber(double x, double delta);
double huber_grad(double x, double delta);

struct RotationLoss {
  double value = 0.0;
  Vec3 grad_log_pred = Vec3::Zero();  // w.r.t. log(dq_pred)
};

struct VectorLoss {
  double value = 0.0;
  Vec3 grad_pred = Vec3::Zero();
};

// Rotation-term loss on log(dq_target * dq_pred^-1 * q_bias). q_bias is the
// integrated augmentation rotation (identity without augmentation), composed
// so a window whose prediction carries exactly the injected bias scores zero.
RotationLoss loss_rotation(const Quat& dq_target, const Quat& dq_pred,
                           double huber_delta,
                           const Quat& q_bias = so3::identity());

// Componentwise Huber on (target - pred + integrated bias term).
VectorLoss loss_beta(const Vec3& target, const Vec3& pred, double huber_delta,
                     const Vec3& beta_bias = Vec3::Zero());
VectorLoss loss_gamma(const Vec3& target, const Vec3& pred, double huber_delta,
                      const Vec3& gamma_bias = Vec3::Zero());

struct RegLoss {
  double value = 0.0;
  std::vector<Vec6> grad_refined;
};

// Hinged deviation penalty: sum over timesteps and channels of
// max(|refined - raw| - lambda, 0). Throws on length mismatch.
RegLoss loss_reg(std::span<const ImuSample> raw,
                 std::span<const ImuSample> refined, const Vec6& lambda);

// Integrated augmentation terms: preintegration of the bias-only signal
// (omega = bg, accel = ba) over the window's timestamps.
PreintegrationDelta integrated_bias_terms(const Vec3& bg, const Vec3& ba,
                                          std::span<const ImuSample> window,
                                          IntegrationScheme scheme);

// Ground-truth summary for one integration horizon.
struct HorizonTarget {
  double fraction = 1.0;
  PreintegrationDelta delta;
};

struct WindowLoss {
  double total = 0.0;
  double lq = 0.0, lv = 0.0, lp = 0.0, ld = 0.0;
  std::vector<Vec6> grad_refined;  // d total / d refined measurements
};

// Multi-horizon loss: weighted sum over prefixes of (L_q + L_v + L_p) plus
// reg_weight * L_d, with gradients accumulated through the prefix Jacobians.
// Targets must line up with cfg.horizon_fractions.
WindowLoss total_loss(std::span<const ImuSample> raw,
                      std::span<const ImuSample> refined,
                      std::span<const HorizonTarget> targets,
                      const AugmentedBias& aug, const LossConfig& cfg,
                      IntegrationScheme scheme);

}  // namespace obsint

#endif  // OBSINT_LOSSES_HPP_
