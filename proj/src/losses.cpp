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

#include "obsint/losses.hpp"

#include <cmath>
#include <stdexcept>

namespace obsint {

double huber(double x, double delta) {
  const double ax = std::abs(x);
  if (ax <= delta) return 0.5 * x * x;
  return delta * (ax - 0.5 * delta);
}

double huber_grad(double x, double delta) {
  if (std::abs(x) <= delta) return x;
  return x > 0.0 ? delta : -delta;
}

namespace {

double huber3(const Vec3& e, double delta, Vec3& grad_e) {
  double value = 0.0;
  for (int c = 0; c < 3; ++c) {
    value += huber(e[c], delta);
    grad_e[c] = huber_grad(e[c], delta);
  }
  return value;
}

}  // namespace

RotationLoss loss_rotation(const Quat& dq_target, const Quat& dq_pred,
                           double huber_delta, const Quat& q_bias) {
  const Quat pred_inv_bias = so3::mul(so3::inverse(dq_pred), q_bias);
  const Quat composed = so3::mul(dq_target, pred_inv_bias);
  const Vec3 e = so3::log(composed);

  RotationLoss out;
  Vec3 grad_e;
  out.value = huber3(e, huber_delta, grad_e);

  // Perturbing theta = log(dq_pred) by d moves the composed error by
  //   de = -Jr^-1(e) R(pred^-1 q_bias)^T Jr(theta) d.
  const Vec3 theta = so3::log(dq_pred);
  const Mat3 de_dtheta = -so3::right_jacobian_inv(e) *
                         so3::rot(pred_inv_bias).transpose() *
                         so3::right_jacobian(theta);
  out.grad_log_pred = de_dtheta.transpose() * grad_e;
  return out;
}

VectorLoss loss_beta(const Vec3& target, const Vec3& pred, double huber_delta,
                     const Vec3& beta_bias) {
  const Vec3 e = target - pred + beta_bias;
  VectorLoss out;
  Vec3 grad_e;
  out.value = huber3(e, huber_delta, grad_e);
  out.grad_pred = -grad_e;
  return out;
}

VectorLoss loss_gamma(const Vec3& target, const Vec3& pred, double huber_delta,
                      const Vec3& gamma_bias) {
  return loss_beta(target, pred, huber_delta, gamma_bias);
}

RegLoss loss_reg(std::span<const ImuSample> raw,
                 std::span<const ImuSample> refined, const Vec6& lambda) {
  if (raw.size() != refined.size()) {
    throw std::invalid_argument("loss_reg: raw/refined length mismatch");
  }
  RegLoss out;
  out.grad_refined.assign(raw.size(), Vec6::Zero());
  for (std::size_t t = 0; t < raw.size(); ++t) {
    Vec6 diff;
    diff << refined[t].omega - raw[t].omega, refined[t].accel - raw[t].accel;
    for (int c = 0; c < 6; ++c) {
      const double excess = std::abs(diff[c]) - lambda[c];
      if (excess > 0.0) {
        out.value += excess;
        out.grad_refined[t][c] = diff[c] > 0.0 ? 1.0 : -1.0;
      }
    }
  }
  return out;
}

PreintegrationDelta integrated_bias_terms(const Vec3& bg, const Vec3& ba,
                                          std::span<const ImuSample> window,
                                          IntegrationScheme scheme) {
  std::vector<ImuSample> bias_window(window.size());
  for (std::size_t i = 0; i < window.size(); ++i) {
    bias_window[i].t = window[i].t;
    bias_window[i].omega = bg;
    bias_window[i].accel = ba;
  }
  return preintegrate(bias_window, scheme);
}

WindowLoss total_loss(std::span<const ImuSample> raw,
                      std::span<const ImuSample> refined,
                      std::span<const HorizonTarget> targets,
                      const AugmentedBias& aug, const LossConfig& cfg,
                      IntegrationScheme scheme) {
  if (targets.size() != cfg.horizon_fractions.size() ||
      cfg.horizon_weights.size() != cfg.horizon_fractions.size()) {
    throw std::invalid_argument("total_loss: horizon/target mismatch");
  }
  for (std::size_t k = 0; k < targets.size(); ++k) {
    if (targets[k].fraction != cfg.horizon_fractions[k]) {
      throw std::invalid_argument("total_loss: horizon/target mismatch");
    }
  }

  const auto prefixes =
      prefix_deltas_with_jacobians(refined, cfg.horizon_fractions, scheme);

  WindowLoss out;
  out.grad_refined.assign(refined.size(), Vec6::Zero());

  for (std::size_t k = 0; k < prefixes.size(); ++k) {
    const PreintegrationDelta& pred = prefixes[k].delta;
    const PreintJacobians& jac = prefixes[k].jac;
    const PreintegrationDelta& target = targets[k].delta;
    const double w = cfg.horizon_weights[k];
    const std::size_t m = static_cast<std::size_t>(pred.n_samples);

    Quat q_bias = so3::identity();
    Vec3 beta_bias = Vec3::Zero(), gamma_bias = Vec3::Zero();
    if (aug.active()) {
      const PreintegrationDelta bias_d =
          integrated_bias_terms(aug.bg, aug.ba, refined.first(m), scheme);
      q_bias = bias_d.dq;
      beta_bias = bias_d.dbeta;
      gamma_bias = bias_d.dgamma;
    }

    const RotationLoss lr =
        loss_rotation(target.dq, pred.dq, cfg.huber_delta_q, q_bias);
    const VectorLoss lv =
        loss_beta(target.dbeta, pred.dbeta, cfg.huber_delta_v, beta_bias);
    const VectorLoss lp =
        loss_gamma(target.dgamma, pred.dgamma, cfg.huber_delta_p, gamma_bias);

    out.lq += w * lr.value;
    out.lv += w * lv.value;
    out.lp += w * lp.value;

    const Vec3 g_theta = w * lr.grad_log_pred;
    const Vec3 g_beta = w * lv.grad_pred;
    const Vec3 g_gamma = w * lp.grad_pred;
    for (std::size_t j = 0; j < m; ++j) {
      Vec6& g = out.grad_refined[j];
      g.head<3>() += jac.dlogq_domega[j].transpose() * g_theta +
                     jac.dbeta_domega[j].transpose() * g_beta +
                     jac.dgamma_domega[j].transpose() * g_gamma;
      g.tail<3>() += jac.dbeta_daccel[j].transpose() * g_beta +
                     jac.dgamma_daccel[j].transpose() * g_gamma;
    }
  }

  const RegLoss reg = loss_reg(raw, refined, cfg.lambda_reg);
  out.ld = reg.value;
  for (std::size_t t = 0; t < refined.size(); ++t) {
    out.grad_refined[t] += cfg.reg_weight * reg.grad_refined[t];
  }

  out.total = out.lq + out.lv + out.lp + cfg.reg_weight * out.ld;
  return out;
}

}  // namespace obsint
