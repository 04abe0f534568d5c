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

#include "obsint/gradcheck.hpp"

#include <cmath>
#include <functional>

#include "obsint/losses.hpp"
#include "obsint/preintegration.hpp"
#include "obsint/refine_net.hpp"
#include "obsint/rng.hpp"

namespace obsint {

namespace {

constexpr double kTol = 1e-4;

// Accumulates |analytic - numeric| and the gradient magnitude scale; the
// reported error is the normalized max-abs deviation.
struct ErrTracker {
  double max_abs_diff = 0.0;
  double scale = 0.0;

  void add(double analytic, double numeric) {
    max_abs_diff = std::max(max_abs_diff, std::abs(analytic - numeric));
    scale = std::max({scale, std::abs(analytic), std::abs(numeric)});
  }
  double err() const { return max_abs_diff / (scale + 1e-12); }
};

GradCheckEntry make_entry(const std::string& name, const ErrTracker& t) {
  GradCheckEntry e;
  e.name = name;
  e.err = t.err();
  e.tol = kTol;
  e.pass = t.err() < kTol;
  return e;
}

std::vector<ImuSample> random_window(Rng& rng, std::size_t n, double rate_hz) {
  std::vector<ImuSample> w(n);
  const double dt = 1.0 / rate_hz;
  for (std::size_t i = 0; i < n; ++i) {
    w[i].t = static_cast<double>(i) * dt;
    w[i].omega = rng.uniform_vec3(-1.0, 1.0);
    w[i].accel = rng.uniform_vec3(-5.0, 5.0);
  }
  return w;
}

double central_diff(const std::function<double(double)>& f, double x,
                    double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

GradCheckEntry check_preint_jacobians(Rng& rng, IntegrationScheme scheme,
                                      const std::string& name) {
  const std::vector<ImuSample> window = random_window(rng, 50, 200.0);
  const PreintegrationResult res = preintegrate_with_jacobians(window, scheme);
  const double h = 1e-6;

  ErrTracker t;
  std::vector<ImuSample> pert = window;
  for (std::size_t i = 0; i < window.size(); ++i) {
    for (int axis = 0; axis < 3; ++axis) {
      for (int which = 0; which < 2; ++which) {  // 0 omega, 1 accel
        double& slot = which == 0 ? pert[i].omega[axis] : pert[i].accel[axis];
        const double saved = slot;
        slot = saved + h;
        const PreintegrationDelta dplus = preintegrate(pert, scheme);
        slot = saved - h;
        const PreintegrationDelta dminus = preintegrate(pert, scheme);
        slot = saved;

        const Vec3 dlog =
            (so3::log(dplus.dq) - so3::log(dminus.dq)) / (2.0 * h);
        const Vec3 dbeta = (dplus.dbeta - dminus.dbeta) / (2.0 * h);
        const Vec3 dgamma = (dplus.dgamma - dminus.dgamma) / (2.0 * h);
        for (int r = 0; r < 3; ++r) {
          if (which == 0) {
            t.add(res.jac.dlogq_domega[i](r, axis), dlog[r]);
            t.add(res.jac.dbeta_domega[i](r, axis), dbeta[r]);
            t.add(res.jac.dgamma_domega[i](r, axis), dgamma[r]);
          } else {
            t.add(0.0, dlog[r]);  // rotation must not see the accelerometer
            t.add(res.jac.dbeta_daccel[i](r, axis), dbeta[r]);
            t.add(res.jac.dgamma_daccel[i](r, axis), dgamma[r]);
          }
        }
      }
    }
  }
  return make_entry(name, t);
}

GradCheckEntry check_loss_rotation(Rng& rng, bool augmented) {
  ErrTracker t;
  for (int rep = 0; rep < 8; ++rep) {
    const Quat target = rng.unit_quat();
    const Vec3 theta0 = rng.uniform_vec3(-0.8, 0.8);
    const Quat q_bias =
        augmented ? so3::exp(rng.uniform_vec3(-0.05, 0.05)) : so3::identity();
    const double delta = 0.01;

    const RotationLoss l =
        loss_rotation(target, so3::exp(theta0), delta, q_bias);
    for (int axis = 0; axis < 3; ++axis) {
      const double numeric = central_diff(
          [&](double x) {
            Vec3 th = theta0;
            th[axis] = x;
            return loss_rotation(target, so3::exp(th), delta, q_bias).value;
          },
          theta0[axis], 1e-6);
      t.add(l.grad_log_pred[axis], numeric);
    }
  }
  return make_entry(augmented ? "loss_rotation (augmented)" : "loss_rotation",
                    t);
}

GradCheckEntry check_loss_vec(Rng& rng) {
  ErrTracker t;
  for (int rep = 0; rep < 8; ++rep) {
    const Vec3 target = rng.uniform_vec3(-1.0, 1.0);
    const Vec3 pred0 = rng.uniform_vec3(-1.0, 1.0);
    const Vec3 bias = rng.uniform_vec3(-0.1, 0.1);
    const double delta = 0.05;
    const VectorLoss l = loss_beta(target, pred0, delta, bias);
    for (int axis = 0; axis < 3; ++axis) {
      const double numeric = central_diff(
          [&](double x) {
            Vec3 p = pred0;
            p[axis] = x;
            return loss_beta(target, p, delta, bias).value;
          },
          pred0[axis], 1e-6);
      t.add(l.grad_pred[axis], numeric);
    }
  }
  return make_entry("loss_beta / loss_gamma", t);
}

// Deviations are nudged away from the hinge so the finite difference does
// not straddle the kink.
GradCheckEntry check_loss_reg(Rng& rng) {
  const std::vector<ImuSample> raw = random_window(rng, 16, 200.0);
  Vec6 lambda;
  lambda << 0.02, 0.02, 0.02, 0.1, 0.1, 0.1;
  std::vector<ImuSample> refined = raw;
  for (ImuSample& s : refined) {
    for (int c = 0; c < 3; ++c) {
      double dw = rng.uniform(-0.08, 0.08);
      if (std::abs(std::abs(dw) - lambda[c]) < 1e-4) dw += 3e-4;
      s.omega[c] += dw;
      double da = rng.uniform(-0.4, 0.4);
      if (std::abs(std::abs(da) - lambda[3 + c]) < 1e-4) da += 3e-4;
      s.accel[c] += da;
    }
  }

  const RegLoss l = loss_reg(raw, refined, lambda);
  ErrTracker t;
  for (std::size_t i = 0; i < refined.size(); ++i) {
    for (int c = 0; c < 6; ++c) {
      const double numeric = central_diff(
          [&](double x) {
            std::vector<ImuSample> r2 = refined;
            if (c < 3) {
              r2[i].omega[c] = x;
            } else {
              r2[i].accel[c - 3] = x;
            }
            return loss_reg(raw, r2, lambda).value;
          },
          c < 3 ? refined[i].omega[c] : refined[i].accel[c - 3], 1e-6);
      t.add(l.grad_refined[i][c], numeric);
    }
  }
  return make_entry("loss_reg", t);
}

struct TinyProblem {
  std::vector<ImuSample> raw;
  std::vector<HorizonTarget> targets;
  AugmentedBias aug;
  LossConfig loss_cfg;
  IntegrationScheme scheme = IntegrationScheme::kMidpoint;
};

TinyProblem make_tiny_problem(Rng& rng) {
  TinyProblem p;
  p.raw = random_window(rng, 8, 200.0);
  p.loss_cfg.horizon_fractions = {0.5, 1.0};
  p.loss_cfg.horizon_weights = {1.0, 1.0};
  p.loss_cfg.lambda_reg << 0.01, 0.01, 0.01, 0.05, 0.05, 0.05;
  p.loss_cfg.reg_weight = 0.5;
  p.aug.bg = rng.uniform_vec3(-0.02, 0.02);
  p.aug.ba = rng.uniform_vec3(-0.2, 0.2);
  for (double f : p.loss_cfg.horizon_fractions) {
    HorizonTarget target;
    target.fraction = f;
    const std::size_t m = prefix_length(p.raw.size(), f);
    // plausible constants near the raw integration
    const PreintegrationDelta d =
        preintegrate(std::span(p.raw).first(m), p.scheme);
    target.delta = d;
    target.delta.dq = so3::mul(d.dq, so3::exp(rng.uniform_vec3(-0.03, 0.03)));
    target.delta.dbeta += rng.uniform_vec3(-0.05, 0.05);
    target.delta.dgamma += rng.uniform_vec3(-0.01, 0.01);
    p.targets.push_back(target);
  }
  return p;
}

GradCheckEntry check_total_loss_grad(Rng& rng) {
  TinyProblem p = make_tiny_problem(rng);
  std::vector<ImuSample> refined = p.raw;
  for (ImuSample& s : refined) {
    s.omega += rng.uniform_vec3(-0.05, 0.05);
    s.accel += rng.uniform_vec3(-0.3, 0.3);
  }

  const WindowLoss l =
      total_loss(p.raw, refined, p.targets, p.aug, p.loss_cfg, p.scheme);
  ErrTracker t;
  for (std::size_t i = 0; i < refined.size(); ++i) {
    for (int c = 0; c < 6; ++c) {
      const double numeric = central_diff(
          [&](double x) {
            std::vector<ImuSample> r2 = refined;
            if (c < 3) {
              r2[i].omega[c] = x;
            } else {
              r2[i].accel[c - 3] = x;
            }
            return total_loss(p.raw, r2, p.targets, p.aug, p.loss_cfg, p.scheme)
                .total;
          },
          c < 3 ? refined[i].omega[c] : refined[i].accel[c - 3], 1e-6);
      t.add(l.grad_refined[i][c], numeric);
    }
  }
  return make_entry("total_loss grad w.r.t. refined (multi-horizon, augmented)",
                    t);
}

NetworkConfig tiny_net_config() {
  NetworkConfig cfg;
  cfg.n_layers = 2;
  cfg.hidden = 4;
  cfg.window_len = 8;
  cfg.variable_length = true;
  return cfg;
}

// Perturbs the head away from zero so every path carries signal.
NetworkParams tiny_net_params(const NetworkConfig& cfg, Rng& rng) {
  NetworkParams params = init_params(cfg, rng);
  for (const ParamGroup& g : param_layout(cfg)) {
    if (g.name.rfind("head.", 0) == 0) {
      for (std::size_t i = 0; i < g.size(); ++i) {
        params.flat[g.offset + i] = rng.uniform(-0.3, 0.3);
      }
    }
  }
  return params;
}

GradCheckEntry check_bptt_params(Rng& rng) {
  const NetworkConfig cfg = tiny_net_config();
  NetworkParams params = tiny_net_params(cfg, rng);
  const std::vector<ImuSample> window = random_window(rng, 8, 200.0);
  const Normalizer norm;  // identity scales keep FD steps meaningful

  // fixed linear functional of the refined outputs
  std::vector<Vec6> coeff(window.size());
  for (auto& c : coeff) {
    for (int k = 0; k < 6; ++k) c[k] = rng.uniform(-1.0, 1.0);
  }
  const auto scalar_loss = [&](const NetworkParams& p) {
    const ForwardResult f = forward(p, window, norm);
    double acc = 0.0;
    for (std::size_t t = 0; t < window.size(); ++t) {
      for (int k = 0; k < 3; ++k) {
        acc += coeff[t][k] * f.refined[t].omega[k];
        acc += coeff[t][3 + k] * f.refined[t].accel[k];
      }
    }
    return acc;
  };

  const ForwardResult f = forward(params, window, norm);
  const BackwardResult back = backward(params, f.cache, coeff);

  ErrTracker t;
  for (std::size_t i = 0; i < params.flat.size(); ++i) {
    const double saved = params.flat[i];
    const double h = 1e-6 * std::max(1.0, std::abs(saved));
    params.flat[i] = saved + h;
    const double fp = scalar_loss(params);
    params.flat[i] = saved - h;
    const double fm = scalar_loss(params);
    params.flat[i] = saved;
    t.add(back.param_grads[i], (fp - fm) / (2.0 * h));
  }
  return make_entry("network BPTT parameter grads", t);
}

GradCheckEntry check_bptt_inputs(Rng& rng) {
  const NetworkConfig cfg = tiny_net_config();
  NetworkParams params = tiny_net_params(cfg, rng);
  std::vector<ImuSample> window = random_window(rng, 8, 200.0);
  const Normalizer norm;

  std::vector<Vec6> coeff(window.size());
  for (auto& c : coeff) {
    for (int k = 0; k < 6; ++k) c[k] = rng.uniform(-1.0, 1.0);
  }
  const auto scalar_loss = [&]() {
    const ForwardResult f = forward(params, window, norm);
    double acc = 0.0;
    for (std::size_t t = 0; t < window.size(); ++t) {
      for (int k = 0; k < 3; ++k) {
        acc += coeff[t][k] * f.refined[t].omega[k];
        acc += coeff[t][3 + k] * f.refined[t].accel[k];
      }
    }
    return acc;
  };

  const ForwardResult f = forward(params, window, norm);
  const BackwardResult back = backward(params, f.cache, coeff);

  ErrTracker t;
  for (std::size_t i = 0; i < window.size(); ++i) {
    for (int c = 0; c < 6; ++c) {
      double& slot = c < 3 ? window[i].omega[c] : window[i].accel[c - 3];
      const double saved = slot;
      const double h = 1e-6 * std::max(1.0, std::abs(saved));
      slot = saved + h;
      const double fp = scalar_loss();
      slot = saved - h;
      const double fm = scalar_loss();
      slot = saved;
      t.add(back.input_grads[i][c], (fp - fm) / (2.0 * h));
    }
  }
  return make_entry("network BPTT input grads", t);
}

GradCheckEntry check_end_to_end(Rng& rng) {
  const NetworkConfig cfg = tiny_net_config();
  NetworkParams params = tiny_net_params(cfg, rng);
  TinyProblem p = make_tiny_problem(rng);
  const Normalizer norm = Normalizer::fit(p.raw);

  const auto scalar_loss = [&](const NetworkParams& pp) {
    const ForwardResult f = forward(pp, p.raw, norm);
    return total_loss(p.raw, f.refined, p.targets, p.aug, p.loss_cfg, p.scheme)
        .total;
  };

  const ForwardResult f = forward(params, p.raw, norm);
  const WindowLoss l =
      total_loss(p.raw, f.refined, p.targets, p.aug, p.loss_cfg, p.scheme);
  const BackwardResult back = backward(params, f.cache, l.grad_refined);

  ErrTracker t;
  for (std::size_t i = 0; i < params.flat.size(); ++i) {
    const double saved = params.flat[i];
    const double h = 1e-6 * std::max(1.0, std::abs(saved));
    params.flat[i] = saved + h;
    const double fp = scalar_loss(params);
    params.flat[i] = saved - h;
    const double fm = scalar_loss(params);
    params.flat[i] = saved;
    t.add(back.param_grads[i], (fp - fm) / (2.0 * h));
  }
  return make_entry("end-to-end loss grads (net -> integration -> losses)", t);
}

}  // namespace

std::vector<GradCheckEntry> run_gradient_checks(std::uint64_t seed) {
  Rng rng(seed);
  std::vector<GradCheckEntry> out;
  Rng r1 = rng.fork(1);
  out.push_back(
      check_preint_jacobians(r1, IntegrationScheme::kEuler, "preintegration Jacobians (euler)"));
  Rng r2 = rng.fork(2);
  out.push_back(check_preint_jacobians(r2, IntegrationScheme::kMidpoint,
                                       "preintegration Jacobians (midpoint)"));
  Rng r3 = rng.fork(3);
  out.push_back(check_loss_rotation(r3, false));
  Rng r4 = rng.fork(4);
  out.push_back(check_loss_rotation(r4, true));
  Rng r5 = rng.fork(5);
  out.push_back(check_loss_vec(r5));
  Rng r6 = rng.fork(6);
  out.push_back(check_loss_reg(r6));
  Rng r7 = rng.fork(7);
  out.push_back(check_total_loss_grad(r7));
  Rng r8 = rng.fork(8);
  out.push_back(check_bptt_params(r8));
  Rng r9 = rng.fork(9);
  out.push_back(check_bptt_inputs(r9));
  Rng r10 = rng.fork(10);
  out.push_back(check_end_to_end(r10));
  return out;
}

bool all_pass(const std::vector<GradCheckEntry>& entries) {
  for (const auto& e : entries) {
    if (!e.pass) return false;
  }
  return true;
}

}  // namespace obsint
