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

#include "obsint/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace obsint {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw std::runtime_error("config: " + path + ": " + what);
}

double get_num(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  return j.get<double>();
}

template <typename T>
T get_field(const json& j, const std::string& parent, const std::string& key,
            T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    fail(parent + "." + key, "wrong type");
  }
}

Vec3 get_vec3(const json& j, const std::string& path, const Vec3& fallback) {
  if (j.is_null()) return fallback;
  if (!j.is_array() || j.size() != 3) fail(path, "expected an array of 3 numbers");
  return Vec3(get_num(j[0], path), get_num(j[1], path), get_num(j[2], path));
}

Mat3 get_mat3(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 9) fail(path, "expected an array of 9 numbers");
  Mat3 m;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) m(r, c) = get_num(j[3 * r + c], path);
  }
  return m;
}

std::vector<Sinusoid> get_sinusoids(const json& j, const std::string& path) {
  std::vector<Sinusoid> out;
  if (!j.is_array()) fail(path, "expected an array of {amp,freq_hz,phase}");
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string p = path + "[" + std::to_string(i) + "]";
    const json& e = j[i];
    if (!e.is_object()) fail(p, "expected an object");
    Sinusoid s;
    s.amp = get_field(e, p, "amp", 0.0);
    s.freq_hz = get_field(e, p, "freq_hz", 0.0);
    s.phase = get_field(e, p, "phase", 0.0);
    out.push_back(s);
  }
  return out;
}

void parse_trajectory(const json& j, const std::string& path,
                      TrajectorySpec& spec) {
  spec.duration = get_field(j, path, "duration", spec.duration);
  spec.imu_rate = get_field(j, path, "imu_rate", spec.imu_rate);
  spec.seed = get_field(j, path, "seed", spec.seed);
  for (const char* key : {"position", "attitude"}) {
    if (!j.contains(key)) continue;
    const json& axes = j.at(key);
    const std::string p = path + "." + key;
    if (!axes.is_array() || axes.size() != 3) {
      fail(p, "expected 3 per-axis arrays");
    }
    for (int axis = 0; axis < 3; ++axis) {
      auto terms = get_sinusoids(axes[axis], p + "[" + std::to_string(axis) + "]");
      if (std::string(key) == "position") {
        spec.position[axis] = std::move(terms);
      } else {
        spec.attitude[axis] = std::move(terms);
      }
    }
  }
}

void parse_intrinsics(const json& j, const std::string& path,
                      ImuIntrinsics& intr) {
  intr.sigma_g = get_field(j, path, "sigma_g", intr.sigma_g);
  intr.sigma_a = get_field(j, path, "sigma_a", intr.sigma_a);
  intr.sigma_bg_walk = get_field(j, path, "sigma_bg_walk", intr.sigma_bg_walk);
  intr.sigma_ba_walk = get_field(j, path, "sigma_ba_walk", intr.sigma_ba_walk);
  if (j.contains("initial_bg")) {
    intr.initial_bg = get_vec3(j.at("initial_bg"), path + ".initial_bg",
                               intr.initial_bg);
  }
  if (j.contains("initial_ba")) {
    intr.initial_ba = get_vec3(j.at("initial_ba"), path + ".initial_ba",
                               intr.initial_ba);
  }
  if (j.contains("gyro_scale_misalignment")) {
    intr.gyro_scale_misalignment =
        get_mat3(j.at("gyro_scale_misalignment"), path + ".gyro_scale_misalignment");
  }
  if (j.contains("accel_scale_misalignment")) {
    intr.accel_scale_misalignment = get_mat3(
        j.at("accel_scale_misalignment"), path + ".accel_scale_misalignment");
  }
  if (intr.sigma_g < 0 || intr.sigma_a < 0 || intr.sigma_bg_walk < 0 ||
      intr.sigma_ba_walk < 0) {
    fail(path, "noise stds must be >= 0");
  }
}

json parse_override_value(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::exception&) {
    return json(text);  // bare string
  }
}

void apply_override(json& root, const std::string& expr) {
  const auto eq = expr.find('=');
  if (eq == std::string::npos) {
    throw std::runtime_error("config: --set expects key.path=value, got '" +
                             expr + "'");
  }
  const std::string path = expr.substr(0, eq);
  const json value = parse_override_value(expr.substr(eq + 1));
  json* node = &root;
  std::stringstream ss(path);
  std::string key;
  std::vector<std::string> keys;
  while (std::getline(ss, key, '.')) keys.push_back(key);
  if (keys.empty()) throw std::runtime_error("config: empty --set path");
  for (std::size_t i = 0; i + 1 < keys.size(); ++i) node = &(*node)[keys[i]];
  (*node)[keys.back()] = value;
}

}  // namespace

IntegrationScheme ExperimentConfig::integration_scheme() const {
  if (scheme == "euler") return IntegrationScheme::kEuler;
  if (scheme == "midpoint") return IntegrationScheme::kMidpoint;
  throw std::runtime_error("config: scheme: expected 'euler' or 'midpoint'");
}

void resolve_lambda(ExperimentConfig& cfg) {
  if (!cfg.lambda_scale.has_value()) return;
  const double rate = cfg.data.mode == "simulate" ? cfg.data.trajectory.imu_rate
                                                  : 200.0;
  const double per_sample_g = cfg.data.intrinsics.sigma_g * std::sqrt(rate);
  const double per_sample_a = cfg.data.intrinsics.sigma_a * std::sqrt(rate);
  for (int c = 0; c < 3; ++c) {
    cfg.loss.lambda_reg[c] = *cfg.lambda_scale * per_sample_g;
    cfg.loss.lambda_reg[3 + c] = *cfg.lambda_scale * per_sample_a;
  }
}

ExperimentConfig load_experiment_config(
    const std::string& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::runtime_error("config: " + path + ": " + e.what());
  }
  for (const std::string& o : overrides) apply_override(j, o);

  ExperimentConfig cfg;
  cfg.seed = get_field(j, "", "seed", cfg.seed);
  cfg.output_dir = get_field(j, "", "output_dir", cfg.output_dir);
  cfg.scheme = get_field(j, "", "scheme", cfg.scheme);
  (void)cfg.integration_scheme();  // validate

  if (j.contains("data")) {
    const json& d = j.at("data");
    cfg.data.mode = get_field(d, "data", "mode", cfg.data.mode);
    if (cfg.data.mode != "simulate" && cfg.data.mode != "csv") {
      fail("data.mode", "expected 'simulate' or 'csv'");
    }
    cfg.data.imu_csv = get_field(d, "data", "imu_csv", std::string());
    cfg.data.gt_csv = get_field(d, "data", "gt_csv", std::string());
    if (cfg.data.mode == "csv" &&
        (cfg.data.imu_csv.empty() || cfg.data.gt_csv.empty())) {
      fail("data.imu_csv / data.gt_csv", "required for csv mode");
    }
    if (d.contains("trajectory")) {
      parse_trajectory(d.at("trajectory"), "data.trajectory", cfg.data.trajectory);
    }
    if (d.contains("intrinsics")) {
      parse_intrinsics(d.at("intrinsics"), "data.intrinsics", cfg.data.intrinsics);
    }
    if (d.contains("gravity")) {
      cfg.data.gravity.g = get_vec3(d.at("gravity"), "data.gravity",
                                    cfg.data.gravity.g);
      const double mag = cfg.data.gravity.g.norm();
      if ((mag < 9.7 || mag > 9.9) && !get_field(d, "data", "gravity_override", false)) {
        fail("data.gravity",
             "|g| outside [9.7, 9.9]; set data.gravity_override=true to force");
      }
    }
  }

  if (j.contains("windows")) {
    const json& w = j.at("windows");
    WindowingConfig& wc = cfg.windows;
    wc.window_len = get_field(w, "windows", "window_len", wc.window_len);
    wc.stride = get_field(w, "windows", "stride", wc.stride);
    wc.random_offsets = get_field(w, "windows", "random_offsets", wc.random_offsets);
    wc.fractions = get_field(w, "windows", "fractions", wc.fractions);
    wc.train_frac = get_field(w, "windows", "train_frac", wc.train_frac);
    wc.val_frac = get_field(w, "windows", "val_frac", wc.val_frac);
    wc.augment = get_field(w, "windows", "augment", wc.augment);
    wc.refresh_per_epoch =
        get_field(w, "windows", "refresh_per_epoch", wc.refresh_per_epoch);
    wc.noise_sigma_g = get_field(w, "windows", "noise_sigma_g", wc.noise_sigma_g);
    wc.noise_sigma_a = get_field(w, "windows", "noise_sigma_a", wc.noise_sigma_a);
    wc.bias_max_g = get_field(w, "windows", "bias_max_g", wc.bias_max_g);
    wc.bias_max_a = get_field(w, "windows", "bias_max_a", wc.bias_max_a);
    if (wc.window_len < 2) fail("windows.window_len", "must be >= 2");
    if (wc.stride < 1) fail("windows.stride", "must be >= 1");
    if (wc.train_frac <= 0 || wc.train_frac + wc.val_frac >= 1.0) {
      fail("windows.train_frac/val_frac", "must leave room for a test split");
    }
  }

  if (j.contains("net")) {
    const json& n = j.at("net");
    cfg.net.n_layers = get_field(n, "net", "n_layers", cfg.net.n_layers);
    cfg.net.hidden = get_field(n, "net", "hidden", cfg.net.hidden);
    cfg.net.window_len = get_field(n, "net", "window_len", cfg.windows.window_len);
    cfg.net.residual_output =
        get_field(n, "net", "residual_output", cfg.net.residual_output);
    cfg.net.dt_channel = get_field(n, "net", "dt_channel", cfg.net.dt_channel);
    if (cfg.net.n_layers < 1) fail("net.n_layers", "must be >= 1");
    if (cfg.net.hidden < 1) fail("net.hidden", "must be >= 1");
  } else {
    cfg.net.window_len = cfg.windows.window_len;
  }

  if (j.contains("loss")) {
    const json& l = j.at("loss");
    LossConfig& lc = cfg.loss;
    lc.huber_delta_q = get_field(l, "loss", "huber_delta_q", lc.huber_delta_q);
    lc.huber_delta_v = get_field(l, "loss", "huber_delta_v", lc.huber_delta_v);
    lc.huber_delta_p = get_field(l, "loss", "huber_delta_p", lc.huber_delta_p);
    lc.reg_weight = get_field(l, "loss", "reg_weight", lc.reg_weight);
    if (l.contains("horizon_weights")) {
      lc.horizon_weights = l.at("horizon_weights").get<std::vector<double>>();
    }
    if (l.contains("lambda_reg")) {
      const json& lam = l.at("lambda_reg");
      if (lam.is_number()) {
        cfg.lambda_scale = lam.get<double>();
      } else if (lam.is_array() && lam.size() == 6) {
        for (int c = 0; c < 6; ++c) {
          lc.lambda_reg[c] = get_num(lam[c], "loss.lambda_reg");
        }
      } else {
        fail("loss.lambda_reg", "expected a scalar or an array of 6 numbers");
      }
    } else {
      cfg.lambda_scale = 3.0;
    }
    if (lc.huber_delta_q <= 0 || lc.huber_delta_v <= 0 || lc.huber_delta_p <= 0) {
      fail("loss.huber_delta_*", "must be > 0");
    }
  } else {
    cfg.lambda_scale = 3.0;
  }
  cfg.loss.horizon_fractions = cfg.windows.fractions;
  if (cfg.loss.horizon_weights.size() != cfg.loss.horizon_fractions.size()) {
    if (cfg.loss.horizon_weights.size() == 5 &&
        cfg.loss.horizon_fractions.size() != 5) {
      cfg.loss.horizon_weights.assign(cfg.loss.horizon_fractions.size(), 1.0);
    } else {
      fail("loss.horizon_weights", "length must match windows.fractions");
    }
  }

  if (j.contains("train")) {
    const json& t = j.at("train");
    TrainConfig& tc = cfg.train;
    tc.lr = get_field(t, "train", "lr", tc.lr);
    tc.batch_size = get_field(t, "train", "batch_size", tc.batch_size);
    tc.max_epochs = get_field(t, "train", "max_epochs", tc.max_epochs);
    tc.beta1 = get_field(t, "train", "beta1", tc.beta1);
    tc.beta2 = get_field(t, "train", "beta2", tc.beta2);
    tc.eps = get_field(t, "train", "eps", tc.eps);
    tc.grad_clip = get_field(t, "train", "grad_clip", tc.grad_clip);
    tc.cosine_decay = get_field(t, "train", "cosine_decay", tc.cosine_decay);
    tc.early_stop_patience =
        get_field(t, "train", "early_stop_patience", tc.early_stop_patience);
    if (!(tc.lr > 0)) fail("train.lr", "must be > 0");
    if (tc.batch_size < 1) fail("train.batch_size", "must be >= 1");
    if (tc.max_epochs < 0) fail("train.max_epochs", "must be >= 0");
  }
  cfg.train.seed = cfg.seed;

  if (j.contains("eval")) {
    const json& e = j.at("eval");
    EvalConfig& ec = cfg.eval;
    ec.n_frames = get_field(e, "eval", "n_frames", ec.n_frames);
    if (e.contains("horizons")) {
      ec.horizons = e.at("horizons").get<std::vector<double>>();
    }
    ec.start_stride = get_field(e, "eval", "start_stride", ec.start_stride);
    ec.split = get_field(e, "eval", "split", ec.split);
    if (ec.split != "all" && ec.split != "train" && ec.split != "val" &&
        ec.split != "test") {
      fail("eval.split", "expected all|train|val|test");
    }
    if (e.contains("reset_interval")) {
      ec.reset_interval = e.at("reset_interval").get<double>();
    }
    if (e.contains("max_rel_trans")) {
      ec.max_rel_trans = e.at("max_rel_trans").get<double>();
    }
    if (e.contains("max_rel_rot")) {
      ec.max_rel_rot = e.at("max_rel_rot").get<double>();
    }
    if (e.contains("max_traj_rmse")) {
      ec.max_traj_rmse = e.at("max_traj_rmse").get<double>();
    }
    if (ec.n_frames < 1) fail("eval.n_frames", "must be >= 1");
  }

  resolve_lambda(cfg);
  return cfg;
}

}  // namespace obsint
