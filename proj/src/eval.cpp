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

#include "obsint/eval.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "obsint/util.hpp"

namespace obsint {

namespace {

void check_aligned(const Dataset& ds, std::span<const ImuSample> meas) {
  if (ds.imu.size() != ds.gt.size()) {
    throw std::invalid_argument("eval: dataset is not aligned");
  }
  if (meas.size() != ds.imu.size()) {
    throw std::invalid_argument("eval: measurement count != dataset samples");
  }
}

}  // namespace

RelPoseResult relative_pose_rmse(const Dataset& aligned,
                                 std::span<const ImuSample> measurements,
                                 int n_frames, IntegrationScheme scheme,
                                 int start_stride) {
  check_aligned(aligned, measurements);
  const std::size_t n = aligned.imu.size();
  const auto frames = static_cast<std::size_t>(n_frames);
  if (n < frames + 1) {
    throw std::invalid_argument("relative_pose_rmse: insufficient samples");
  }
  const std::size_t stride = std::max(1, start_stride);
  const std::size_t n_starts = (n - frames - 1) / stride + 1;

  std::vector<double> trans_sq(n_starts, 0.0), rot_sq(n_starts, 0.0);
  parallel_for(n_starts, [&](std::size_t k) {
    const std::size_t s = k * stride;
    const auto window = measurements.subspan(s, frames + 1);
    const PreintegrationDelta d = preintegrate(window, scheme);
    const ImuState pred =
        propagate_state(gt_to_state(aligned.gt[s]), d, aligned.meta.gravity);
    const GtState& ref = aligned.gt[s + frames];
    trans_sq[k] = (pred.p - ref.p).squaredNorm();
    const double rot_err = so3::angular_distance(ref.q, pred.q);
    rot_sq[k] = rot_err * rot_err;
  });

  RelPoseResult out;
  double ts = 0.0, rs = 0.0;
  for (std::size_t k = 0; k < n_starts; ++k) {
    ts += trans_sq[k];
    rs += rot_sq[k];
  }
  out.n = static_cast<int>(n_starts);
  out.trans_rmse = std::sqrt(ts / static_cast<double>(n_starts));
  out.rot_rmse = std::sqrt(rs / static_cast<double>(n_starts));
  return out;
}

std::vector<DriftPoint> drift_curve(const Dataset& aligned,
                                    std::span<const ImuSample> measurements,
                                    std::span<const double> horizons_s,
                                    IntegrationScheme scheme,
                                    int start_stride) {
  check_aligned(aligned, measurements);
  const std::size_t n = aligned.imu.size();
  std::vector<DriftPoint> out;
  const double t_end = aligned.imu.back().t;

  for (double horizon : horizons_s) {
    if (!(horizon > 0.0) || aligned.imu.front().t + horizon > t_end) {
      throw std::invalid_argument("drift_curve: horizon exceeds data span");
    }
    const std::size_t stride = std::max(1, start_stride);
    // end index per start: first sample with t >= t_start + horizon
    std::vector<std::size_t> starts;
    for (std::size_t s = 0; s < n; s += stride) {
      if (aligned.imu[s].t + horizon > t_end) break;
      starts.push_back(s);
    }
    std::vector<double> pos_sq(starts.size()), rot_sq(starts.size()),
        vel_sq(starts.size());
    parallel_for(starts.size(), [&](std::size_t k) {
      const std::size_t s = starts[k];
      const double t_target = aligned.imu[s].t + horizon;
      auto it = std::lower_bound(
          aligned.imu.begin() + s, aligned.imu.end(), t_target,
          [](const ImuSample& a, double t) { return a.t < t; });
      std::size_t e = static_cast<std::size_t>(it - aligned.imu.begin());
      if (e >= n) e = n - 1;
      const auto window = measurements.subspan(s, e - s + 1);
      const PreintegrationDelta d = preintegrate(window, scheme);
      const ImuState pred =
          propagate_state(gt_to_state(aligned.gt[s]), d, aligned.meta.gravity);
      const GtState& ref = aligned.gt[e];
      pos_sq[k] = (pred.p - ref.p).squaredNorm();
      const double rot_err = so3::angular_distance(ref.q, pred.q);
      rot_sq[k] = rot_err * rot_err;
      vel_sq[k] = (pred.v - ref.v).squaredNorm();
    });
    DriftPoint pt;
    pt.horizon_s = horizon;
    pt.n = static_cast<int>(starts.size());
    double ps = 0.0, rs = 0.0, vs = 0.0;
    for (std::size_t k = 0; k < starts.size(); ++k) {
      ps += pos_sq[k];
      rs += rot_sq[k];
      vs += vel_sq[k];
    }
    const double inv = 1.0 / static_cast<double>(starts.size());
    pt.pos_rmse = std::sqrt(ps * inv);
    pt.rot_rmse = std::sqrt(rs * inv);
    pt.vel_rmse = std::sqrt(vs * inv);
    out.push_back(pt);
  }
  return out;
}

double trajectory_rmse(const Dataset& aligned,
                       std::span<const ImuSample> measurements,
                       std::optional<double> reset_interval,
                       IntegrationScheme scheme) {
  check_aligned(aligned, measurements);
  const std::size_t n = aligned.imu.size();
  if (n < 2) throw std::invalid_argument("trajectory_rmse: too few samples");

  ImuState state = gt_to_state(aligned.gt[0]);
  double anchor_t = aligned.imu[0].t;
  double sq_sum = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const auto pair = measurements.subspan(i, 2);
    const PreintegrationDelta d = preintegrate(pair, scheme);
    state = propagate_state(state, d, aligned.meta.gravity);
    const double t = aligned.imu[i + 1].t;
    sq_sum += (state.p - aligned.gt[i + 1].p).squaredNorm();
    if (reset_interval.has_value() && t - anchor_t >= *reset_interval) {
      state = gt_to_state(aligned.gt[i + 1]);
      anchor_t = t;
    }
  }
  return std::sqrt(sq_sum / static_cast<double>(n - 1));
}

void emit_report(std::span<const EvalReport> reports,
                 const std::string& out_dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);

  const auto open = [&](const std::string& name) {
    std::ofstream out(fs::path(out_dir) / name);
    if (!out) {
      throw std::runtime_error("emit_report: cannot write " +
                               (fs::path(out_dir) / name).string());
    }
    return out;
  };

  {
    std::ofstream out = open("relative_pose.csv");
    out << "sequence,method,n_starts,trans_rmse_m,rot_rmse_rad\n";
    char buf[512];
    for (const EvalReport& r : reports) {
      std::snprintf(buf, sizeof(buf), "%s,%s,%d,%.17g,%.17g\n",
                    r.sequence.c_str(), r.method.c_str(), r.rel.n,
                    r.rel.trans_rmse, r.rel.rot_rmse);
      out << buf;
    }
  }
  {
    std::ofstream out = open("drift.csv");
    out << "sequence,method,horizon_s,quantity,rmse\n";
    char buf[512];
    for (const EvalReport& r : reports) {
      for (const DriftPoint& d : r.drift) {
        const std::pair<const char*, double> rows[3] = {
            {"pos_m", d.pos_rmse}, {"rot_rad", d.rot_rmse}, {"vel_mps", d.vel_rmse}};
        for (const auto& [quantity, value] : rows) {
          std::snprintf(buf, sizeof(buf), "%s,%s,%.17g,%s,%.17g\n",
                        r.sequence.c_str(), r.method.c_str(), d.horizon_s,
                        quantity, value);
          out << buf;
        }
      }
    }
  }
  {
    std::ofstream out = open("trajectory.csv");
    out << "sequence,method,rmse_m\n";
    char buf[256];
    for (const EvalReport& r : reports) {
      std::snprintf(buf, sizeof(buf), "%s,%s,%.17g\n", r.sequence.c_str(),
                    r.method.c_str(), r.traj_rmse);
      out << buf;
    }
  }
}

}  // namespace obsint
