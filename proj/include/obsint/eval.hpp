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

#ifndef OBSINT_EVAL_HPP_
#define OBSINT_EVAL_HPP_

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "obsint/data.hpp"
#include "obsint/preintegration.hpp"

namespace obsint {

struct RelPoseResult {
  double trans_rmse = 0.0;  // m
  double rot_rmse = 0.0;    // rad, log-norm
  int n = 0;
};

// RMSE of the pose predicted by integrating n_frames inter-sample intervals
// of measurements from every start, against ground truth at the endpoint.
// The dataset must be aligned (gt at IMU timestamps, velocities present).
RelPoseResult relative_pose_rmse(const Dataset& aligned,
                                 std::span<const ImuSample> measurements,
                                 int n_frames = 10,
                                 IntegrationScheme scheme =
                                     IntegrationScheme::kMidpoint,
                                 int start_stride = 1);

struct DriftPoint {
  double horizon_s = 0.0;
  double pos_rmse = 0.0;
  double rot_rmse = 0.0;
  double vel_rmse = 0.0;
  int n = 0;
};

// Endpoint error after open-loop propagation over each horizon, seeded from
// ground truth at every start index.
std::vector<DriftPoint> drift_curve(const Dataset& aligned,
                                    std::span<const ImuSample> measurements,
                                    std::span<const double> horizons_s,
                                    IntegrationScheme scheme =
                                        IntegrationScheme::kMidpoint,
                                    int start_stride = 1);

// Positional RMSE of dead-reckoned propagation from the first ground-truth
// state over the whole sequence. reset_interval re-anchors the state at
// ground truth periodically (emulating exteroceptive correction).
double trajectory_rmse(const Dataset& aligned,
                       std::span<const ImuSample> measurements,
                       std::optional<double> reset_interval = std::nullopt,
                       IntegrationScheme scheme = IntegrationScheme::kMidpoint);

struct EvalReport {
  std::string sequence;
  std::string method;  // raw | refined
  RelPoseResult rel;
  std::vector<DriftPoint> drift;
  double traj_rmse = 0.0;
};

// Writes relative_pose.csv, drift.csv (one row per horizon/quantity) and
// trajectory.csv under out_dir. Throws when the directory is not writable.
void emit_report(std::span<const EvalReport> reports,
                 const std::string& out_dir);

}  // namespace obsint

#endif  // OBSINT_EVAL_HPP_
