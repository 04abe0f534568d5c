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

#ifndef OBSINT_CONFIG_HPP_
#define OBSINT_CONFIG_HPP_

#include <optional>
#include <string>
#include <vector>

#include "obsint/data.hpp"
#include "obsint/eval.hpp"
#include "obsint/losses.hpp"
#include "obsint/trainer.hpp"

namespace obsint {

struct DataConfig {
  std::string mode = "simulate";  // simulate | csv
  std::string imu_csv, gt_csv;
  TrajectorySpec trajectory;
  ImuIntrinsics intrinsics;
  GravityModel gravity;
};

struct EvalConfig {
  int n_frames = 10;
  std::vector<double> horizons{0.1, 0.5, 1.0, 2.0};
  int start_stride = 1;
  std::string split = "all";  // all | train | val | test
  std::optional<double> reset_interval;
  // optional CI regression thresholds; exceeded => nonzero exit
  std::optional<double> max_rel_trans;
  std::optional<double> max_rel_rot;
  std::optional<double> max_traj_rmse;
};

// One experiment = one JSON document. Field errors carry the JSON path.
struct ExperimentConfig {
  std::uint64_t seed = 1;
  std::string output_dir = "out";
  std::string scheme = "midpoint";
  DataConfig data;
  WindowingConfig windows;
  NetworkConfig net;
  LossConfig loss;
  // scalar lambda: multiple of the per-sample white-noise std per channel
  std::optional<double> lambda_scale;
  TrainConfig train;
  EvalConfig eval;

  IntegrationScheme integration_scheme() const;
};

// Parses the file, applies `--set path.to.key=value` overrides, validates.
ExperimentConfig load_experiment_config(
    const std::string& path, const std::vector<std::string>& overrides = {});

// Resolves LossConfig.lambda_reg from lambda_scale and the noise model when
// only the scalar form was given.
void resolve_lambda(ExperimentConfig& cfg);

}  // namespace obsint

#endif  // OBSINT_CONFIG_HPP_
