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

#ifndef OBSINT_DATA_HPP_
#define OBSINT_DATA_HPP_

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "obsint/imu_model.hpp"
#include "obsint/losses.hpp"
#include "obsint/rng.hpp"

namespace obsint {

struct Sinusoid {
  double amp = 0.0;
  double freq_hz = 0.0;
  double phase = 0.0;
};

// Smooth analytic trajectory: per-axis sums of sinusoids for position (m)
// and for the attitude rotation vector (rad). Closed-form derivatives give
// exact body rates and specific forces for oracle tests.
struct TrajectorySpec {
  double duration = 60.0;  // s
  double imu_rate = 200.0;  // Hz
  std::uint64_t seed = 1;
  std::array<std::vector<Sinusoid>, 3> position;
  std::array<std::vector<Sinusoid>, 3> attitude;
};

struct TrajectoryPoint {
  Vec3 p = Vec3::Zero();
  Vec3 v = Vec3::Zero();
  Vec3 a = Vec3::Zero();  // global linear acceleration
  Quat q = so3::identity();
  Vec3 omega_body = Vec3::Zero();
};

TrajectoryPoint eval_trajectory(const TrajectorySpec& spec, double t);

struct GtState {
  double t = 0.0;
  Quat q = so3::identity();
  Vec3 p = Vec3::Zero();
  Vec3 v = Vec3::Zero();
  bool has_v = false;
};

struct DatasetMeta {
  GravityModel gravity;
  double imu_rate_hz = 0.0;
  std::string provenance;
  std::int64_t t0_ns = 0;  // absolute origin of the relative timestamps
  int dropped_duplicates = 0;
};

struct Dataset {
  std::vector<ImuSample> imu;
  std::vector<GtState> gt;
  DatasetMeta meta;
};

// Simulator side channel for oracle tests: noiseless measurements and the
// true bias trajectory.
struct SimTruth {
  std::vector<ImuSample> clean;
  std::vector<Vec3> bg, ba;
};

// Analytic trajectory -> noiseless ground truth + corrupted measurements.
// Deterministic in spec.seed.
Dataset simulate(const TrajectorySpec& spec, const ImuIntrinsics& intr,
                 const GravityModel& gravity, SimTruth* truth = nullptr);

// EuRoC-style CSV pair:
//   imu: timestamp_ns,wx,wy,wz,ax,ay,az
//   gt:  timestamp_ns,px,py,pz,qw,qx,qy,qz[,vx,vy,vz,...]
// Headers are auto-detected, rows are time-sorted, duplicate timestamps
// dropped (counted in meta). Malformed rows report file and line number.
Dataset load_euroc_csv(const std::string& imu_path, const std::string& gt_path);
void save_euroc_csv(const Dataset& ds, const std::string& imu_path,
                    const std::string& gt_path);

// Resamples ground truth at the IMU timestamps: lerp for position/velocity,
// shortest-arc slerp for attitude. IMU samples outside the ground-truth span
// are dropped; missing velocities are derived first. Throws on empty overlap.
Dataset align_ground_truth(const Dataset& ds);

// Central-difference velocities from positions (one-sided at the ends).
// Needs >= 3 poses.
std::vector<Vec3> derive_velocity(const std::vector<GtState>& gt);

enum class Split { kTrain, kVal, kTest };

struct TrainingWindow {
  std::vector<ImuSample> raw;  // augmented when augmentation is on
  ImuState s0, s1;             // ground-truth boundary states
  std::vector<HorizonTarget> targets;
  AugmentedBias aug;
  std::uint64_t noise_seed = 0;
  Split split = Split::kTrain;
};

struct WindowingConfig {
  int window_len = 200;
  int stride = 20;
  bool random_offsets = true;
  std::vector<double> fractions{0.2, 0.4, 0.6, 0.8, 1.0};
  double train_frac = 0.7;
  double val_frac = 0.15;  // remainder is test; splits gap by one window
  bool augment = false;
  // when set, augmentation is drawn fresh per epoch inside the trainer and
  // windows are cut clean; otherwise it is baked in here once per window
  bool refresh_per_epoch = false;
  double noise_sigma_g = 0.0;  // per-sample std added on top of raw
  double noise_sigma_a = 0.0;
  double bias_max_g = 0.02;  // rad/s
  double bias_max_a = 0.2;   // m/s^2
};

// Time-disjoint split index ranges with a one-window gap between them.
struct SplitRegions {
  std::size_t train_begin = 0, train_end = 0;
  std::size_t val_begin = 0, val_end = 0;
  std::size_t test_begin = 0, test_end = 0;

  std::pair<std::size_t, std::size_t> of(Split s) const;
};

SplitRegions split_regions(std::size_t n_samples, const WindowingConfig& cfg);

// Cuts an aligned dataset into training windows with per-horizon targets
// derived from ground truth. Augmentation (noise + constant bias, recorded
// per window) applies to train and val splits only.
std::vector<TrainingWindow> make_windows(const Dataset& aligned,
                                         const WindowingConfig& cfg, Rng& rng);

// Contiguous sub-dataset covering one split's region.
Dataset slice_dataset(const Dataset& aligned, std::size_t begin,
                      std::size_t end);

ImuState gt_to_state(const GtState& g);

}  // namespace obsint

#endif  // OBSINT_DATA_HPP_
