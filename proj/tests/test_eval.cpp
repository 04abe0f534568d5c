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

#include <cmath>
#include <filesystem>
#include <fstream>

#include <doctest.h>

#include "obsint/eval.hpp"

using namespace obsint;

namespace {

TrajectorySpec motion_spec(double duration = 12.0) {
  TrajectorySpec spec;
  spec.duration = duration;
  spec.imu_rate = 200.0;
  spec.seed = 5;
  spec.position[0] = {{0.7, 0.4, 0.1}};
  spec.position[1] = {{0.5, 0.6, 1.2}};
  spec.position[2] = {{0.4, 0.5, 0.5}};
  spec.attitude[0] = {{0.3, 0.4, 0.2}};
  spec.attitude[1] = {{0.4, 0.3, 1.0}};
  spec.attitude[2] = {{0.3, 0.5, 0.7}};
  return spec;
}

Dataset noiseless_dataset(double duration = 12.0) {
  ImuIntrinsics intr;
  GravityModel g;
  return align_ground_truth(simulate(motion_spec(duration), intr, g));
}

}  // namespace

TEST_CASE("relative_pose_rmse: noiseless measurements hit the discretization "
          "floor") {
  const Dataset ds = noiseless_dataset();
  const RelPoseResult r = relative_pose_rmse(ds, ds.imu, 10);
  CHECK(r.n > 2000);
  CHECK(r.trans_rmse < 1e-5);
  CHECK(r.rot_rmse < 1e-5);
}

TEST_CASE("relative_pose_rmse: insufficient samples throws") {
  Dataset ds = noiseless_dataset();
  ds.imu.resize(5);
  ds.gt.resize(5);
  CHECK_THROWS_AS(relative_pose_rmse(ds, ds.imu, 10), std::invalid_argument);
}

TEST_CASE("drift_curve: errors shrink to zero as the horizon shrinks") {
  const Dataset ds = noiseless_dataset();
  const std::vector<double> horizons{0.01, 0.1, 1.0};
  const auto curve = drift_curve(ds, ds.imu, horizons, IntegrationScheme::kMidpoint, 10);
  REQUIRE(curve.size() == 3);
  CHECK(curve[0].pos_rmse < 2e-6);
  CHECK(curve[0].rot_rmse < 2e-6);
  // noiseless data stays near the floor everywhere
  CHECK(curve[2].pos_rmse < 1e-4);

  CHECK_THROWS_AS(drift_curve(ds, ds.imu, std::vector<double>{1e9}),
                  std::invalid_argument);
}

TEST_CASE("drift_curve: constant gyro bias grows rotation drift ~ |b| T") {
  // rotation-only motion with a constant gyro bias
  TrajectorySpec spec = motion_spec(8.0);
  spec.position = {};  // no translation
  ImuIntrinsics intr;
  intr.initial_bg = Vec3(0.01, 0, 0);
  GravityModel g;
  const Dataset ds = align_ground_truth(simulate(spec, intr, g));

  const std::vector<double> horizons{0.1, 0.25, 0.5};
  const auto curve = drift_curve(ds, ds.imu, horizons, IntegrationScheme::kMidpoint, 20);
  for (const DriftPoint& pt : curve) {
    const double expected = 0.01 * pt.horizon_s;
    CHECK(pt.rot_rmse == doctest::Approx(expected).epsilon(0.15));
  }
}

TEST_CASE("trajectory_rmse: noiseless floor, resets shrink the error") {
  const Dataset ds = noiseless_dataset();
  const double open_loop = trajectory_rmse(ds, ds.imu);
  CHECK(open_loop < 1e-2);  // 12 s dead reckoning on perfect data
  const double reset = trajectory_rmse(ds, ds.imu, 1.0);
  CHECK(reset <= open_loop);
  CHECK(reset < 1e-4);
}

TEST_CASE("metrics are invariant to a consistent rigid transform about z") {
  const Dataset ds = noiseless_dataset();
  const Quat rot = so3::exp(Vec3(0, 0, 1.1));  // keeps gravity fixed
  const Vec3 shift(10.0, -4.0, 2.5);
  Dataset moved = ds;
  for (GtState& g : moved.gt) {
    g.q = so3::mul(rot, g.q);
    g.p = so3::rot(rot) * g.p + shift;
    g.v = so3::rot(rot) * g.v;
  }
  const RelPoseResult a = relative_pose_rmse(ds, ds.imu, 10, IntegrationScheme::kMidpoint, 7);
  const RelPoseResult b = relative_pose_rmse(moved, moved.imu, 10, IntegrationScheme::kMidpoint, 7);
  CHECK(a.trans_rmse == doctest::Approx(b.trans_rmse).epsilon(1e-9));
  CHECK(a.rot_rmse == doctest::Approx(b.rot_rmse).epsilon(1e-9));

  const double ta = trajectory_rmse(ds, ds.imu);
  const double tb = trajectory_rmse(moved, moved.imu);
  CHECK(ta == doctest::Approx(tb).epsilon(1e-6));
}

TEST_CASE("emit_report: schema, empty reports, re-parse round trip") {
  namespace fs = std::filesystem;
  const std::string dir =
      (fs::temp_directory_path() / "obsint_report_test").string();
  fs::remove_all(dir);

  // empty list: header-only files
  emit_report({}, dir);
  {
    std::ifstream in(fs::path(dir) / "relative_pose.csv");
    std::string header;
    std::getline(in, header);
    CHECK(header == "sequence,method,n_starts,trans_rmse_m,rot_rmse_rad");
    std::string rest;
    CHECK(!std::getline(in, rest));
  }

  EvalReport r;
  r.sequence = "sim";
  r.method = "raw";
  r.rel = {0.0123456789012345, 0.00234567890123456, 42};
  r.drift = {{0.1, 1e-3, 2e-3, 3e-3, 10}, {0.5, 4e-3, 5e-3, 6e-3, 9}};
  r.traj_rmse = 0.777;
  emit_report(std::vector<EvalReport>{r}, dir);

  {
    std::ifstream in(fs::path(dir) / "drift.csv");
    std::string line;
    std::getline(in, line);  // header
    int rows = 0;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 6);  // one row per (horizon, quantity)
  }
  {
    std::ifstream in(fs::path(dir) / "relative_pose.csv");
    std::string line;
    std::getline(in, line);
    std::getline(in, line);
    // full-precision doubles survive the round trip
    const auto pos = line.rfind(',');
    CHECK(std::stod(line.substr(pos + 1)) == r.rel.rot_rmse);
  }
  fs::remove_all(dir);
}
