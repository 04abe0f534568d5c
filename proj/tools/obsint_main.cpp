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

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "obsint/config.hpp"
#include "obsint/data.hpp"
#include "obsint/eval.hpp"
#include "obsint/gradcheck.hpp"
#include "obsint/kernels.hpp"
#include "obsint/trainer.hpp"

namespace {

namespace fs = std::filesystem;
using namespace obsint;

// One process per output directory.
class OutputLock {
 public:
  explicit OutputLock(const std::string& dir) {
    fs::create_directories(dir);
    path_ = (fs::path(dir) / ".lock").string();
    fd_ = ::open(path_.c_str(), O_CREAT | O_RDWR, 0644);
    if (fd_ < 0 || ::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
      throw std::runtime_error("output directory '" + dir +
                               "' is locked by another obsint instance");
    }
  }
  ~OutputLock() {
    if (fd_ >= 0) {
      ::flock(fd_, LOCK_UN);
      ::close(fd_);
    }
  }
  OutputLock(const OutputLock&) = delete;
  OutputLock& operator=(const OutputLock&) = delete;

 private:
  std::string path_;
  int fd_ = -1;
};

struct CommonArgs {
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
};

ExperimentConfig load_config(const CommonArgs& args) {
  ExperimentConfig cfg =
      load_experiment_config(args.config_path, args.overrides);
  if (args.seed.has_value()) {
    cfg.seed = *args.seed;
    cfg.train.seed = *args.seed;
  }
  cfg.data.trajectory.seed = cfg.seed;
  return cfg;
}

Dataset load_dataset(const ExperimentConfig& cfg, SimTruth* truth = nullptr) {
  if (cfg.data.mode == "simulate") {
    return simulate(cfg.data.trajectory, cfg.data.intrinsics, cfg.data.gravity,
                    truth);
  }
  Dataset ds = load_euroc_csv(cfg.data.imu_csv, cfg.data.gt_csv);
  ds.meta.gravity = cfg.data.gravity;
  return ds;
}

// Runs the network over the dataset in window_len chunks; a trailing chunk
// shorter than 2 samples stays raw.
std::vector<ImuSample> refine_measurements(const NetworkParams& params,
                                           const Normalizer& norm,
                                           const Dataset& ds,
                                           std::size_t window_len) {
  std::vector<ImuSample> refined;
  refined.reserve(ds.imu.size());
  std::size_t i = 0;
  while (i < ds.imu.size()) {
    const std::size_t len = std::min(window_len, ds.imu.size() - i);
    if (len < 2) {
      refined.insert(refined.end(), ds.imu.begin() + i, ds.imu.end());
      break;
    }
    const std::span<const ImuSample> chunk(ds.imu.data() + i, len);
    ForwardResult f = forward(params, chunk, norm);
    refined.insert(refined.end(), f.refined.begin(), f.refined.end());
    i += len;
  }
  return refined;
}

void write_metrics_csv(const std::string& path,
                       const std::vector<EpochMetrics>& log, bool append) {
  const bool exists = fs::exists(path);
  std::ofstream out(path, append ? std::ios::app : std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  if (!append || !exists) {
    out << "epoch,train_loss,val_loss,lq,lv,lp,ld,wall_s\n";
  }
  char buf[512];
  for (const EpochMetrics& m : log) {
    std::snprintf(buf, sizeof(buf),
                  "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.3f\n", m.epoch,
                  m.train_loss, m.val_loss, m.lq, m.lv, m.lp, m.ld, m.wall_s);
    out << buf;
  }
}

int cmd_simulate(const CommonArgs& args) {
  ExperimentConfig cfg = load_config(args);
  OutputLock lock(cfg.output_dir);
  const Dataset ds = load_dataset(cfg);
  const fs::path out(cfg.output_dir);
  save_euroc_csv(ds, (out / "imu.csv").string(), (out / "gt.csv").string());
  nlohmann::json meta{{"provenance", ds.meta.provenance},
                      {"imu_rate_hz", ds.meta.imu_rate_hz},
                      {"n_samples", ds.imu.size()},
                      {"seed", cfg.seed},
                      {"gravity", {ds.meta.gravity.g.x(), ds.meta.gravity.g.y(),
                                   ds.meta.gravity.g.z()}}};
  std::ofstream meta_out(out / "meta.json");
  meta_out << meta.dump(2) << "\n";
  std::cerr << "wrote " << ds.imu.size() << " samples to " << cfg.output_dir
            << "\n";
  return 0;
}

int cmd_train(const CommonArgs& args, const std::string& resume_path) {
  ExperimentConfig cfg = load_config(args);
  OutputLock lock(cfg.output_dir);
  const IntegrationScheme scheme = cfg.integration_scheme();

  Dataset ds = load_dataset(cfg);
  ds = align_ground_truth(ds);
  Rng window_rng = Rng(cfg.seed).fork(0xDA7A);
  const std::vector<TrainingWindow> windows =
      make_windows(ds, cfg.windows, window_rng);
  std::cerr << "dataset: " << ds.imu.size() << " samples, " << windows.size()
            << " windows (kernels: " << kernels::active_name() << ")\n";

  std::optional<Checkpoint> resume;
  if (!resume_path.empty()) resume = load_checkpoint(resume_path);

  TrainAugmentation aug;
  if (cfg.windows.augment && cfg.windows.refresh_per_epoch) {
    aug.refresh_per_epoch = true;
    aug.noise_sigma_g = cfg.windows.noise_sigma_g;
    aug.noise_sigma_a = cfg.windows.noise_sigma_a;
    aug.bias_max_g = cfg.windows.bias_max_g;
    aug.bias_max_a = cfg.windows.bias_max_a;
  }

  const TrainResult result = train(windows, cfg.net, cfg.loss, cfg.train,
                                   scheme, &std::cerr, resume, aug);

  const fs::path out(cfg.output_dir);
  save_checkpoint(result.best, (out / "checkpoint.json").string());
  write_metrics_csv((out / "metrics.csv").string(), result.log,
                    resume.has_value());
  std::cerr << "best epoch " << result.best.epoch << " val_loss "
            << result.best.val_loss << "\n";
  return 0;
}

int cmd_eval(const CommonArgs& args, const std::string& checkpoint_path) {
  ExperimentConfig cfg = load_config(args);
  OutputLock lock(cfg.output_dir);
  const IntegrationScheme scheme = cfg.integration_scheme();

  Dataset ds = load_dataset(cfg);
  ds = align_ground_truth(ds);
  if (cfg.eval.split != "all") {
    const SplitRegions regions = split_regions(ds.imu.size(), cfg.windows);
    const Split which = cfg.eval.split == "train"  ? Split::kTrain
                        : cfg.eval.split == "val" ? Split::kVal
                                                  : Split::kTest;
    const auto [begin, end] = regions.of(which);
    ds = slice_dataset(ds, begin, end);
    std::cerr << "eval split '" << cfg.eval.split << "': " << ds.imu.size()
              << " samples\n";
  }
  const std::string sequence =
      cfg.data.mode == "simulate" ? "sim" : fs::path(cfg.data.imu_csv).stem().string();

  std::vector<EvalReport> reports;
  const auto evaluate = [&](const std::string& method,
                            std::span<const ImuSample> meas) {
    EvalReport r;
    r.sequence = sequence;
    r.method = method;
    r.rel = relative_pose_rmse(ds, meas, cfg.eval.n_frames, scheme,
                               cfg.eval.start_stride);
    r.drift = drift_curve(ds, meas, cfg.eval.horizons, scheme,
                          cfg.eval.start_stride);
    r.traj_rmse = trajectory_rmse(ds, meas, cfg.eval.reset_interval, scheme);
    reports.push_back(r);
    std::cerr << method << ": rel " << r.rel.trans_rmse << " m / "
              << r.rel.rot_rmse << " rad, traj " << r.traj_rmse << " m\n";
  };

  evaluate("raw", ds.imu);
  if (!checkpoint_path.empty()) {
    const Checkpoint ck = load_checkpoint(checkpoint_path);
    NetworkParams params(ck.net);
    params.flat = ck.flat_params;
    const std::vector<ImuSample> refined = refine_measurements(
        params, ck.norm, ds, static_cast<std::size_t>(ck.net.window_len));
    evaluate("refined", refined);
  }
  emit_report(reports, cfg.output_dir);

  // CI thresholds apply to the last method evaluated
  const EvalReport& final = reports.back();
  bool violated = false;
  if (cfg.eval.max_rel_trans && final.rel.trans_rmse > *cfg.eval.max_rel_trans)
    violated = true;
  if (cfg.eval.max_rel_rot && final.rel.rot_rmse > *cfg.eval.max_rel_rot)
    violated = true;
  if (cfg.eval.max_traj_rmse && final.traj_rmse > *cfg.eval.max_traj_rmse)
    violated = true;
  if (violated) {
    std::cerr << "regression thresholds violated\n";
    return 2;
  }
  return 0;
}

int cmd_gradcheck(const CommonArgs& args) {
  ExperimentConfig cfg = load_config(args);
  const auto entries = run_gradient_checks(cfg.seed);
  std::printf("%-60s %12s %10s %6s\n", "check", "err", "tol", "state");
  for (const auto& e : entries) {
    std::printf("%-60s %12.3e %10.1e %6s\n", e.name.c_str(), e.err, e.tol,
                e.pass ? "pass" : "FAIL");
  }
  return all_pass(entries) ? 0 : 1;
}

int cmd_predict(const CommonArgs& args, const std::string& checkpoint_path,
                double horizon) {
  ExperimentConfig cfg = load_config(args);
  OutputLock lock(cfg.output_dir);
  const IntegrationScheme scheme = cfg.integration_scheme();

  Dataset ds = load_dataset(cfg);
  ds = align_ground_truth(ds);

  std::vector<ImuSample> meas = ds.imu;
  if (!checkpoint_path.empty()) {
    const Checkpoint ck = load_checkpoint(checkpoint_path);
    NetworkParams params(ck.net);
    params.flat = ck.flat_params;
    meas = refine_measurements(params, ck.norm, ds,
                               static_cast<std::size_t>(ck.net.window_len));
  }

  const double t_end = horizon > 0.0
                           ? std::min(ds.imu.front().t + horizon, ds.imu.back().t)
                           : ds.imu.back().t;
  ImuState state = gt_to_state(ds.gt.front());

  const fs::path out_path = fs::path(cfg.output_dir) / "predicted.csv";
  std::ofstream out(out_path);
  if (!out) throw std::runtime_error("cannot write " + out_path.string());
  out << "t,px,py,pz,qw,qx,qy,qz,vx,vy,vz\n";
  char buf[768];
  const auto emit = [&](double t, const ImuState& s) {
    std::snprintf(buf, sizeof(buf),
                  "%.9f,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,"
                  "%.17g\n",
                  t, s.p.x(), s.p.y(), s.p.z(), s.q.w(), s.q.x(), s.q.y(),
                  s.q.z(), s.v.x(), s.v.y(), s.v.z());
    out << buf;
  };
  emit(ds.imu.front().t, state);
  for (std::size_t i = 0; i + 1 < meas.size() && ds.imu[i + 1].t <= t_end; ++i) {
    const PreintegrationDelta d =
        preintegrate(std::span(meas).subspan(i, 2), scheme);
    state = propagate_state(state, d, ds.meta.gravity);
    emit(ds.imu[i + 1].t, state);
  }
  std::cerr << "wrote " << out_path.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"observable-term inertial learning pipeline"};
  app.require_subcommand(1);

  CommonArgs common;
  std::string resume_path, checkpoint_path;
  double horizon = 0.0;

  const auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", common.config_path, "experiment config JSON")
        ->required();
    cmd->add_option("--seed", common.seed, "override config seed");
    cmd->add_option("--set", common.overrides,
                    "override config values, e.g. --set train.lr=0.001");
  };

  CLI::App* sim = app.add_subcommand("simulate", "generate a synthetic dataset");
  add_common(sim);
  CLI::App* train_cmd = app.add_subcommand("train", "train the refinement network");
  add_common(train_cmd);
  train_cmd->add_option("--resume", resume_path, "checkpoint to resume from");
  CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate raw (and refined) metrics");
  add_common(eval_cmd);
  eval_cmd->add_option("--checkpoint", checkpoint_path,
                       "checkpoint for refined metrics");
  CLI::App* grad = app.add_subcommand("gradcheck", "finite-difference gradient checks");
  add_common(grad);
  CLI::App* predict = app.add_subcommand("predict", "dead-reckon a trajectory");
  add_common(predict);
  predict->add_option("--checkpoint", checkpoint_path,
                      "checkpoint for refined measurements");
  predict->add_option("--horizon", horizon, "prediction horizon in seconds");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) return cmd_simulate(common);
    if (train_cmd->parsed()) return cmd_train(common, resume_path);
    if (eval_cmd->parsed()) return cmd_eval(common, checkpoint_path);
    if (grad->parsed()) return cmd_gradcheck(common);
    if (predict->parsed()) return cmd_predict(common, checkpoint_path, horizon);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
