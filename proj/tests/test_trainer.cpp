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

#include <doctest.h>

#include "obsint/trainer.hpp"

using namespace obsint;

namespace {

NetworkConfig tiny_cfg() {
  NetworkConfig cfg;
  cfg.n_layers = 1;
  cfg.hidden = 8;
  cfg.window_len = 64;
  return cfg;
}

// noiseless sim with a constant bias: the one error the network can learn
// to subtract outright
std::vector<TrainingWindow> biased_windows() {
  TrajectorySpec spec;
  spec.duration = 30.0;
  spec.imu_rate = 200.0;
  spec.seed = 3;
  spec.position[0] = {{0.8, 0.4, 0.2}};
  spec.position[1] = {{0.5, 0.7, 1.0}};
  spec.position[2] = {{0.3, 0.5, 0.6}};
  spec.attitude[0] = {{0.3, 0.4, 0.0}};
  spec.attitude[1] = {{0.4, 0.3, 0.8}};
  spec.attitude[2] = {{0.2, 0.6, 0.3}};
  ImuIntrinsics intr;
  intr.initial_bg = Vec3(0.01, -0.008, 0.012);
  intr.initial_ba = Vec3(0.05, 0.04, -0.06);
  GravityModel g;
  const Dataset ds = align_ground_truth(simulate(spec, intr, g));

  WindowingConfig wc;
  wc.window_len = 64;
  wc.stride = 64;
  wc.random_offsets = false;
  wc.fractions = {0.5, 1.0};
  wc.augment = false;
  Rng rng(9);
  return make_windows(ds, wc, rng);
}

LossConfig smoke_loss_cfg() {
  LossConfig lc;
  lc.horizon_fractions = {0.5, 1.0};
  lc.horizon_weights = {1.0, 1.0};
  // dead zone wide enough to admit the constant-bias correction
  lc.lambda_reg << 0.05, 0.05, 0.05, 0.3, 0.3, 0.3;
  return lc;
}

}  // namespace

TEST_CASE("adam_step: zero gradients leave params, advance the step") {
  const NetworkConfig cfg = tiny_cfg();
  Rng rng(1);
  NetworkParams params = init_params(cfg, rng);
  const std::vector<double> before = params.flat;
  AdamState state(params.flat.size());
  TrainConfig tc;
  adam_step(params, std::vector<double>(params.flat.size(), 0.0), state, tc);
  CHECK(params.flat == before);
  CHECK(state.step == 1);
}

TEST_CASE("adam_step: first step is ~ -lr * sign(g)") {
  const NetworkConfig cfg = tiny_cfg();
  Rng rng(2);
  NetworkParams params = init_params(cfg, rng);
  const std::vector<double> before = params.flat;
  AdamState state(params.flat.size());
  TrainConfig tc;
  tc.lr = 1e-3;
  tc.grad_clip = 0.0;
  std::vector<double> grads(params.flat.size());
  Rng gr(3);
  for (double& g : grads) g = gr.uniform(0.5, 2.0) * (gr.uniform() < 0.5 ? -1 : 1);
  adam_step(params, grads, state, tc);
  for (std::size_t i = 0; i < grads.size(); ++i) {
    const double update = params.flat[i] - before[i];
    // m_hat = g, v_hat = g^2 after bias correction
    const double expected = -tc.lr * grads[i] / (std::abs(grads[i]) + tc.eps);
    CHECK(update == doctest::Approx(expected).epsilon(1e-9));
  }
}

TEST_CASE("adam_step: non-finite gradient names the parameter group") {
  const NetworkConfig cfg = tiny_cfg();
  Rng rng(4);
  NetworkParams params = init_params(cfg, rng);
  AdamState state(params.flat.size());
  TrainConfig tc;
  std::vector<double> grads(params.flat.size(), 0.0);
  const auto groups = param_layout(cfg);
  const ParamGroup& u_group = groups[1];  // l0.fwd.U
  grads[u_group.offset + 3] = std::nan("");
  try {
    adam_step(params, grads, state, tc);
    FAIL("expected an error");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find(u_group.name) != std::string::npos);
  }
}

TEST_CASE("checkpoint: save/load round trip and recorded val loss") {
  const auto windows = biased_windows();
  const NetworkConfig cfg = tiny_cfg();
  const LossConfig lc = smoke_loss_cfg();
  TrainConfig tc;
  tc.max_epochs = 0;  // zero-epoch run returns the initialized checkpoint
  tc.seed = 42;
  const TrainResult res =
      train(windows, cfg, lc, tc, IntegrationScheme::kMidpoint);
  CHECK(res.best.epoch == 0);
  CHECK(res.log.empty());

  const std::string path =
      (std::filesystem::temp_directory_path() / "obsint_ck.json").string();
  save_checkpoint(res.best, path);
  const Checkpoint back = load_checkpoint(path);
  CHECK(back.flat_params == res.best.flat_params);
  CHECK(back.epoch == res.best.epoch);
  CHECK(back.val_loss == res.best.val_loss);
  CHECK(back.norm.mean == res.best.norm.mean);

  // forward with the loaded params reproduces the recorded val loss
  NetworkParams params(back.net);
  params.flat = back.flat_params;
  double total = 0.0;
  int n = 0;
  for (const auto& w : windows) {
    if (w.split != Split::kVal) continue;
    const ForwardResult f = forward(params, w.raw, back.norm);
    total += total_loss(w.raw, f.refined, w.targets, w.aug, lc,
                        IntegrationScheme::kMidpoint)
                 .total;
    ++n;
  }
  CHECK(std::abs(total / n - back.val_loss) < 1e-9);
  std::filesystem::remove(path);
}

TEST_CASE("train: bit-reproducible with a fixed seed") {
  const auto windows = biased_windows();
  const NetworkConfig cfg = tiny_cfg();
  const LossConfig lc = smoke_loss_cfg();
  TrainConfig tc;
  tc.max_epochs = 3;
  tc.batch_size = 8;
  tc.lr = 1e-3;
  tc.seed = 7;
  const TrainResult a = train(windows, cfg, lc, tc, IntegrationScheme::kMidpoint);
  const TrainResult b = train(windows, cfg, lc, tc, IntegrationScheme::kMidpoint);
  CHECK(a.best.flat_params == b.best.flat_params);
  REQUIRE(a.log.size() == b.log.size());
  for (std::size_t i = 0; i < a.log.size(); ++i) {
    CHECK(a.log[i].train_loss == b.log[i].train_loss);
    CHECK(a.log[i].val_loss == b.log[i].val_loss);
  }
}

TEST_CASE("train: smoke benchmark cuts the val loss >= 10x on constant bias") {
  const auto windows = biased_windows();
  const NetworkConfig cfg = tiny_cfg();
  const LossConfig lc = smoke_loss_cfg();
  TrainConfig tc;
  tc.max_epochs = 50;
  tc.batch_size = 8;
  tc.lr = 2e-3;
  tc.seed = 11;
  const TrainResult res =
      train(windows, cfg, lc, tc, IntegrationScheme::kMidpoint);

  // initial val loss is recorded by the epoch-0 checkpoint of a 0-epoch run
  TrainConfig tc0 = tc;
  tc0.max_epochs = 0;
  const double initial =
      train(windows, cfg, lc, tc0, IntegrationScheme::kMidpoint).best.val_loss;
  CHECK(res.best.val_loss * 10.0 <= initial);

  // best checkpoint is never worse than any logged epoch
  for (const auto& m : res.log) CHECK(res.best.val_loss <= m.val_loss);

  // metric log is contiguous from epoch 1
  for (std::size_t i = 0; i < res.log.size(); ++i) {
    CHECK(res.log[i].epoch == static_cast<int>(i) + 1);
  }
}

TEST_CASE("train: resume continues the epoch numbering") {
  const auto windows = biased_windows();
  const NetworkConfig cfg = tiny_cfg();
  const LossConfig lc = smoke_loss_cfg();
  TrainConfig tc;
  tc.max_epochs = 2;
  tc.batch_size = 8;
  tc.seed = 13;
  const TrainResult first =
      train(windows, cfg, lc, tc, IntegrationScheme::kMidpoint);

  TrainConfig tc2 = tc;
  tc2.max_epochs = 4;
  Checkpoint resume = first.best;
  resume.epoch = 2;  // resume from the end of the first run
  const TrainResult second = train(windows, cfg, lc, tc2,
                                   IntegrationScheme::kMidpoint, nullptr,
                                   resume);
  REQUIRE(second.log.size() == 2);
  CHECK(second.log[0].epoch == 3);
  CHECK(second.log[1].epoch == 4);
}

TEST_CASE("train: empty splits are rejected") {
  auto windows = biased_windows();
  for (auto& w : windows) w.split = Split::kTrain;
  CHECK_THROWS_AS(train(windows, tiny_cfg(), smoke_loss_cfg(), TrainConfig{},
                        IntegrationScheme::kMidpoint),
                  std::invalid_argument);
}

TEST_CASE("train: divergence aborts with diagnostics") {
  const auto windows = biased_windows();
  const NetworkConfig cfg = tiny_cfg();
  const LossConfig lc = smoke_loss_cfg();
  TrainConfig tc;
  tc.max_epochs = 3;
  tc.batch_size = 8;
  tc.lr = 1e160;  // one step puts the squared norms past double range
  tc.grad_clip = 0.0;
  tc.seed = 1;
  CHECK_THROWS(train(windows, cfg, lc, tc, IntegrationScheme::kMidpoint));
}
