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

#ifndef OBSINT_TRAINER_HPP_
#define OBSINT_TRAINER_HPP_

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "obsint/data.hpp"
#include "obsint/losses.hpp"
#include "obsint/refine_net.hpp"

namespace obsint {

struct TrainConfig {
  double lr = 1e-4;
  int batch_size = 32;
  int max_epochs = 700;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t seed = 0;
  double grad_clip = 10.0;  // global norm bound, 0 disables
  bool cosine_decay = false;
  int early_stop_patience = 0;  // epochs without val improvement, 0 disables
};

struct AdamState {
  std::vector<double> m, v;
  long step = 0;

  explicit AdamState(std::size_t n) : m(n, 0.0), v(n, 0.0) {}
};

// One bias-corrected Adam update, after optional global-norm clipping.
// Non-finite gradients abort with the offending parameter group named.
void adam_step(NetworkParams& params, std::vector<double> grads,
               AdamState& state, const TrainConfig& cfg);

struct Checkpoint {
  NetworkConfig net;
  Normalizer norm;
  TrainConfig train;
  int epoch = 0;
  double val_loss = 0.0;
  std::vector<double> flat_params;
};

void save_checkpoint(const Checkpoint& ck, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

struct EpochMetrics {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double lq = 0.0, lv = 0.0, lp = 0.0, ld = 0.0;  // validation breakdown
  double wall_s = 0.0;
};

struct TrainResult {
  Checkpoint best;
  std::vector<EpochMetrics> log;
};

// Fresh augmentation draws for every visit of a train window. Regenerating
// noise per epoch stops the network from locking onto fixed noise patterns
// in overlapping windows; only corrections that generalize keep paying off.
struct TrainAugmentation {
  bool refresh_per_epoch = false;
  double noise_sigma_g = 0.0;  // per-sample std
  double noise_sigma_a = 0.0;
  double bias_max_g = 0.0;  // rad/s
  double bias_max_a = 0.0;  // m/s^2
};

// Shuffled mini-batch Adam over the train split with per-epoch validation;
// the checkpoint with the best validation loss is retained. Resuming from a
// checkpoint continues the epoch numbering. Throws on divergence
// (non-finite validation loss) and on empty train/val splits.
TrainResult train(const std::vector<TrainingWindow>& windows,
                  const NetworkConfig& net_cfg, const LossConfig& loss_cfg,
                  const TrainConfig& train_cfg, IntegrationScheme scheme,
                  std::ostream* progress = nullptr,
                  const std::optional<Checkpoint>& resume = std::nullopt,
                  const TrainAugmentation& aug = {});

}  // namespace obsint

#endif  // OBSINT_TRAINER_HPP_
