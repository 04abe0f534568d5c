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

#include "obsint/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "obsint/kernels.hpp"
#include "obsint/util.hpp"

namespace obsint {

void adam_step(NetworkParams& params, std::vector<double> grads,
               AdamState& state, const TrainConfig& cfg) {
  if (grads.size() != params.flat.size() || state.m.size() != grads.size()) {
    throw std::invalid_argument("adam_step: shape mismatch");
  }
  // Non-finite gradients are a hard error, reported per parameter group.
  for (const ParamGroup& g : param_layout(params.config)) {
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (!std::isfinite(grads[g.offset + i])) {
        throw std::runtime_error("adam_step: non-finite gradient in group '" +
                                 g.name + "'");
      }
    }
  }

  if (cfg.grad_clip > 0.0) {
    double sq = 0.0;
    for (double g : grads) sq += g * g;
    const double norm = std::sqrt(sq);
    if (norm > cfg.grad_clip) {
      const double scale = cfg.grad_clip / norm;
      for (double& g : grads) g *= scale;
    }
  }

  state.step += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  kernels::active().adam_update(params.flat.data(), state.m.data(),
                                state.v.data(), grads.data(), grads.size(),
                                cfg.lr, cfg.beta1, cfg.beta2, cfg.eps, bc1,
                                bc2);
}

namespace {

using nlohmann::json;

json net_to_json(const NetworkConfig& c) {
  return json{{"n_layers", c.n_layers},
              {"hidden", c.hidden},
              {"window_len", c.window_len},
              {"output_dim", c.output_dim},
              {"residual_output", c.residual_output},
              {"dt_channel", c.dt_channel},
              {"variable_length", c.variable_length}};
}

NetworkConfig net_from_json(const json& j) {
  NetworkConfig c;
  c.n_layers = j.at("n_layers").get<int>();
  c.hidden = j.at("hidden").get<int>();
  c.window_len = j.at("window_len").get<int>();
  c.output_dim = j.at("output_dim").get<int>();
  c.residual_output = j.at("residual_output").get<bool>();
  c.dt_channel = j.at("dt_channel").get<bool>();
  c.variable_length = j.at("variable_length").get<bool>();
  return c;
}

json train_to_json(const TrainConfig& c) {
  return json{{"lr", c.lr},
              {"batch_size", c.batch_size},
              {"max_epochs", c.max_epochs},
              {"beta1", c.beta1},
              {"beta2", c.beta2},
              {"eps", c.eps},
              {"seed", c.seed},
              {"grad_clip", c.grad_clip},
              {"cosine_decay", c.cosine_decay},
              {"early_stop_patience", c.early_stop_patience}};
}

TrainConfig train_from_json(const json& j) {
  TrainConfig c;
  c.lr = j.at("lr").get<double>();
  c.batch_size = j.at("batch_size").get<int>();
  c.max_epochs = j.at("max_epochs").get<int>();
  c.beta1 = j.at("beta1").get<double>();
  c.beta2 = j.at("beta2").get<double>();
  c.eps = j.at("eps").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.grad_clip = j.at("grad_clip").get<double>();
  c.cosine_decay = j.at("cosine_decay").get<bool>();
  c.early_stop_patience = j.at("early_stop_patience").get<int>();
  return c;
}

}  // namespace

void save_checkpoint(const Checkpoint& ck, const std::string& path) {
  json j;
  j["format_version"] = 1;
  j["net"] = net_to_json(ck.net);
  j["normalizer"] = {{"mean", ck.norm.mean}, {"std", ck.norm.std}};
  j["train"] = train_to_json(ck.train);
  j["epoch"] = ck.epoch;
  j["val_loss"] = ck.val_loss;
  json layout = json::array();
  for (const ParamGroup& g : param_layout(ck.net)) {
    layout.push_back({{"name", g.name}, {"rows", g.rows}, {"cols", g.cols}});
  }
  j["param_layout"] = layout;
  j["params"] = ck.flat_params;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path);
  out << j.dump() << "\n";
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path);
  json j;
  in >> j;
  if (j.at("format_version").get<int>() != 1) {
    throw std::runtime_error("unsupported checkpoint format in " + path);
  }
  Checkpoint ck;
  ck.net = net_from_json(j.at("net"));
  ck.norm.mean = j.at("normalizer").at("mean").get<std::array<double, 6>>();
  ck.norm.std = j.at("normalizer").at("std").get<std::array<double, 6>>();
  ck.train = train_from_json(j.at("train"));
  ck.epoch = j.at("epoch").get<int>();
  ck.val_loss = j.at("val_loss").get<double>();
  ck.flat_params = j.at("params").get<std::vector<double>>();
  if (ck.flat_params.size() != param_count(ck.net)) {
    throw std::runtime_error("checkpoint params do not match config in " + path);
  }
  return ck;
}

namespace {

struct EvalOut {
  double total = 0.0, lq = 0.0, lv = 0.0, lp = 0.0, ld = 0.0;
};

EvalOut eval_window_loss(const NetworkParams& params, const Normalizer& norm,
                         const TrainingWindow& w, const LossConfig& loss_cfg,
                         IntegrationScheme scheme) {
  const ForwardResult fwd = forward(params, w.raw, norm);
  const WindowLoss l =
      total_loss(w.raw, fwd.refined, w.targets, w.aug, loss_cfg, scheme);
  return {l.total, l.lq, l.lv, l.lp, l.ld};
}

}  // namespace

TrainResult train(const std::vector<TrainingWindow>& windows,
                  const NetworkConfig& net_cfg, const LossConfig& loss_cfg,
                  const TrainConfig& train_cfg, IntegrationScheme scheme,
                  std::ostream* progress,
                  const std::optional<Checkpoint>& resume,
                  const TrainAugmentation& aug) {
  std::vector<std::size_t> train_idx, val_idx;
  for (std::size_t i = 0; i < windows.size(); ++i) {
    if (windows[i].split == Split::kTrain) train_idx.push_back(i);
    if (windows[i].split == Split::kVal) val_idx.push_back(i);
  }
  if (train_idx.empty() || val_idx.empty()) {
    throw std::invalid_argument("train: need non-empty train and val splits");
  }

  Rng master(train_cfg.seed);
  Rng init_rng = master.fork(1);
  Rng shuffle_rng = master.fork(2);

  Normalizer norm;
  NetworkParams params(net_cfg);
  int start_epoch = 0;
  if (resume.has_value()) {
    if (!(resume->net == net_cfg)) {
      throw std::invalid_argument("train: resume checkpoint config mismatch");
    }
    norm = resume->norm;
    params.flat = resume->flat_params;
    start_epoch = resume->epoch;
  } else {
    std::vector<ImuSample> train_samples;
    for (std::size_t i : train_idx) {
      train_samples.insert(train_samples.end(), windows[i].raw.begin(),
                           windows[i].raw.end());
    }
    norm = Normalizer::fit(train_samples);
    params = init_params(net_cfg, init_rng);
  }

  AdamState adam(params.flat.size());

  const auto eval_val = [&]() {
    std::vector<EvalOut> outs(val_idx.size());
    parallel_for(val_idx.size(), [&](std::size_t k) {
      outs[k] =
          eval_window_loss(params, norm, windows[val_idx[k]], loss_cfg, scheme);
    });
    EvalOut mean;
    for (const EvalOut& o : outs) {
      mean.total += o.total;
      mean.lq += o.lq;
      mean.lv += o.lv;
      mean.lp += o.lp;
      mean.ld += o.ld;
    }
    const double inv = 1.0 / static_cast<double>(outs.size());
    mean.total *= inv;
    mean.lq *= inv;
    mean.lv *= inv;
    mean.lp *= inv;
    mean.ld *= inv;
    return mean;
  };

  TrainResult result;
  const EvalOut init_val = eval_val();
  result.best = Checkpoint{net_cfg,   norm,           train_cfg,
                           start_epoch, init_val.total, params.flat};
  int since_best = 0;

  const auto t_start = std::chrono::steady_clock::now();
  std::vector<std::vector<double>> batch_grads;
  std::vector<double> batch_losses;

  for (int epoch = start_epoch + 1; epoch <= train_cfg.max_epochs; ++epoch) {
    // Fisher-Yates over the train windows
    std::vector<std::size_t> order = train_idx;
    for (std::size_t i = order.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(shuffle_rng.uniform() * i);
      std::swap(order[i - 1], order[j]);
    }

    TrainConfig step_cfg = train_cfg;
    if (train_cfg.cosine_decay) {
      step_cfg.lr = train_cfg.lr * 0.5 *
                    (1.0 + std::cos(M_PI * static_cast<double>(epoch) /
                                    static_cast<double>(train_cfg.max_epochs)));
    }

    double train_loss_sum = 0.0;
    std::size_t n_seen = 0;
    for (std::size_t b = 0; b < order.size();
         b += static_cast<std::size_t>(train_cfg.batch_size)) {
      const std::size_t b_end = std::min(
          order.size(), b + static_cast<std::size_t>(train_cfg.batch_size));
      const std::size_t n_batch = b_end - b;
      batch_grads.assign(n_batch, {});
      batch_losses.assign(n_batch, 0.0);
      parallel_for(n_batch, [&](std::size_t k) {
        const TrainingWindow& w = windows[order[b + k]];
        const ImuSample* input_data = w.raw.data();
        std::vector<ImuSample> refreshed;
        AugmentedBias window_aug = w.aug;
        if (aug.refresh_per_epoch) {
          Rng arng = Rng(train_cfg.seed ^ 0xA06B1A5ULL)
                         .fork(static_cast<std::uint64_t>(epoch))
                         .fork(order[b + k]);
          window_aug.bg = arng.uniform_vec3(-aug.bias_max_g, aug.bias_max_g);
          window_aug.ba = arng.uniform_vec3(-aug.bias_max_a, aug.bias_max_a);
          refreshed = w.raw;
          for (ImuSample& s : refreshed) {
            s.omega += window_aug.bg + aug.noise_sigma_g * arng.gaussian_vec3();
            s.accel += window_aug.ba + aug.noise_sigma_a * arng.gaussian_vec3();
          }
          input_data = refreshed.data();
        }
        const std::span<const ImuSample> input(input_data, w.raw.size());
        const ForwardResult fwd = forward(params, input, norm);
        const WindowLoss l = total_loss(input, fwd.refined, w.targets,
                                        window_aug, loss_cfg, scheme);
        const BackwardResult back = backward(params, fwd.cache, l.grad_refined);
        batch_grads[k] = std::move(back.param_grads);
        batch_losses[k] = l.total;
      });
      // ordered reduction keeps the update bit-reproducible
      std::vector<double> grads(params.flat.size(), 0.0);
      for (std::size_t k = 0; k < n_batch; ++k) {
        kernels::active().axpy(1.0, batch_grads[k].data(), grads.data(),
                               grads.size());
        train_loss_sum += batch_losses[k];
      }
      const double inv_batch = 1.0 / static_cast<double>(n_batch);
      for (double& g : grads) g *= inv_batch;
      n_seen += n_batch;
      adam_step(params, std::move(grads), adam, step_cfg);
    }

    const EvalOut val = eval_val();
    if (!std::isfinite(val.total)) {
      throw std::runtime_error(
          "train: validation loss diverged (non-finite) at epoch " +
          std::to_string(epoch));
    }

    EpochMetrics m;
    m.epoch = epoch;
    m.train_loss = train_loss_sum / static_cast<double>(n_seen);
    m.val_loss = val.total;
    m.lq = val.lq;
    m.lv = val.lv;
    m.lp = val.lp;
    m.ld = val.ld;
    m.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                             t_start)
                   .count();
    result.log.push_back(m);

    if (val.total < result.best.val_loss) {
      result.best.epoch = epoch;
      result.best.val_loss = val.total;
      result.best.flat_params = params.flat;
      since_best = 0;
    } else {
      ++since_best;
    }

    if (progress != nullptr) {
      (*progress) << "epoch " << epoch << " train " << m.train_loss << " val "
                  << m.val_loss << " (lq " << m.lq << " lv " << m.lv << " lp "
                  << m.lp << " ld " << m.ld << ")\n";
    }

    if (train_cfg.early_stop_patience > 0 &&
        since_best >= train_cfg.early_stop_patience) {
      break;
    }
  }
  return result;
}

}  // namespace obsint
