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

#include "obsint/refine_net.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

#include "obsint/kernels.hpp"

namespace obsint {

namespace {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

struct LayerOffsets {
  ParamGroup w, u, b;
};

struct Layout {
  std::vector<std::array<LayerOffsets, 2>> layers;  // [layer][dir]
  ParamGroup head_w, head_b;
};

Layout build_layout(const NetworkConfig& cfg) {
  Layout lo;
  const std::size_t h = static_cast<std::size_t>(cfg.hidden);
  std::size_t off = 0;
  lo.layers.resize(cfg.n_layers);
  for (int l = 0; l < cfg.n_layers; ++l) {
    const std::size_t d =
        l == 0 ? static_cast<std::size_t>(cfg.input_dim()) : 2 * h;
    for (int dir = 0; dir < 2; ++dir) {
      const std::string tag =
          "l" + std::to_string(l) + (dir == 0 ? ".fwd" : ".bwd");
      LayerOffsets& ofs = lo.layers[l][dir];
      ofs.w = {tag + ".W", off, 4 * h, d};
      off += ofs.w.size();
      ofs.u = {tag + ".U", off, 4 * h, h};
      off += ofs.u.size();
      ofs.b = {tag + ".b", off, 4 * h, 1};
      off += ofs.b.size();
    }
  }
  const std::size_t out = static_cast<std::size_t>(cfg.output_dim);
  lo.head_w = {"head.W", off, out, 2 * h};
  off += lo.head_w.size();
  lo.head_b = {"head.b", off, out, 1};
  return lo;
}

}  // namespace

std::vector<ParamGroup> param_layout(const NetworkConfig& cfg) {
  const Layout lo = build_layout(cfg);
  std::vector<ParamGroup> groups;
  for (const auto& layer : lo.layers) {
    for (const auto& dir : layer) {
      groups.push_back(dir.w);
      groups.push_back(dir.u);
      groups.push_back(dir.b);
    }
  }
  groups.push_back(lo.head_w);
  groups.push_back(lo.head_b);
  return groups;
}

std::size_t param_count(const NetworkConfig& cfg) {
  const auto groups = param_layout(cfg);
  return groups.back().offset + groups.back().size();
}

Normalizer Normalizer::fit(std::span<const ImuSample> samples) {
  Normalizer n;
  if (samples.empty()) return n;
  std::array<double, 6> sum{}, sumsq{};
  for (const ImuSample& s : samples) {
    for (int c = 0; c < 3; ++c) {
      sum[c] += s.omega[c];
      sumsq[c] += s.omega[c] * s.omega[c];
      sum[c + 3] += s.accel[c];
      sumsq[c + 3] += s.accel[c] * s.accel[c];
    }
  }
  const double inv_n = 1.0 / static_cast<double>(samples.size());
  for (int c = 0; c < 6; ++c) {
    n.mean[c] = sum[c] * inv_n;
    const double var = std::max(0.0, sumsq[c] * inv_n - n.mean[c] * n.mean[c]);
    n.std[c] = std::max(std::sqrt(var), 1e-8);
  }
  return n;
}

NetworkParams init_params(const NetworkConfig& cfg, Rng& rng) {
  NetworkParams params(cfg);
  const Layout lo = build_layout(cfg);
  const double k = 1.0 / std::sqrt(static_cast<double>(cfg.hidden));
  const std::size_t h = static_cast<std::size_t>(cfg.hidden);
  for (const auto& layer : lo.layers) {
    for (const auto& dir : layer) {
      for (std::size_t i = 0; i < dir.w.size(); ++i) {
        params.flat[dir.w.offset + i] = rng.uniform(-k, k);
      }
      for (std::size_t i = 0; i < dir.u.size(); ++i) {
        params.flat[dir.u.offset + i] = rng.uniform(-k, k);
      }
      // forget-gate bias block at [h, 2h)
      for (std::size_t i = h; i < 2 * h; ++i) {
        params.flat[dir.b.offset + i] = 1.0;
      }
    }
  }
  // Head stays zero: with residual output the freshly-initialized network is
  // the identity on measurements and the deviation penalty starts at zero.
  return params;
}

ForwardResult forward(const NetworkParams& params,
                      std::span<const ImuSample> window,
                      const Normalizer& norm) {
  const NetworkConfig& cfg = params.config;
  if (params.flat.size() != param_count(cfg)) {
    throw std::invalid_argument("forward: params do not match config");
  }
  const std::size_t t_len = window.size();
  if (t_len == 0) throw std::invalid_argument("forward: empty window");
  if (!cfg.variable_length &&
      t_len != static_cast<std::size_t>(cfg.window_len)) {
    throw std::invalid_argument("forward: window length does not match config");
  }

  const Layout lo = build_layout(cfg);
  const std::size_t h = static_cast<std::size_t>(cfg.hidden);
  const std::size_t d0 = static_cast<std::size_t>(cfg.input_dim());
  const auto& kern = kernels::active();

  ForwardResult res;
  ForwardCache& cache = res.cache;
  cache.config = cfg;
  cache.norm = norm;
  cache.t_len = t_len;
  cache.layer_inputs.resize(cfg.n_layers + 1);
  cache.tapes.resize(cfg.n_layers);
  cache.raw.resize(t_len * 6);
  cache.head_out.assign(t_len * 6, 0.0);

  // normalized input sequence
  std::vector<double>& x0 = cache.layer_inputs[0];
  x0.resize(t_len * d0);
  for (std::size_t t = 0; t < t_len; ++t) {
    const ImuSample& s = window[t];
    double* row = x0.data() + t * d0;
    for (int c = 0; c < 3; ++c) {
      cache.raw[t * 6 + c] = s.omega[c];
      cache.raw[t * 6 + 3 + c] = s.accel[c];
      row[c] = (s.omega[c] - norm.mean[c]) / norm.std[c];
      row[3 + c] = (s.accel[c] - norm.mean[3 + c]) / norm.std[3 + c];
    }
    if (cfg.dt_channel) {
      row[6] = t + 1 < t_len ? window[t + 1].t - s.t
                             : (t_len > 1 ? s.t - window[t - 1].t : 0.0);
    }
  }

  std::vector<double> z(4 * h);
  for (int l = 0; l < cfg.n_layers; ++l) {
    const std::size_t d = l == 0 ? d0 : 2 * h;
    const std::vector<double>& in = cache.layer_inputs[l];
    std::vector<double>& out = cache.layer_inputs[l + 1];
    out.assign(t_len * 2 * h, 0.0);
    for (int dir = 0; dir < 2; ++dir) {
      const LayerOffsets& ofs = lo.layers[l][dir];
      const double* w = params.group_data(ofs.w);
      const double* u = params.group_data(ofs.u);
      const double* b = params.group_data(ofs.b);
      ForwardCache::DirectionTape& tape = cache.tapes[l][dir];
      tape.gate_i.resize(t_len * h);
      tape.gate_f.resize(t_len * h);
      tape.gate_g.resize(t_len * h);
      tape.gate_o.resize(t_len * h);
      tape.c.resize(t_len * h);
      tape.tanh_c.resize(t_len * h);
      tape.h.resize(t_len * h);

      const double* h_prev = nullptr;
      const double* c_prev = nullptr;
      for (std::size_t step = 0; step < t_len; ++step) {
        const std::size_t t = dir == 0 ? step : t_len - 1 - step;
        std::memcpy(z.data(), b, 4 * h * sizeof(double));
        kern.gemv_acc(w, 4 * h, d, in.data() + t * d, z.data());
        if (h_prev != nullptr) {
          kern.gemv_acc(u, 4 * h, h, h_prev, z.data());
        }
        double* gi = tape.gate_i.data() + t * h;
        double* gf = tape.gate_f.data() + t * h;
        double* gg = tape.gate_g.data() + t * h;
        double* go = tape.gate_o.data() + t * h;
        double* ct = tape.c.data() + t * h;
        double* tc = tape.tanh_c.data() + t * h;
        double* ht = tape.h.data() + t * h;
        for (std::size_t j = 0; j < h; ++j) {
          gi[j] = sigmoid(z[j]);
          gf[j] = sigmoid(z[h + j]);
          gg[j] = std::tanh(z[2 * h + j]);
          go[j] = sigmoid(z[3 * h + j]);
          const double cp = c_prev != nullptr ? c_prev[j] : 0.0;
          ct[j] = gf[j] * cp + gi[j] * gg[j];
          tc[j] = std::tanh(ct[j]);
          ht[j] = go[j] * tc[j];
        }
        std::memcpy(out.data() + t * 2 * h + dir * h, ht, h * sizeof(double));
        h_prev = ht;
        c_prev = ct;
      }
    }
  }

  // head + residual
  const double* head_w = params.group_data(lo.head_w);
  const double* head_b = params.group_data(lo.head_b);
  const std::vector<double>& head_in = cache.layer_inputs[cfg.n_layers];
  res.refined.resize(t_len);
  for (std::size_t t = 0; t < t_len; ++t) {
    double* y = cache.head_out.data() + t * 6;
    std::memcpy(y, head_b, 6 * sizeof(double));
    kern.gemv_acc(head_w, 6, 2 * h, head_in.data() + t * 2 * h, y);
    ImuSample out_s;
    out_s.t = window[t].t;
    for (int c = 0; c < 3; ++c) {
      if (cfg.residual_output) {
        out_s.omega[c] = window[t].omega[c] + norm.std[c] * y[c];
        out_s.accel[c] = window[t].accel[c] + norm.std[3 + c] * y[3 + c];
      } else {
        out_s.omega[c] = norm.mean[c] + norm.std[c] * y[c];
        out_s.accel[c] = norm.mean[3 + c] + norm.std[3 + c] * y[3 + c];
      }
    }
    res.refined[t] = out_s;
  }
  return res;
}

BackwardResult backward(const NetworkParams& params, const ForwardCache& cache,
                        std::span<const Vec6> grad_refined) {
  const NetworkConfig& cfg = params.config;
  if (!(cache.config == cfg)) {
    throw std::invalid_argument("backward: cache does not match params config");
  }
  if (grad_refined.size() != cache.t_len) {
    throw std::invalid_argument("backward: grad length does not match cache");
  }
  const Layout lo = build_layout(cfg);
  const std::size_t h = static_cast<std::size_t>(cfg.hidden);
  const std::size_t t_len = cache.t_len;
  const auto& kern = kernels::active();
  const Normalizer& norm = cache.norm;

  BackwardResult res;
  res.param_grads.assign(params.flat.size(), 0.0);
  res.input_grads.assign(t_len, Vec6::Zero());

  // Head backward; refined = raw + std * y, so the de-normalization scale
  // multiplies into the head-output gradient.
  std::vector<double> d_above(t_len * 2 * h, 0.0);
  {
    const double* head_w = params.group_data(lo.head_w);
    double* g_head_w = res.param_grads.data() + lo.head_w.offset;
    double* g_head_b = res.param_grads.data() + lo.head_b.offset;
    const std::vector<double>& head_in = cache.layer_inputs[cfg.n_layers];
    std::array<double, 6> dy;
    for (std::size_t t = 0; t < t_len; ++t) {
      for (int c = 0; c < 6; ++c) dy[c] = norm.std[c] * grad_refined[t][c];
      for (int c = 0; c < 6; ++c) g_head_b[c] += dy[c];
      kern.ger_acc(g_head_w, 6, 2 * h, dy.data(), head_in.data() + t * 2 * h);
      kern.gemv_t_acc(head_w, 6, 2 * h, dy.data(), d_above.data() + t * 2 * h);
    }
  }

  // LSTM stack backward, top to bottom.
  std::vector<double> d_below;
  std::vector<double> dz(4 * h), dh(h), dc(h), dh_rec(h), dc_rec(h);
  for (int l = cfg.n_layers - 1; l >= 0; --l) {
    const std::size_t d =
        l == 0 ? static_cast<std::size_t>(cfg.input_dim()) : 2 * h;
    const std::vector<double>& in = cache.layer_inputs[l];
    d_below.assign(t_len * d, 0.0);
    for (int dir = 0; dir < 2; ++dir) {
      const LayerOffsets& ofs = lo.layers[l][dir];
      const double* w = params.group_data(ofs.w);
      const double* u = params.group_data(ofs.u);
      double* gw = res.param_grads.data() + ofs.w.offset;
      double* gu = res.param_grads.data() + ofs.u.offset;
      double* gb = res.param_grads.data() + ofs.b.offset;
      const ForwardCache::DirectionTape& tape = cache.tapes[l][dir];

      std::fill(dh_rec.begin(), dh_rec.end(), 0.0);
      std::fill(dc_rec.begin(), dc_rec.end(), 0.0);
      for (std::size_t step = 0; step < t_len; ++step) {
        // reverse of the processing order
        const std::size_t t = dir == 0 ? t_len - 1 - step : step;
        const bool first_step =
            (dir == 0 && t == 0) || (dir == 1 && t == t_len - 1);
        const std::size_t tp = dir == 0 ? t - 1 : t + 1;

        const double* gi = tape.gate_i.data() + t * h;
        const double* gf = tape.gate_f.data() + t * h;
        const double* gg = tape.gate_g.data() + t * h;
        const double* go = tape.gate_o.data() + t * h;
        const double* tc = tape.tanh_c.data() + t * h;
        const double* cp = first_step ? nullptr : tape.c.data() + tp * h;
        const double* hp = first_step ? nullptr : tape.h.data() + tp * h;

        for (std::size_t j = 0; j < h; ++j) {
          dh[j] = d_above[t * 2 * h + dir * h + j] + dh_rec[j];
          const double do_ = dh[j] * tc[j];
          dz[3 * h + j] = do_ * go[j] * (1.0 - go[j]);
          dc[j] = dh[j] * go[j] * (1.0 - tc[j] * tc[j]) + dc_rec[j];
          const double di = dc[j] * gg[j];
          dz[j] = di * gi[j] * (1.0 - gi[j]);
          const double dg = dc[j] * gi[j];
          dz[2 * h + j] = dg * (1.0 - gg[j] * gg[j]);
          const double cprev = cp != nullptr ? cp[j] : 0.0;
          const double df = dc[j] * cprev;
          dz[h + j] = df * gf[j] * (1.0 - gf[j]);
          dc_rec[j] = dc[j] * gf[j];
        }

        for (std::size_t j = 0; j < 4 * h; ++j) gb[j] += dz[j];
        kern.ger_acc(gw, 4 * h, d, dz.data(), in.data() + t * d);
        if (hp != nullptr) {
          kern.ger_acc(gu, 4 * h, h, dz.data(), hp);
        }
        kern.gemv_t_acc(w, 4 * h, d, dz.data(), d_below.data() + t * d);
        std::fill(dh_rec.begin(), dh_rec.end(), 0.0);
        kern.gemv_t_acc(u, 4 * h, h, dz.data(), dh_rec.data());
      }
    }
    if (l > 0) d_above.swap(d_below);
  }

  // gradient w.r.t. raw measurements: residual passthrough + network path
  // through the input normalization
  for (std::size_t t = 0; t < t_len; ++t) {
    for (int c = 0; c < 6; ++c) {
      const double g = d_below[t * cfg.input_dim() + c] / norm.std[c];
      if (cfg.residual_output) {
        res.input_grads[t][c] = grad_refined[t][c] + g;
      } else {
        res.input_grads[t][c] = g;
      }
    }
  }
  return res;
}

}  // namespace obsint
