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

#ifndef OBSINT_REFINE_NET_HPP_
#define OBSINT_REFINE_NET_HPP_

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "obsint/imu_model.hpp"
#include "obsint/rng.hpp"

namespace obsint {

using Vec6 = Eigen::Matrix<double, 6, 1>;

// Stacked bidirectional LSTM with one fully-connected head mapping the
// concatenated last-layer states to a per-timestep 6-vector. With
// residual_output the head output is a correction added to the raw
// measurements, so zero head weights leave the window untouched.
struct NetworkConfig {
  int n_layers = 2;
  int hidden = 64;
  int window_len = 200;
  int output_dim = 6;
  bool residual_output = true;
  bool dt_channel = false;      // feed sample spacing as an extra input
  bool variable_length = true;  // accept any window length >= 1

  int input_dim() const { return dt_channel ? 7 : 6; }
  bool operator==(const NetworkConfig&) const = default;
};

// Per-channel affine normalization of the 6 measurement channels, fit on
// training data. The channel mean is a global statistic, so the gravity
// scale drops out of the accelerometer channels without any attitude
// information entering.
struct Normalizer {
  std::array<double, 6> mean{};
  std::array<double, 6> std{1, 1, 1, 1, 1, 1};

  static Normalizer fit(std::span<const ImuSample> samples);
  static Normalizer identity() { return Normalizer{}; }
};

struct ParamGroup {
  std::string name;
  std::size_t offset = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t size() const { return rows * cols; }
};

// Gate blocks are ordered [input, forget, cell, output] along the 4H axis.
std::vector<ParamGroup> param_layout(const NetworkConfig& cfg);
std::size_t param_count(const NetworkConfig& cfg);

struct NetworkParams {
  NetworkConfig config;
  std::vector<double> flat;

  NetworkParams() = default;
  explicit NetworkParams(const NetworkConfig& c)
      : config(c), flat(param_count(c), 0.0) {}

  double* group_data(const ParamGroup& g) { return flat.data() + g.offset; }
  const double* group_data(const ParamGroup& g) const {
    return flat.data() + g.offset;
  }
};

// Scaled-uniform init (+-1/sqrt(hidden)) for input and recurrent weights,
// forget-gate bias 1, all other biases 0. Deterministic in the rng.
NetworkParams init_params(const NetworkConfig& cfg, Rng& rng);

// Everything backward needs: layer inputs and per-direction gate
// activations, cell and hidden sequences.
struct ForwardCache {
  NetworkConfig config;
  Normalizer norm;
  std::size_t t_len = 0;
  // layer_inputs[l] is the input sequence of layer l (t_len x dim); the
  // entry at n_layers is the head input (t_len x 2*hidden).
  std::vector<std::vector<double>> layer_inputs;
  struct DirectionTape {
    // each t_len x hidden, indexed by actual timestep
    std::vector<double> gate_i, gate_f, gate_g, gate_o, c, tanh_c, h;
  };
  // tapes[l][dir], dir 0 forward in time, dir 1 reversed
  std::vector<std::array<DirectionTape, 2>> tapes;
  std::vector<double> raw;      // t_len x 6 physical inputs
  std::vector<double> head_out; // t_len x 6, pre-residual, normalized scale
};

struct ForwardResult {
  std::vector<ImuSample> refined;
  ForwardCache cache;
};

// Runs the network over a window. Throws std::invalid_argument when the
// window length does not match a fixed-length config.
ForwardResult forward(const NetworkParams& params,
                      std::span<const ImuSample> window,
                      const Normalizer& norm);

struct BackwardResult {
  std::vector<double> param_grads;     // flat, same layout as params
  std::vector<Vec6> input_grads;       // d loss / d raw measurement
};

// Exact gradients of the scalar loss whose partials w.r.t. the refined
// outputs (physical units) are grad_refined. The cache must come from a
// forward pass with the same parameters.
BackwardResult backward(const NetworkParams& params, const ForwardCache& cache,
                        std::span<const Vec6> grad_refined);

}  // namespace obsint

#endif  // OBSINT_REFINE_NET_HPP_
