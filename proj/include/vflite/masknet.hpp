// Copyright 2026 The vflite Authors
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

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vflite/dsp.hpp"
#include "vflite/dvector.hpp"

namespace vflite {

// Frequency-only 1D convolution in front of the LSTM stack. Most model
// configurations run without it.
struct ConvConfig {
  int kernel_width = 5;
  int channels = 1;
};

struct MaskNetConfig {
  int input_dim = 512;  // F, must match the feature variant width
  int dvec_dim = kDVectorDim;
  std::optional<ConvConfig> conv;  // off by default
  int lstm_layers = 3;
  int lstm_units = 512;                  // per-layer width
  std::vector<int> head_hidden = {64, 64};  // noise-type classifier widths
  FeatureVariant variant = FeatureVariant::kStackedFilterbank;
  // Log-domain features are masked in the linear-energy domain
  // (log1p(m * expm1(s))); false applies the raw cellwise product.
  bool linear_domain_mask = true;

  // Width of the per-frame vector entering the first LSTM layer.
  int lstm_input_dim() const {
    int f = conv ? input_dim * conv->channels : input_dim;
    return f + dvec_dim;
  }
  void validate() const;
};

template <typename T>
struct MatT {
  int rows = 0, cols = 0;
  std::vector<T> v;  // row-major

  static MatT zeros(int r, int c) {
    return {r, c, std::vector<T>(static_cast<size_t>(r) * c, T(0))};
  }
  const T* row(int r) const { return v.data() + static_cast<size_t>(r) * cols; }
  T* row(int r) { return v.data() + static_cast<size_t>(r) * cols; }
};

template <typename T>
struct AffineT {
  MatT<T> w;          // out x in
  std::vector<T> b;   // out
};

// One uni-directional LSTM layer; gate rows are stacked [i, f, g, o],
// each block lstm_units tall.
template <typename T>
struct LstmLayerT {
  MatT<T> w_x;        // 4U x in
  MatT<T> w_h;        // 4U x U
  std::vector<T> b;   // 4U
};

template <typename T>
struct ConvLayerT {
  MatT<T> k;          // channels x kernel_width
  std::vector<T> b;   // channels
};

template <typename T>
struct NetParamsT {
  std::optional<ConvLayerT<T>> conv;
  std::vector<LstmLayerT<T>> lstm;
  AffineT<T> mask;                       // F x U
  std::vector<AffineT<T>> noise_hidden;  // ReLU feedforward stack
  AffineT<T> noise_out;                  // 1 x last hidden (raw score)
};

using NetParams = NetParamsT<float>;
using NetParamsD = NetParamsT<double>;

enum class TensorKind { kWeight, kBias };

// Visits every tensor in canonical order (conv, lstm0.., mask, noise..);
// the same order backs initialization, flattening, and VFM1 records.
// f(name, kind, shape, data, count).
template <typename T, typename F>
void for_each_tensor(NetParamsT<T>& p, F&& f) {
  auto mat = [&](const std::string& name, MatT<T>& m) {
    f(name, TensorKind::kWeight, std::vector<uint32_t>{uint32_t(m.rows), uint32_t(m.cols)},
      m.v.data(), m.v.size());
  };
  auto vec = [&](const std::string& name, std::vector<T>& b) {
    f(name, TensorKind::kBias, std::vector<uint32_t>{uint32_t(b.size())}, b.data(),
      b.size());
  };
  if (p.conv) {
    mat("conv.k", p.conv->k);
    vec("conv.b", p.conv->b);
  }
  for (size_t i = 0; i < p.lstm.size(); ++i) {
    const std::string s = "lstm" + std::to_string(i);
    mat(s + ".w_x", p.lstm[i].w_x);
    mat(s + ".w_h", p.lstm[i].w_h);
    vec(s + ".b", p.lstm[i].b);
  }
  mat("mask.w", p.mask.w);
  vec("mask.b", p.mask.b);
  for (size_t i = 0; i < p.noise_hidden.size(); ++i) {
    const std::string s = "noise" + std::to_string(i);
    mat(s + ".w", p.noise_hidden[i].w);
    vec(s + ".b", p.noise_hidden[i].b);
  }
  mat("noise_out.w", p.noise_out.w);
  vec("noise_out.b", p.noise_out.b);
}

template <typename T, typename F>
void for_each_tensor(const NetParamsT<T>& p, F&& f) {
  for_each_tensor(const_cast<NetParamsT<T>&>(p),
                  [&](const std::string& name, TensorKind kind,
                      const std::vector<uint32_t>& shape, T* data, size_t n) {
                    f(name, kind, shape, static_cast<const T*>(data), n);
                  });
}

// Zero-valued parameter set with the shapes the config dictates.
template <typename T>
NetParamsT<T> zero_params_t(const MaskNetConfig& cfg);

// Uniform init scaled by 1/sqrt(fan_in); LSTM forget-gate bias +1.
NetParams init_params(const MaskNetConfig& cfg, uint64_t seed);

NetParamsD to_double(const NetParams& p);
NetParams to_float(const NetParamsD& p);

size_t param_count(const MaskNetConfig& cfg);
std::vector<double> flatten(const NetParamsD& p);
NetParamsD unflatten(const MaskNetConfig& cfg, std::span<const double> flat);

// Per-stream recurrent state. The suppression strength w_prev lives here
// so a stream carries everything it needs across frames.
template <typename T>
struct StreamStateT {
  std::vector<std::vector<T>> h, c;  // per layer, length lstm_units
  double w_prev = 0.0;
  uint64_t frames_seen = 0;
};
using StreamState = StreamStateT<float>;

template <typename T>
StreamStateT<T> make_stream_state_t(const MaskNetConfig& cfg);
StreamState make_stream_state(const MaskNetConfig& cfg);

// Everything the backward pass needs from one forward step.
template <typename T>
struct StepCache {
  std::vector<T> frame;                    // raw input frame
  std::vector<T> conv_pre;                 // conv preactivation (if conv)
  std::vector<T> input;                    // concat(conv output | frame, dvec)
  std::vector<std::vector<T>> gate_i, gate_f, gate_g, gate_o;  // per layer
  std::vector<std::vector<T>> c_prev, h_prev, c, tanh_c, h;
  std::vector<T> mask;                     // sigmoid output
  std::vector<std::vector<T>> head_pre;    // noise head preactivations
  std::vector<std::vector<T>> head_act;    // post-ReLU
  T noise_score = T(0);
};

struct StepOutput {
  std::vector<float> mask;  // strictly inside (0, 1)
  float noise_score = 0.0f;
};

// Advances one stream by one frame. Causal: depends only on the current
// frame and the state.
StepOutput forward_step(const NetParams& p, const MaskNetConfig& cfg,
                        StreamState& state, std::span<const float> frame,
                        const DVector& dvec);

// Templated step used by the training path; fills `cache` when non-null.
template <typename T>
void forward_step_t(const NetParamsT<T>& p, const MaskNetConfig& cfg,
                    StreamStateT<T>& state, std::span<const T> frame,
                    std::span<const T> dvec, std::vector<T>& mask_out,
                    T* score_out, StepCache<T>* cache);

struct Masks {
  int rows = 0, cols = 0;
  std::vector<float> v;
  std::span<const float> row(int t) const {
    return {v.data() + static_cast<size_t>(t) * cols, static_cast<size_t>(cols)};
  }
};

struct SequenceOutput {
  Masks masks;
  std::vector<float> noise_scores;
};

// Batched forward from a fresh state: input projections for the whole
// sequence are computed up front, then the recurrence runs per layer.
// Equals folding forward_step over the frames.
SequenceOutput forward_sequence(const NetParams& p, const MaskNetConfig& cfg,
                                const FeatureSequence& frames, const DVector& dvec);

// Mask application. FFT magnitudes are multiplied cellwise; log-domain
// features are masked in the linear-energy domain unless linear_domain is
// false. Masks must lie in [0, 1]; output is clamped to <= s_in cellwise.
FeatureSequence apply_mask(const FeatureSequence& s_in, const Masks& masks,
                           bool linear_domain = true);
void apply_mask_frame(std::span<const float> s_in, std::span<const float> mask,
                      FeatureVariant variant, bool linear_domain,
                      std::span<float> out);

}  // namespace vflite
