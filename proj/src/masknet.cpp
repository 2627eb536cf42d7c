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

#include "vflite/masknet.hpp"

#include <algorithm>
#include <cmath>

#include "vflite/error.hpp"
#include "vflite/net_math.hpp"
#include "vflite/rng.hpp"

namespace vflite {

void MaskNetConfig::validate() const {
  check(input_dim >= 1, "MaskNetConfig: input_dim must be positive");
  check(dvec_dim >= 1, "MaskNetConfig: dvec_dim must be positive");
  check(lstm_layers >= 1, "MaskNetConfig: need at least one LSTM layer");
  check(lstm_units >= 1, "MaskNetConfig: lstm_units must be positive");
  for (int h : head_hidden) check(h >= 1, "MaskNetConfig: head width must be positive");
  if (conv) {
    check(conv->kernel_width >= 1 && conv->kernel_width % 2 == 1,
          "MaskNetConfig: conv kernel width must be odd and positive");
    check(conv->channels >= 1, "MaskNetConfig: conv channels must be positive");
  }
}

template <typename T>
NetParamsT<T> zero_params_t(const MaskNetConfig& cfg) {
  cfg.validate();
  NetParamsT<T> p;
  if (cfg.conv) {
    p.conv.emplace();
    p.conv->k = MatT<T>::zeros(cfg.conv->channels, cfg.conv->kernel_width);
    p.conv->b.assign(cfg.conv->channels, T(0));
  }
  int in = cfg.lstm_input_dim();
  for (int l = 0; l < cfg.lstm_layers; ++l) {
    LstmLayerT<T> layer;
    layer.w_x = MatT<T>::zeros(4 * cfg.lstm_units, in);
    layer.w_h = MatT<T>::zeros(4 * cfg.lstm_units, cfg.lstm_units);
    layer.b.assign(4 * cfg.lstm_units, T(0));
    p.lstm.push_back(std::move(layer));
    in = cfg.lstm_units;
  }
  p.mask.w = MatT<T>::zeros(cfg.input_dim, cfg.lstm_units);
  p.mask.b.assign(cfg.input_dim, T(0));
  int hin = cfg.lstm_units;
  for (int h : cfg.head_hidden) {
    AffineT<T> a;
    a.w = MatT<T>::zeros(h, hin);
    a.b.assign(h, T(0));
    p.noise_hidden.push_back(std::move(a));
    hin = h;
  }
  p.noise_out.w = MatT<T>::zeros(1, hin);
  p.noise_out.b.assign(1, T(0));
  return p;
}

template NetParamsT<float> zero_params_t<float>(const MaskNetConfig&);
template NetParamsT<double> zero_params_t<double>(const MaskNetConfig&);

NetParams init_params(const MaskNetConfig& cfg, uint64_t seed) {
  NetParams p = zero_params_t<float>(cfg);
  Rng rng(seed);
  for_each_tensor(p, [&](const std::string&, TensorKind kind,
                         const std::vector<uint32_t>& shape, float* data, size_t n) {
    if (kind != TensorKind::kWeight) return;  // biases stay zero
    double s = 1.0 / std::sqrt(static_cast<double>(shape[1]));
    for (size_t i = 0; i < n; ++i)
      data[i] = static_cast<float>(rng.uniform(-s, s));
  });
  for (auto& layer : p.lstm)
    std::fill(layer.b.begin() + cfg.lstm_units,
              layer.b.begin() + 2 * cfg.lstm_units, 1.0f);
  return p;
}

namespace {

template <typename Src, typename Dst>
NetParamsT<Dst> convert_params(const NetParamsT<Src>& p) {
  NetParamsT<Dst> out;
  auto conv_mat = [](const MatT<Src>& m) {
    MatT<Dst> o;
    o.rows = m.rows;
    o.cols = m.cols;
    o.v.assign(m.v.begin(), m.v.end());
    return o;
  };
  auto conv_vec = [](const std::vector<Src>& v) {
    return std::vector<Dst>(v.begin(), v.end());
  };
  if (p.conv) {
    out.conv.emplace();
    out.conv->k = conv_mat(p.conv->k);
    out.conv->b = conv_vec(p.conv->b);
  }
  for (const auto& l : p.lstm)
    out.lstm.push_back({conv_mat(l.w_x), conv_mat(l.w_h), conv_vec(l.b)});
  out.mask = {conv_mat(p.mask.w), conv_vec(p.mask.b)};
  for (const auto& a : p.noise_hidden)
    out.noise_hidden.push_back({conv_mat(a.w), conv_vec(a.b)});
  out.noise_out = {conv_mat(p.noise_out.w), conv_vec(p.noise_out.b)};
  return out;
}

}  // namespace

NetParamsD to_double(const NetParams& p) { return convert_params<float, double>(p); }
NetParams to_float(const NetParamsD& p) { return convert_params<double, float>(p); }

size_t param_count(const MaskNetConfig& cfg) {
  NetParamsT<float> p = zero_params_t<float>(cfg);
  size_t total = 0;
  for_each_tensor(p, [&](const std::string&, TensorKind, const std::vector<uint32_t>&,
                         const float*, size_t n) { total += n; });
  return total;
}

std::vector<double> flatten(const NetParamsD& p) {
  std::vector<double> flat;
  for_each_tensor(p, [&](const std::string&, TensorKind, const std::vector<uint32_t>&,
                         const double* data, size_t n) {
    flat.insert(flat.end(), data, data + n);
  });
  return flat;
}

NetParamsD unflatten(const MaskNetConfig& cfg, std::span<const double> flat) {
  NetParamsD p = zero_params_t<double>(cfg);
  size_t off = 0;
  for_each_tensor(p, [&](const std::string&, TensorKind, const std::vector<uint32_t>&,
                         double* data, size_t n) {
    check(off + n <= flat.size(), "unflatten: parameter vector too short");
    std::copy(flat.begin() + off, flat.begin() + off + n, data);
    off += n;
  });
  check(off == flat.size(), "unflatten: parameter vector size mismatch");
  return p;
}

template <typename T>
StreamStateT<T> make_stream_state_t(const MaskNetConfig& cfg) {
  StreamStateT<T> s;
  s.h.assign(cfg.lstm_layers, std::vector<T>(cfg.lstm_units, T(0)));
  s.c.assign(cfg.lstm_layers, std::vector<T>(cfg.lstm_units, T(0)));
  return s;
}

template StreamStateT<float> make_stream_state_t<float>(const MaskNetConfig&);
template StreamStateT<double> make_stream_state_t<double>(const MaskNetConfig&);

StreamState make_stream_state(const MaskNetConfig& cfg) {
  return make_stream_state_t<float>(cfg);
}

namespace {

// Frequency-only conv, zero-padded "same"; output channel-major [c][f].
template <typename T>
void conv_forward(const ConvLayerT<T>& conv, std::span<const T> frame,
                  std::vector<T>& pre, std::vector<T>& act) {
  const int f_dim = static_cast<int>(frame.size());
  const int kw = conv.k.cols;
  const int half = kw / 2;
  pre.resize(static_cast<size_t>(conv.k.rows) * f_dim);
  act.resize(pre.size());
  for (int c = 0; c < conv.k.rows; ++c) {
    const T* kernel = conv.k.row(c);
    for (int f = 0; f < f_dim; ++f) {
      double acc = static_cast<double>(conv.b[c]);
      for (int j = 0; j < kw; ++j) {
        int src = f + j - half;
        if (src < 0 || src >= f_dim) continue;
        acc += static_cast<double>(kernel[j]) * static_cast<double>(frame[src]);
      }
      T z = static_cast<T>(acc);
      pre[static_cast<size_t>(c) * f_dim + f] = z;
      act[static_cast<size_t>(c) * f_dim + f] = z > T(0) ? z : T(0);
    }
  }
}

}  // namespace

template <typename T>
void forward_step_t(const NetParamsT<T>& p, const MaskNetConfig& cfg,
                    StreamStateT<T>& state, std::span<const T> frame,
                    std::span<const T> dvec, std::vector<T>& mask_out,
                    T* score_out, StepCache<T>* cache) {
  const int units = cfg.lstm_units;
  check(static_cast<int>(frame.size()) == cfg.input_dim,
        "forward_step: frame width mismatch");
  check(static_cast<int>(dvec.size()) == cfg.dvec_dim,
        "forward_step: d-vector dimension mismatch");
  check(static_cast<int>(state.h.size()) == cfg.lstm_layers &&
            static_cast<int>(state.h[0].size()) == units,
        "forward_step: stream state shape mismatch");

  // Input vector: optional conv along frequency, then d-vector concat.
  std::vector<T> input;
  input.reserve(cfg.lstm_input_dim());
  std::vector<T> conv_pre, conv_act;
  if (p.conv) {
    conv_forward(*p.conv, frame, conv_pre, conv_act);
    input.assign(conv_act.begin(), conv_act.end());
  } else {
    input.assign(frame.begin(), frame.end());
  }
  input.insert(input.end(), dvec.begin(), dvec.end());

  if (cache) {
    cache->frame.assign(frame.begin(), frame.end());
    cache->conv_pre = conv_pre;
    cache->input = input;
    cache->gate_i.resize(cfg.lstm_layers);
    cache->gate_f.resize(cfg.lstm_layers);
    cache->gate_g.resize(cfg.lstm_layers);
    cache->gate_o.resize(cfg.lstm_layers);
    cache->c_prev.resize(cfg.lstm_layers);
    cache->h_prev.resize(cfg.lstm_layers);
    cache->c.resize(cfg.lstm_layers);
    cache->tanh_c.resize(cfg.lstm_layers);
    cache->h.resize(cfg.lstm_layers);
  }

  std::vector<T> x = std::move(input);
  // The gate preactivation stays in double across both matvecs so the
  // streamed and batched paths are bit-identical.
  std::vector<double> z(static_cast<size_t>(4) * units);
  for (int l = 0; l < cfg.lstm_layers; ++l) {
    const LstmLayerT<T>& layer = p.lstm[l];
    check(layer.w_x.cols == static_cast<int>(x.size()),
          "forward_step: LSTM input width mismatch");
    for (int r = 0; r < 4 * units; ++r) z[r] = static_cast<double>(layer.b[r]);
    matvec_accumulate(layer.w_x, std::span<const T>(x), std::span<double>(z));
    matvec_accumulate(layer.w_h, std::span<const T>(state.h[l]), std::span<double>(z));

    if (cache) {
      cache->c_prev[l] = state.c[l];
      cache->h_prev[l] = state.h[l];
      cache->gate_i[l].resize(units);
      cache->gate_f[l].resize(units);
      cache->gate_g[l].resize(units);
      cache->gate_o[l].resize(units);
      cache->c[l].resize(units);
      cache->tanh_c[l].resize(units);
    }
    for (int u = 0; u < units; ++u) {
      double zi = sigmoid(z[u]);
      double zf = sigmoid(z[units + u]);
      double zg = std::tanh(z[2 * units + u]);
      double zo = sigmoid(z[3 * units + u]);
      double cv = zf * static_cast<double>(state.c[l][u]) + zi * zg;
      double tc = std::tanh(cv);
      state.c[l][u] = static_cast<T>(cv);
      state.h[l][u] = static_cast<T>(zo * tc);
      if (cache) {
        cache->gate_i[l][u] = static_cast<T>(zi);
        cache->gate_f[l][u] = static_cast<T>(zf);
        cache->gate_g[l][u] = static_cast<T>(zg);
        cache->gate_o[l][u] = static_cast<T>(zo);
        cache->c[l][u] = static_cast<T>(cv);
        cache->tanh_c[l][u] = static_cast<T>(tc);
      }
    }
    if (cache) cache->h[l] = state.h[l];
    x = state.h[l];
  }

  const std::vector<T>& h_top = state.h[cfg.lstm_layers - 1];

  // Mask head: sigmoid(affine(h_top)), kept strictly inside (0, 1).
  std::vector<T> mz(p.mask.b.begin(), p.mask.b.end());
  matvec_add(p.mask.w, std::span<const T>(h_top), std::span<T>(mz));
  mask_out.resize(cfg.input_dim);
  for (int f = 0; f < cfg.input_dim; ++f) {
    double m = sigmoid(static_cast<double>(mz[f]));
    if constexpr (std::is_same_v<T, float>)
      mask_out[f] = clamp_mask_open01(m);
    else
      mask_out[f] = clamp_mask_open01_d(m);
  }

  // Noise-type head: ReLU feedforward stack, raw affine score.
  std::vector<T> act(h_top.begin(), h_top.end());
  if (cache) {
    cache->head_pre.clear();
    cache->head_act.clear();
  }
  for (const auto& layer : p.noise_hidden) {
    std::vector<T> pre(layer.b.begin(), layer.b.end());
    matvec_add(layer.w, std::span<const T>(act), std::span<T>(pre));
    std::vector<T> next(pre.size());
    for (size_t i = 0; i < pre.size(); ++i) next[i] = pre[i] > T(0) ? pre[i] : T(0);
    if (cache) {
      cache->head_pre.push_back(pre);
      cache->head_act.push_back(next);
    }
    act = std::move(next);
  }
  std::vector<T> score(p.noise_out.b.begin(), p.noise_out.b.end());
  matvec_add(p.noise_out.w, std::span<const T>(act), std::span<T>(score));
  *score_out = score[0];

  if (cache) {
    cache->mask.assign(mask_out.begin(), mask_out.end());
    cache->noise_score = score[0];
  }
  ++state.frames_seen;
}

template void forward_step_t<float>(const NetParamsT<float>&, const MaskNetConfig&,
                                    StreamStateT<float>&, std::span<const float>,
                                    std::span<const float>, std::vector<float>&,
                                    float*, StepCache<float>*);
template void forward_step_t<double>(const NetParamsT<double>&, const MaskNetConfig&,
                                     StreamStateT<double>&, std::span<const double>,
                                     std::span<const double>, std::vector<double>&,
                                     double*, StepCache<double>*);

StepOutput forward_step(const NetParams& p, const MaskNetConfig& cfg,
                        StreamState& state, std::span<const float> frame,
                        const DVector& dvec) {
  StepOutput out;
  float score = 0.0f;
  forward_step_t<float>(p, cfg, state, frame,
                        std::span<const float>(dvec.values), out.mask, &score,
                        nullptr);
  out.noise_score = score;
  return out;
}

SequenceOutput forward_sequence(const NetParams& p, const MaskNetConfig& cfg,
                                const FeatureSequence& frames, const DVector& dvec) {
  cfg.validate();
  check(frames.cols == cfg.input_dim, "forward_sequence: frame width mismatch");
  check(dvec.dim() == cfg.dvec_dim, "forward_sequence: d-vector dimension mismatch");
  const int t_count = frames.rows;
  const int units = cfg.lstm_units;

  // Layer inputs for the whole sequence; starts as conv(frame) ++ dvec.
  std::vector<std::vector<float>> x(t_count);
  std::vector<float> conv_pre, conv_act;
  for (int t = 0; t < t_count; ++t) {
    std::vector<float> in;
    in.reserve(cfg.lstm_input_dim());
    if (p.conv) {
      conv_forward(*p.conv, frames.row(t), conv_pre, conv_act);
      in.assign(conv_act.begin(), conv_act.end());
    } else {
      in.assign(frames.row(t).begin(), frames.row(t).end());
    }
    in.insert(in.end(), dvec.values.begin(), dvec.values.end());
    x[t] = std::move(in);
  }

  // Run layer by layer: the input-side projection u_t = b + W_x x_t is
  // precomputed for the whole sequence, then the recurrence adds W_h h.
  // Accumulation order per element matches forward_step exactly.
  for (int l = 0; l < cfg.lstm_layers; ++l) {
    const LstmLayerT<float>& layer = p.lstm[l];
    std::vector<std::vector<double>> u(t_count);
    for (int t = 0; t < t_count; ++t) {
      u[t].resize(static_cast<size_t>(4) * units);
      for (int r = 0; r < 4 * units; ++r) {
        const float* row = layer.w_x.row(r);
        double acc = static_cast<double>(layer.b[r]);
        for (int c2 = 0; c2 < layer.w_x.cols; ++c2)
          acc += static_cast<double>(row[c2]) * static_cast<double>(x[t][c2]);
        u[t][r] = acc;
      }
    }
    std::vector<float> h(units, 0.0f), c(units, 0.0f);
    std::vector<double> z(static_cast<size_t>(4) * units);
    for (int t = 0; t < t_count; ++t) {
      for (int r = 0; r < 4 * units; ++r) {
        const float* row = layer.w_h.row(r);
        double acc = u[t][r];
        for (int c2 = 0; c2 < units; ++c2)
          acc += static_cast<double>(row[c2]) * static_cast<double>(h[c2]);
        z[r] = acc;
      }
      for (int uu = 0; uu < units; ++uu) {
        double zi = sigmoid(z[uu]);
        double zf = sigmoid(z[units + uu]);
        double zg = std::tanh(z[2 * units + uu]);
        double zo = sigmoid(z[3 * units + uu]);
        double cv = zf * static_cast<double>(c[uu]) + zi * zg;
        double tc = std::tanh(cv);
        c[uu] = static_cast<float>(cv);
        h[uu] = static_cast<float>(zo * tc);
      }
      x[t].assign(h.begin(), h.end());
    }
  }

  SequenceOutput out;
  out.masks.rows = t_count;
  out.masks.cols = cfg.input_dim;
  out.masks.v.resize(static_cast<size_t>(t_count) * cfg.input_dim);
  out.noise_scores.resize(t_count);
  for (int t = 0; t < t_count; ++t) {
    const std::vector<float>& h_top = x[t];
    std::vector<float> mz(p.mask.b.begin(), p.mask.b.end());
    matvec_add(p.mask.w, std::span<const float>(h_top), std::span<float>(mz));
    for (int f = 0; f < cfg.input_dim; ++f)
      out.masks.v[static_cast<size_t>(t) * cfg.input_dim + f] =
          clamp_mask_open01(sigmoid(static_cast<double>(mz[f])));

    std::vector<float> act(h_top.begin(), h_top.end());
    for (const auto& layer : p.noise_hidden) {
      std::vector<float> pre(layer.b.begin(), layer.b.end());
      matvec_add(layer.w, std::span<const float>(act), std::span<float>(pre));
      for (auto& v : pre) v = v > 0.0f ? v : 0.0f;
      act = std::move(pre);
    }
    std::vector<float> score(p.noise_out.b.begin(), p.noise_out.b.end());
    matvec_add(p.noise_out.w, std::span<const float>(act), std::span<float>(score));
    out.noise_scores[t] = score[0];
  }
  return out;
}

void apply_mask_frame(std::span<const float> s_in, std::span<const float> mask,
                      FeatureVariant variant, bool linear_domain,
                      std::span<float> out) {
  check(s_in.size() == mask.size() && s_in.size() == out.size(),
        "apply_mask: shape mismatch");
  for (size_t i = 0; i < s_in.size(); ++i) {
    float m = mask[i];
    if (!(m >= 0.0f && m <= 1.0f))
      throw ValueError("apply_mask: mask value outside [0, 1]");
    float s = s_in[i];
    if (m == 1.0f) {
      out[i] = s;
    } else if (m == 0.0f) {
      out[i] = 0.0f;
    } else if (variant == FeatureVariant::kFftMagnitude || !linear_domain) {
      out[i] = static_cast<float>(static_cast<double>(m) * s);
    } else {
      // Undo log(1+x), scale the energy, redo the log.
      double e = std::expm1(static_cast<double>(s));
      double v = std::log1p(static_cast<double>(m) * e);
      out[i] = std::min(static_cast<float>(v), s);
    }
  }
}

FeatureSequence apply_mask(const FeatureSequence& s_in, const Masks& masks,
                           bool linear_domain) {
  check(s_in.rows == masks.rows && s_in.cols == masks.cols,
        "apply_mask: shape mismatch");
  FeatureSequence out = FeatureSequence::zeros(s_in.variant, s_in.rows, s_in.cols,
                                               s_in.frame_hop_s);
  for (int t = 0; t < s_in.rows; ++t)
    apply_mask_frame(s_in.row(t), masks.row(t), s_in.variant, linear_domain,
                     out.row(t));
  return out;
}

}  // namespace vflite
