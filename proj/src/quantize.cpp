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

#include "vflite/quantize.hpp"

#include <algorithm>
#include <cmath>

#include "vflite/error.hpp"
#include "vflite/net_math.hpp"

namespace vflite {

namespace {

float quant_scale(std::span<const float> t) {
  float max_abs = 0.0f;
  for (float v : t) {
    if (!std::isfinite(v)) throw NumericError("quantize: non-finite value");
    max_abs = std::max(max_abs, std::abs(v));
  }
  return max_abs == 0.0f ? 1.0f : max_abs / 127.0f;
}

void quantize_into(std::span<const float> t, float scale, int8_t* out) {
  for (size_t i = 0; i < t.size(); ++i) {
    long q = std::lround(t[i] / scale);
    out[i] = static_cast<int8_t>(std::clamp(q, -127L, 127L));
  }
}

QuantMat quantize_mat(const MatT<float>& m) {
  QuantMat out;
  out.rows = m.rows;
  out.cols = m.cols;
  out.scale = quant_scale(m.v);
  out.q.resize(m.v.size());
  quantize_into(m.v, out.scale, out.q.data());
  return out;
}

// Dynamically quantized activation vector.
struct QuantVec {
  std::vector<int8_t> q;
  float scale = 1.0f;
};

QuantVec quantize_activations(std::span<const float> x) {
  QuantVec out;
  out.scale = quant_scale(x);
  out.q.resize(x.size());
  quantize_into(x, out.scale, out.q.data());
  return out;
}

// y += dequant(M qx): int8 x int8 products accumulated in int32.
void qmatvec_add(const QuantMat& m, const QuantVec& x, std::span<float> y) {
  check(m.cols == static_cast<int>(x.q.size()), "qmatvec: width mismatch");
  const float rescale = m.scale * x.scale;
  for (int r = 0; r < m.rows; ++r) {
    const int8_t* row = m.row(r);
    int32_t acc = 0;
    for (int c = 0; c < m.cols; ++c)
      acc += static_cast<int32_t>(row[c]) * static_cast<int32_t>(x.q[c]);
    y[r] += static_cast<float>(acc) * rescale;
  }
}

}  // namespace

QuantTensor quantize_tensor(std::span<const float> t) {
  QuantTensor out;
  out.scale = quant_scale(t);
  out.q.resize(t.size());
  quantize_into(t, out.scale, out.q.data());
  return out;
}

std::vector<float> dequantize_tensor(const QuantTensor& t) {
  std::vector<float> out(t.q.size());
  for (size_t i = 0; i < t.q.size(); ++i) out[i] = t.q[i] * t.scale;
  return out;
}

QuantParams quantize_params(const NetParams& p) {
  QuantParams q;
  if (p.conv) {
    q.conv.emplace();
    q.conv->k = quantize_mat(p.conv->k);
    q.conv->b = p.conv->b;
  }
  for (const auto& l : p.lstm)
    q.lstm.push_back({quantize_mat(l.w_x), quantize_mat(l.w_h), l.b});
  q.mask = {quantize_mat(p.mask.w), p.mask.b};
  for (const auto& a : p.noise_hidden)
    q.noise_hidden.push_back({quantize_mat(a.w), a.b});
  q.noise_out = {quantize_mat(p.noise_out.w), p.noise_out.b};
  return q;
}

StepOutput forward_step_quantized(const QuantParams& qp, const MaskNetConfig& cfg,
                                  StreamState& state, std::span<const float> frame,
                                  const DVector& dvec) {
  const int units = cfg.lstm_units;
  check(static_cast<int>(frame.size()) == cfg.input_dim,
        "forward_step_quantized: frame width mismatch");
  check(dvec.dim() == cfg.dvec_dim,
        "forward_step_quantized: d-vector dimension mismatch");
  check(static_cast<int>(state.h.size()) == cfg.lstm_layers &&
            static_cast<int>(state.h[0].size()) == units,
        "forward_step_quantized: stream state shape mismatch");

  std::vector<float> input;
  input.reserve(cfg.lstm_input_dim());
  if (qp.conv) {
    const int kw = qp.conv->k.cols;
    const int half = kw / 2;
    const int f_dim = cfg.input_dim;
    QuantVec qframe = quantize_activations(frame);
    input.resize(static_cast<size_t>(qp.conv->k.rows) * f_dim);
    const float rescale = qp.conv->k.scale * qframe.scale;
    for (int c = 0; c < qp.conv->k.rows; ++c) {
      const int8_t* kernel = qp.conv->k.row(c);
      for (int f = 0; f < f_dim; ++f) {
        int32_t acc = 0;
        for (int j = 0; j < kw; ++j) {
          int src = f + j - half;
          if (src < 0 || src >= f_dim) continue;
          acc += static_cast<int32_t>(kernel[j]) * static_cast<int32_t>(qframe.q[src]);
        }
        float z = static_cast<float>(acc) * rescale + qp.conv->b[c];
        input[static_cast<size_t>(c) * f_dim + f] = z > 0.0f ? z : 0.0f;
      }
    }
  } else {
    input.assign(frame.begin(), frame.end());
  }
  input.insert(input.end(), dvec.values.begin(), dvec.values.end());

  std::vector<float> x = std::move(input);
  for (int l = 0; l < cfg.lstm_layers; ++l) {
    const QuantLstmLayer& layer = qp.lstm[l];
    check(layer.w_x.cols == static_cast<int>(x.size()),
          "forward_step_quantized: LSTM input width mismatch");
    std::vector<float> z(layer.b);
    QuantVec qx = quantize_activations(x);
    qmatvec_add(layer.w_x, qx, z);
    QuantVec qh = quantize_activations(state.h[l]);
    qmatvec_add(layer.w_h, qh, z);
    for (int u = 0; u < units; ++u) {
      double zi = sigmoid(z[u]);
      double zf = sigmoid(z[units + u]);
      double zg = std::tanh(static_cast<double>(z[2 * units + u]));
      double zo = sigmoid(z[3 * units + u]);
      double cv = zf * static_cast<double>(state.c[l][u]) + zi * zg;
      double tc = std::tanh(cv);
      state.c[l][u] = static_cast<float>(cv);
      state.h[l][u] = static_cast<float>(zo * tc);
    }
    x = state.h[l];
  }

  const std::vector<float>& h_top = state.h[cfg.lstm_layers - 1];
  QuantVec qtop = quantize_activations(h_top);

  StepOutput out;
  std::vector<float> mz(qp.mask.b);
  qmatvec_add(qp.mask.w, qtop, mz);
  out.mask.resize(cfg.input_dim);
  for (int f = 0; f < cfg.input_dim; ++f)
    out.mask[f] = clamp_mask_open01(sigmoid(mz[f]));

  std::vector<float> act(h_top);
  QuantVec qact = std::move(qtop);
  for (const auto& layer : qp.noise_hidden) {
    std::vector<float> pre(layer.b);
    qmatvec_add(layer.w, qact, pre);
    for (auto& v : pre) v = v > 0.0f ? v : 0.0f;
    act = std::move(pre);
    qact = quantize_activations(act);
  }
  std::vector<float> score(qp.noise_out.b);
  qmatvec_add(qp.noise_out.w, qact, score);
  out.noise_score = score[0];

  ++state.frames_seen;
  return out;
}

SequenceOutput forward_sequence_quantized(const QuantParams& qp,
                                          const MaskNetConfig& cfg,
                                          const FeatureSequence& frames,
                                          const DVector& dvec) {
  StreamState state = make_stream_state(cfg);
  SequenceOutput out;
  out.masks.rows = frames.rows;
  out.masks.cols = cfg.input_dim;
  out.masks.v.resize(static_cast<size_t>(frames.rows) * cfg.input_dim);
  out.noise_scores.resize(frames.rows);
  for (int t = 0; t < frames.rows; ++t) {
    StepOutput step = forward_step_quantized(qp, cfg, state, frames.row(t), dvec);
    std::copy(step.mask.begin(), step.mask.end(),
              out.masks.v.begin() + static_cast<size_t>(t) * cfg.input_dim);
    out.noise_scores[t] = step.noise_score;
  }
  return out;
}

}  // namespace vflite
