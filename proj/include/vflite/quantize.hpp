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
#include <vector>

#include "vflite/masknet.hpp"

namespace vflite {

// Symmetric per-tensor int8 quantization, no zero point.
// scale = max|t| / 127 (1.0 for an all-zero tensor); q = round(t / scale)
// clamped to [-127, 127], so |t - q*scale| <= scale/2 per element.
struct QuantTensor {
  std::vector<int8_t> q;
  float scale = 1.0f;
};

struct QuantMat {
  int rows = 0, cols = 0;
  std::vector<int8_t> q;
  float scale = 1.0f;
  const int8_t* row(int r) const { return q.data() + static_cast<size_t>(r) * cols; }
};

// Quantized network: weight matrices int8, biases float32.
struct QuantAffine {
  QuantMat w;
  std::vector<float> b;
};
struct QuantLstmLayer {
  QuantMat w_x, w_h;
  std::vector<float> b;
};
struct QuantConvLayer {
  QuantMat k;
  std::vector<float> b;
};
struct QuantParams {
  std::optional<QuantConvLayer> conv;
  std::vector<QuantLstmLayer> lstm;
  QuantAffine mask;
  std::vector<QuantAffine> noise_hidden;
  QuantAffine noise_out;
};

QuantTensor quantize_tensor(std::span<const float> t);
std::vector<float> dequantize_tensor(const QuantTensor& t);

QuantParams quantize_params(const NetParams& p);

// Quantized streaming inference: activations are quantized per call from
// their own max-abs (dynamic range), products accumulate in int32, and the
// result is rescaled to float for biases and nonlinearities. Same
// interface and causality contract as the float forward_step.
StepOutput forward_step_quantized(const QuantParams& qp, const MaskNetConfig& cfg,
                                  StreamState& state, std::span<const float> frame,
                                  const DVector& dvec);

// Folds forward_step_quantized over the frames from a fresh state.
SequenceOutput forward_sequence_quantized(const QuantParams& qp,
                                          const MaskNetConfig& cfg,
                                          const FeatureSequence& frames,
                                          const DVector& dvec);

}  // namespace vflite
