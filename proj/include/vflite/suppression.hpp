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

#include <span>
#include <string>

namespace vflite {

enum class SuppressionMode { kOff, kFixed, kAdaptive };

// Runtime suppression strength. Off pins w = 0 (filtering disabled),
// Fixed uses a constant w, Adaptive runs the moving-average recursion
// w_t = beta * w_{t-1} + (1 - beta) * (a * f + b), clamped to [0, 1].
struct SuppressionConfig {
  SuppressionMode mode = SuppressionMode::kFixed;
  double w = 1.0;      // fixed strength
  double a = 1.0;
  double b = 0.0;
  double beta = 0.8;

  void validate() const;
  // "off" | "fixed:W" | "adaptive" | "adaptive:a,b,beta"
  static SuppressionConfig parse(const std::string& text);
  std::string describe() const;
};

struct SuppressionState {
  double w_prev = 0.0;
};

// Initial w: the f = 0 steady state, clamp(a*0 + b).
SuppressionState make_suppression_state(const SuppressionConfig& cfg);

// Maps a raw hinge-trained score's decision margin [-1, +1] onto [0, 1].
double f_adapt(double noise_score);

// One recursion step; returns the new strength and stores it in `state`.
double update_strength(SuppressionState& state, double f,
                       const SuppressionConfig& cfg);

// Per-frame strength for any mode, advancing adaptive state.
double next_strength(SuppressionState& state, double noise_score,
                     const SuppressionConfig& cfg);

// S_out = w * S_enh + (1 - w) * S_in, cellwise. Bit-exact passthrough at
// the endpoints: w = 0 returns s_in, w = 1 returns s_enh.
void compensate(std::span<const float> s_enh, std::span<const float> s_in,
                double w, std::span<float> out);

}  // namespace vflite
