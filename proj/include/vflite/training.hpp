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
#include <span>
#include <vector>

#include "vflite/masknet.hpp"
#include "vflite/mixer.hpp"

namespace vflite {

struct LossConfig {
  double alpha = 10.0;            // asymmetric penalty factor, >= 1
  double noise_head_weight = 0.1; // lambda blending the hinge loss

  void validate() const;
};

struct TrainConfig {
  enum class Optimizer { kSgd, kAdam };

  double learning_rate = 1e-3;
  Optimizer optimizer = Optimizer::kAdam;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  int batch_size = 4;
  int steps = 100;
  double clip_norm = 5.0;  // global-norm gradient clip; <= 0 disables
  uint64_t seed = 0;

  void validate() const;
};

// Asymmetric penalty: x for x <= 0, alpha * x for x > 0. The d = 0 kink
// takes the x <= 0 branch.
double g_asym(double x, double alpha);

// Unnormalized sum over (t, f) of squared differences.
double l2_loss(const FeatureSequence& s_cln, const FeatureSequence& s_enh);

// Sum of g_asym(S_cln - S_enh, alpha)^2; equals l2_loss bit-exactly when
// alpha == 1 (identical accumulation order).
double asym_l2_loss(const FeatureSequence& s_cln, const FeatureSequence& s_enh,
                    double alpha);

// max(0, 1 - y~ * score) with y~ = 2*label - 1.
double hinge_loss(double score, int label);

// asym_l2_loss(clean, apply_mask(noisy, masks)) + lambda * sum_t hinge.
double total_loss(const MixtureExample& ex, const Masks& masks,
                  std::span<const float> noise_scores, const LossConfig& cfg,
                  bool linear_domain_mask = true);

struct LossBreakdown {
  double total = 0.0;
  double mask_loss = 0.0;   // asymmetric L2 term
  double noise_loss = 0.0;  // unweighted hinge sum
};

// Double-precision forward + loss over one example; the exact quantity
// example_backward differentiates.
LossBreakdown example_loss(const NetParamsD& p, const MaskNetConfig& cfg,
                           const MixtureExample& ex, const LossConfig& lcfg);

// Exact reverse-mode gradients (full-length BPTT) into *grads.
LossBreakdown example_backward(const NetParamsD& p, const MaskNetConfig& cfg,
                               const MixtureExample& ex, const LossConfig& lcfg,
                               NetParamsD* grads);

double global_grad_norm(const NetParamsD& g);

struct StepMetrics {
  int step = 0;
  double total = 0.0;
  double mask_loss = 0.0;
  double noise_loss = 0.0;
  double grad_norm = 0.0;
};

struct TrainResult {
  NetParams params;
  std::vector<StepMetrics> history;
};

// Mini-batch training over the dataset in fixed cyclic order. Per-example
// gradients may be computed in parallel but are averaged in example-index
// order, so runs are deterministic given (seed, dataset order). Quantized
// models are not trainable.
TrainResult train(const std::vector<MixtureExample>& dataset,
                  const MaskNetConfig& cfg, const LossConfig& lcfg,
                  const TrainConfig& tcfg, const NetParams* init = nullptr);

}  // namespace vflite
