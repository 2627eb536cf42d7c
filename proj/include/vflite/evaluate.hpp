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

#include <string>
#include <vector>

#include "vflite/enhance.hpp"
#include "vflite/mixer.hpp"

namespace vflite {

struct EvalOptions {
  std::vector<std::string> conditions = {"clean", "additive", "reverb"};
  FeatureConfig fcfg;
  SuppressionConfig suppression;
  double snr_lo_db = 1.0;
  double snr_hi_db = 10.0;
  double rt60_lo_s = 0.1;
  double rt60_hi_s = 0.5;
  // Cells with S_out below S_cln - epsilon count as over-suppressed, above
  // S_cln + epsilon as under-suppressed (log-feature units).
  double epsilon = 0.05;
  uint64_t seed = 0;
};

// One evaluation condition (clean, additive_speech, reverb_nonspeech, ...).
// Feature-domain proxy metrics against the aligned clean features.
struct EvalRow {
  std::string condition;
  double mse_enhanced = 0.0;
  double mse_unenhanced = 0.0;
  double over_suppression_rate = 0.0;
  double under_suppression_rate = 0.0;
  double mean_w = 0.0;
  uint64_t frames = 0;
  double realtime_factor = 0.0;  // processing time / audio duration
};

struct EvalReport {
  std::vector<EvalRow> rows;
};

// Suppression-rate / MSE metrics for one (output, clean) pair; exposed for
// reuse by tests and tools.
struct FrameMetrics {
  double sq_err_sum = 0.0;
  uint64_t over_cells = 0;
  uint64_t under_cells = 0;
  uint64_t cells = 0;
};
FrameMetrics feature_metrics(const FeatureSequence& out, const FeatureSequence& clean,
                             double epsilon);

EvalReport run_eval(const std::vector<ManifestRow>& manifest,
                    const MaskNetModel& model, const EvalOptions& opts);

std::string report_to_json(const EvalReport& report, const EvalOptions& opts,
                           const std::string& model_path);

}  // namespace vflite
