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

#include "vflite/model_io.hpp"
#include "vflite/suppression.hpp"

namespace vflite {

struct EnhanceOptions {
  SuppressionConfig suppression;  // default: fixed w = 1 (full enhancement)
  bool collect_w_trace = false;   // keeps a per-frame trace (O(T) memory)
};

struct EnhanceStats {
  uint64_t frames = 0;
  double mean_w = 0.0;
  double proc_seconds = 0.0;
  double audio_seconds = 0.0;
  std::vector<float> w_trace;
};

// One stream: mask network step, suppression-strength update, Eq-style
// convex blend of enhanced and input features. Owns the recurrent and
// suppression state; memory is O(model), independent of stream length.
class FrameEnhancer {
 public:
  FrameEnhancer(const MaskNetModel& model, const DVector& dvec,
                const SuppressionConfig& scfg);

  // Consumes one input feature frame, writes the compensated output frame,
  // and returns the suppression strength used.
  double process(std::span<const float> s_in, std::span<float> s_out);

  uint64_t frames() const { return frames_; }

 private:
  const MaskNetModel& model_;
  DVector dvec_;
  SuppressionConfig scfg_;
  StreamState state_;
  SuppressionState sstate_;
  std::vector<float> enh_frame_;
  uint64_t frames_ = 0;
};

// Streaming enhancement of a WAV file into a VFF1 file with bounded
// memory. Returns timing and strength statistics.
EnhanceStats enhance_wav_file(const std::string& in_wav_path,
                              const MaskNetModel& model, const DVector& dvec,
                              const FeatureConfig& fcfg,
                              const std::string& out_vff_path,
                              const EnhanceOptions& opts);

// In-memory variant over an existing FeatureSequence.
FeatureSequence enhance_features(const MaskNetModel& model, const DVector& dvec,
                                 const FeatureSequence& s_in,
                                 const EnhanceOptions& opts,
                                 EnhanceStats* stats = nullptr);

}  // namespace vflite
