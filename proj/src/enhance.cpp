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

#include "vflite/enhance.hpp"

#include <chrono>
#include <cmath>

#include "vflite/error.hpp"

namespace vflite {

FrameEnhancer::FrameEnhancer(const MaskNetModel& model, const DVector& dvec,
                             const SuppressionConfig& scfg)
    : model_(model), dvec_(dvec), scfg_(scfg) {
  model_.cfg.validate();
  scfg_.validate();
  check(dvec_.dim() == model_.cfg.dvec_dim,
        "FrameEnhancer: d-vector dimension mismatch");
  state_ = make_stream_state(model_.cfg);
  sstate_ = make_suppression_state(scfg_);
  state_.w_prev = sstate_.w_prev;
  enh_frame_.resize(model_.cfg.input_dim);
}

double FrameEnhancer::process(std::span<const float> s_in, std::span<float> s_out) {
  const MaskNetConfig& cfg = model_.cfg;
  StepOutput step = model_.quantized()
                        ? forward_step_quantized(model_.quant_params(), cfg, state_,
                                                 s_in, dvec_)
                        : forward_step(model_.float_params(), cfg, state_, s_in, dvec_);
  double w = next_strength(sstate_, step.noise_score, scfg_);
  state_.w_prev = sstate_.w_prev;
  apply_mask_frame(s_in, step.mask, cfg.variant, cfg.linear_domain_mask, enh_frame_);
  compensate(enh_frame_, s_in, w, s_out);
  for (float v : s_out)
    if (!std::isfinite(v)) throw NumericError("enhance: non-finite output frame");
  ++frames_;
  return w;
}

EnhanceStats enhance_wav_file(const std::string& in_wav_path,
                              const MaskNetModel& model, const DVector& dvec,
                              const FeatureConfig& fcfg,
                              const std::string& out_vff_path,
                              const EnhanceOptions& opts) {
  fcfg.validate();
  check(fcfg.variant == model.cfg.variant,
        "enhance: feature variant does not match the model");
  check(fcfg.feature_dim() == model.cfg.input_dim,
        "enhance: feature width does not match the model");

  WavStreamReader reader(in_wav_path);
  const int rate = reader.sample_rate_hz();
  const int win = fcfg.window_samples(rate);
  if (reader.total_samples() < static_cast<uint64_t>(win))
    throw ValueError("enhance: input shorter than one analysis window");

  double hop_s = fcfg.hop_samples(rate) / static_cast<double>(rate);
  if (fcfg.variant == FeatureVariant::kStackedFilterbank) hop_s *= fcfg.stride;

  auto start = std::chrono::steady_clock::now();
  StreamingExtractor extractor(fcfg, rate);
  FrameEnhancer enhancer(model, dvec, opts.suppression);
  VffStreamWriter writer(out_vff_path, fcfg.variant, fcfg.feature_dim(), hop_s);

  EnhanceStats stats;
  stats.audio_seconds = reader.total_samples() / static_cast<double>(rate);
  double w_sum = 0.0;

  std::vector<double> chunk(8192);
  std::vector<float> frame, out_frame(fcfg.feature_dim());
  bool done = false;
  while (!done) {
    size_t got = reader.read(chunk);
    if (got == 0) {
      extractor.finish();
      done = true;
    } else {
      extractor.push({chunk.data(), got});
    }
    while (extractor.pop(frame)) {
      double w = enhancer.process(frame, out_frame);
      writer.write_frame(out_frame);
      w_sum += w;
      ++stats.frames;
      if (opts.collect_w_trace) stats.w_trace.push_back(static_cast<float>(w));
    }
  }
  writer.close();
  stats.proc_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  stats.mean_w = stats.frames ? w_sum / stats.frames : 0.0;
  return stats;
}

FeatureSequence enhance_features(const MaskNetModel& model, const DVector& dvec,
                                 const FeatureSequence& s_in,
                                 const EnhanceOptions& opts, EnhanceStats* stats) {
  check(s_in.cols == model.cfg.input_dim,
        "enhance: feature width does not match the model");
  auto start = std::chrono::steady_clock::now();
  FrameEnhancer enhancer(model, dvec, opts.suppression);
  FeatureSequence out = FeatureSequence::zeros(s_in.variant, s_in.rows, s_in.cols,
                                               s_in.frame_hop_s);
  double w_sum = 0.0;
  for (int t = 0; t < s_in.rows; ++t) {
    double w = enhancer.process(s_in.row(t), out.row(t));
    w_sum += w;
    if (stats && opts.collect_w_trace)
      stats->w_trace.push_back(static_cast<float>(w));
  }
  if (stats) {
    stats->frames = s_in.rows;
    stats->mean_w = s_in.rows ? w_sum / s_in.rows : 0.0;
    stats->proc_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    stats->audio_seconds = s_in.rows * s_in.frame_hop_s;
  }
  return out;
}

}  // namespace vflite
