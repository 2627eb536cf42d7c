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

#include <complex>
#include <cstdint>
#include <deque>
#include <span>
#include <string>
#include <vector>

#include "vflite/wav.hpp"

namespace vflite {

enum class FeatureVariant : uint32_t {
  kFftMagnitude = 0,
  kFilterbank = 1,
  kStackedFilterbank = 2,
};

std::string feature_variant_name(FeatureVariant v);
FeatureVariant feature_variant_from_name(const std::string& name);

// Frontend configuration. Defaults match a conventional 16 kHz ASR
// frontend: 25 ms periodic-Hann windows, 10 ms hop, 1024-point FFT,
// 128 mel bands over 125-7500 Hz, frames stacked by 4 with stride 4.
struct FeatureConfig {
  FeatureVariant variant = FeatureVariant::kStackedFilterbank;
  int n_fft = 1024;
  double window_ms = 25.0;
  double hop_ms = 10.0;
  int n_mels = 128;
  int stack = 4;
  int stride = 4;
  double mel_fmin_hz = 125.0;
  double mel_fmax_hz = 7500.0;

  int window_samples(int sample_rate_hz) const;
  int hop_samples(int sample_rate_hz) const;
  // Output frame width for the configured variant.
  int feature_dim() const;
  void validate() const;
};

// Time-major matrix of non-negative spectral features.
struct FeatureSequence {
  FeatureVariant variant = FeatureVariant::kFftMagnitude;
  int rows = 0;  // T
  int cols = 0;  // F
  double frame_hop_s = 0.0;
  std::vector<float> data;  // row-major, rows * cols

  static FeatureSequence zeros(FeatureVariant v, int rows, int cols,
                               double frame_hop_s);
  float at(int t, int f) const { return data[static_cast<size_t>(t) * cols + f]; }
  float& at(int t, int f) { return data[static_cast<size_t>(t) * cols + f]; }
  std::span<const float> row(int t) const {
    return {data.data() + static_cast<size_t>(t) * cols, static_cast<size_t>(cols)};
  }
  std::span<float> row(int t) {
    return {data.data() + static_cast<size_t>(t) * cols, static_cast<size_t>(cols)};
  }
};

// In-place iterative radix-2 FFT (n must be a power of two).
void fft_inplace(std::vector<std::complex<double>>& buf, bool inverse);

// Short-time Fourier magnitudes: T x (n_fft/2 + 1), periodic Hann window,
// windows shorter than n_fft zero-padded at the tail.
// T = 1 + floor((len - win) / hop). Throws if the waveform is shorter than
// one window.
FeatureSequence stft_magnitude(const Waveform& w, const FeatureConfig& cfg);

// Triangular mel filterbank matrix, n_mels x (n_fft/2 + 1), row-major.
std::vector<double> mel_weights(const FeatureConfig& cfg, int sample_rate_hz);

// Projects squared magnitudes through an arbitrary filterbank matrix and
// applies log(1+x). `weights` is n_out x s.cols row-major.
FeatureSequence apply_filterbank(const FeatureSequence& s,
                                 const std::vector<double>& weights, int n_out);

// log(1+x) mel filterbank energies from FFT magnitudes.
FeatureSequence mel_filterbank(const FeatureSequence& s, const FeatureConfig& cfg,
                               int sample_rate_hz);

// Concatenates `stack` consecutive frames at the given stride. Output frame
// t' covers input frames [t'*stride, t'*stride + stack); trailing partial
// stacks repeat the last input frame. T_out = ceil(T / stride).
FeatureSequence stack_frames(const FeatureSequence& s, const FeatureConfig& cfg);

// Full frontend for the configured variant.
FeatureSequence extract(const Waveform& w, const FeatureConfig& cfg);

// Number of feature frames extract() produces for a waveform length, and
// the span of waveform samples covered by output frame t (used for
// per-frame labeling). `end` is clamped to num_samples.
int extract_num_frames(uint64_t num_samples, const FeatureConfig& cfg,
                       int sample_rate_hz);
void frame_sample_span(int frame, const FeatureConfig& cfg, int sample_rate_hz,
                       uint64_t num_samples, uint64_t* begin, uint64_t* end);

// Incremental frontend producing exactly the same frames as extract().
// push() accepts arbitrary chunk sizes; finish() flushes the trailing
// padded stack frames. Frames become available via pop().
class StreamingExtractor {
 public:
  StreamingExtractor(const FeatureConfig& cfg, int sample_rate_hz);

  void push(std::span<const double> samples);
  void finish();
  // Moves one pending output frame into `out` (resized to feature_dim());
  // returns false when none is pending.
  bool pop(std::vector<float>& out);

 private:
  void emit_stft_frame();
  void handle_frame(std::vector<float>&& frame);

  FeatureConfig cfg_;
  int sample_rate_hz_;
  int win_, hop_;
  std::vector<double> window_;
  std::vector<double> mel_weights_;
  std::vector<double> buf_;            // pending samples, < win after drain
  std::deque<std::vector<float>> mel_pending_;  // frames awaiting stacking
  uint64_t mel_frames_seen_ = 0;
  uint64_t stacks_emitted_ = 0;
  std::deque<std::vector<float>> ready_;
  bool finished_ = false;
};

// "VFF1" feature file: magic, u32 variant, u32 T, u32 F, f64 frame_hop_s,
// then T*F float32 little-endian row-major values.
void write_vff(const std::string& path, const FeatureSequence& s);
FeatureSequence read_vff(const std::string& path);

// Streaming VFF1 writer; the frame count is patched on close().
class VffStreamWriter {
 public:
  VffStreamWriter(const std::string& path, FeatureVariant variant, int cols,
                  double frame_hop_s);
  ~VffStreamWriter();
  void write_frame(std::span<const float> frame);
  void close();

 private:
  std::ofstream out_;
  std::string path_;
  int cols_;
  uint32_t rows_ = 0;
  bool closed_ = false;
};

}  // namespace vflite
