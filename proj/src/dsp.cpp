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

#include "vflite/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "vflite/error.hpp"

namespace vflite {

namespace {

constexpr char kVffMagic[4] = {'V', 'F', 'F', '1'};

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

}  // namespace

std::string feature_variant_name(FeatureVariant v) {
  switch (v) {
    case FeatureVariant::kFftMagnitude: return "fft";
    case FeatureVariant::kFilterbank: return "fbank";
    case FeatureVariant::kStackedFilterbank: return "stacked";
  }
  throw ValueError("unknown feature variant tag");
}

FeatureVariant feature_variant_from_name(const std::string& name) {
  if (name == "fft") return FeatureVariant::kFftMagnitude;
  if (name == "fbank") return FeatureVariant::kFilterbank;
  if (name == "stacked") return FeatureVariant::kStackedFilterbank;
  throw ValueError("unknown feature variant: " + name +
                   " (expected fft, fbank, or stacked)");
}

int FeatureConfig::window_samples(int sample_rate_hz) const {
  return static_cast<int>(std::llround(window_ms * sample_rate_hz / 1000.0));
}

int FeatureConfig::hop_samples(int sample_rate_hz) const {
  return static_cast<int>(std::llround(hop_ms * sample_rate_hz / 1000.0));
}

int FeatureConfig::feature_dim() const {
  switch (variant) {
    case FeatureVariant::kFftMagnitude: return n_fft / 2 + 1;
    case FeatureVariant::kFilterbank: return n_mels;
    case FeatureVariant::kStackedFilterbank: return n_mels * stack;
  }
  throw ValueError("unknown feature variant tag");
}

void FeatureConfig::validate() const {
  check(is_power_of_two(n_fft), "FeatureConfig: n_fft must be a power of two");
  check(window_ms > 0 && hop_ms > 0, "FeatureConfig: window/hop must be positive");
  check(stack >= 1, "FeatureConfig: stack must be >= 1");
  check(stride >= 1, "FeatureConfig: stride must be >= 1");
  check(n_mels >= 1 && n_mels < n_fft / 2 + 1,
        "FeatureConfig: n_mels must be in [1, n_fft/2]");
  check(mel_fmin_hz >= 0 && mel_fmax_hz > mel_fmin_hz,
        "FeatureConfig: invalid mel frequency range");
}

FeatureSequence FeatureSequence::zeros(FeatureVariant v, int rows, int cols,
                                       double frame_hop_s) {
  FeatureSequence s;
  s.variant = v;
  s.rows = rows;
  s.cols = cols;
  s.frame_hop_s = frame_hop_s;
  s.data.assign(static_cast<size_t>(rows) * cols, 0.0f);
  return s;
}

void fft_inplace(std::vector<std::complex<double>>& buf, bool inverse) {
  const size_t n = buf.size();
  check(is_power_of_two(static_cast<int>(n)), "fft: size must be a power of two");
  // Bit-reversal permutation.
  for (size_t i = 1, j = 0; i < n; ++i) {
    size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(buf[i], buf[j]);
  }
  for (size_t len = 2; len <= n; len <<= 1) {
    double ang = 2.0 * M_PI / static_cast<double>(len) * (inverse ? 1.0 : -1.0);
    std::complex<double> wlen(std::cos(ang), std::sin(ang));
    for (size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (size_t j = 0; j < len / 2; ++j) {
        std::complex<double> u = buf[i + j];
        std::complex<double> v = buf[i + j + len / 2] * w;
        buf[i + j] = u + v;
        buf[i + j + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
  if (inverse) {
    for (auto& x : buf) x /= static_cast<double>(n);
  }
}

namespace {

std::vector<double> hann_periodic(int win) {
  std::vector<double> h(win);
  for (int i = 0; i < win; ++i)
    h[i] = 0.5 - 0.5 * std::cos(2.0 * M_PI * i / win);
  return h;
}

// One windowed magnitude frame; `samples` has win entries.
void stft_frame(std::span<const double> samples, std::span<const double> window,
                int n_fft, std::vector<std::complex<double>>& scratch,
                std::span<float> out_mags) {
  scratch.assign(n_fft, {0.0, 0.0});
  for (size_t i = 0; i < samples.size(); ++i)
    scratch[i] = {samples[i] * window[i], 0.0};
  fft_inplace(scratch, false);
  for (int k = 0; k <= n_fft / 2; ++k)
    out_mags[k] = static_cast<float>(std::abs(scratch[k]));
}

void mel_frame(std::span<const float> mags, const std::vector<double>& weights,
               int n_mels, std::span<float> out) {
  const int bins = static_cast<int>(mags.size());
  for (int m = 0; m < n_mels; ++m) {
    const double* wrow = weights.data() + static_cast<size_t>(m) * bins;
    double acc = 0.0;
    for (int k = 0; k < bins; ++k) {
      double p = static_cast<double>(mags[k]) * mags[k];
      acc += wrow[k] * p;
    }
    out[m] = static_cast<float>(std::log1p(acc));
  }
}

}  // namespace

FeatureSequence stft_magnitude(const Waveform& w, const FeatureConfig& cfg) {
  cfg.validate();
  const int win = cfg.window_samples(w.sample_rate_hz);
  const int hop = cfg.hop_samples(w.sample_rate_hz);
  check(win <= cfg.n_fft, "stft_magnitude: window longer than n_fft");
  if (static_cast<int>(w.samples.size()) < win)
    throw ValueError("stft_magnitude: waveform too short (" +
                     std::to_string(w.samples.size()) + " samples, window " +
                     std::to_string(win) + ")");
  for (double s : w.samples)
    if (!std::isfinite(s)) throw NumericError("stft_magnitude: non-finite sample");

  const int t_count =
      1 + static_cast<int>((w.samples.size() - win) / static_cast<size_t>(hop));
  const int bins = cfg.n_fft / 2 + 1;
  FeatureSequence out = FeatureSequence::zeros(FeatureVariant::kFftMagnitude,
                                               t_count, bins, hop / double(w.sample_rate_hz));
  std::vector<double> window = hann_periodic(win);
  std::vector<std::complex<double>> scratch;
  for (int t = 0; t < t_count; ++t) {
    std::span<const double> seg(w.samples.data() + static_cast<size_t>(t) * hop,
                                static_cast<size_t>(win));
    stft_frame(seg, window, cfg.n_fft, scratch, out.row(t));
  }
  return out;
}

std::vector<double> mel_weights(const FeatureConfig& cfg, int sample_rate_hz) {
  const int bins = cfg.n_fft / 2 + 1;
  check(cfg.mel_fmax_hz <= sample_rate_hz / 2.0 + 1e-9,
        "mel_weights: mel_fmax above Nyquist");
  const double mel_lo = hz_to_mel(cfg.mel_fmin_hz);
  const double mel_hi = hz_to_mel(cfg.mel_fmax_hz);
  std::vector<double> centers(cfg.n_mels + 2);
  for (int i = 0; i < cfg.n_mels + 2; ++i)
    centers[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * i / (cfg.n_mels + 1));

  std::vector<double> weights(static_cast<size_t>(cfg.n_mels) * bins, 0.0);
  for (int m = 0; m < cfg.n_mels; ++m) {
    const double f0 = centers[m], f1 = centers[m + 1], f2 = centers[m + 2];
    for (int k = 0; k < bins; ++k) {
      double fk = static_cast<double>(k) * sample_rate_hz / cfg.n_fft;
      double w = 0.0;
      if (fk > f0 && fk < f1) w = (fk - f0) / (f1 - f0);
      else if (fk >= f1 && fk < f2) w = (f2 - fk) / (f2 - f1);
      weights[static_cast<size_t>(m) * bins + k] = w;
    }
  }
  return weights;
}

FeatureSequence apply_filterbank(const FeatureSequence& s,
                                 const std::vector<double>& weights, int n_out) {
  check(s.variant == FeatureVariant::kFftMagnitude,
        "apply_filterbank: input must be FFT magnitudes");
  check(weights.size() == static_cast<size_t>(n_out) * s.cols,
        "apply_filterbank: weight matrix shape mismatch");
  FeatureSequence out =
      FeatureSequence::zeros(FeatureVariant::kFilterbank, s.rows, n_out, s.frame_hop_s);
  for (int t = 0; t < s.rows; ++t) mel_frame(s.row(t), weights, n_out, out.row(t));
  return out;
}

FeatureSequence mel_filterbank(const FeatureSequence& s, const FeatureConfig& cfg,
                               int sample_rate_hz) {
  cfg.validate();
  check(s.cols == cfg.n_fft / 2 + 1, "mel_filterbank: input width mismatch");
  return apply_filterbank(s, mel_weights(cfg, sample_rate_hz), cfg.n_mels);
}

FeatureSequence stack_frames(const FeatureSequence& s, const FeatureConfig& cfg) {
  cfg.validate();
  check(s.variant == FeatureVariant::kFilterbank,
        "stack_frames: input must be filterbank frames");
  if (s.rows == 0) throw ValueError("stack_frames: empty input");
  check(s.rows >= cfg.stack, "stack_frames: fewer frames than stack size");
  const int t_out = (s.rows + cfg.stride - 1) / cfg.stride;
  FeatureSequence out = FeatureSequence::zeros(FeatureVariant::kStackedFilterbank,
                                               t_out, s.cols * cfg.stack,
                                               s.frame_hop_s * cfg.stride);
  for (int t = 0; t < t_out; ++t) {
    for (int j = 0; j < cfg.stack; ++j) {
      int src = std::min(t * cfg.stride + j, s.rows - 1);
      std::memcpy(out.data.data() + (static_cast<size_t>(t) * out.cols) +
                      static_cast<size_t>(j) * s.cols,
                  s.data.data() + static_cast<size_t>(src) * s.cols,
                  sizeof(float) * s.cols);
    }
  }
  return out;
}

FeatureSequence extract(const Waveform& w, const FeatureConfig& cfg) {
  cfg.validate();
  FeatureSequence mags = stft_magnitude(w, cfg);
  if (cfg.variant == FeatureVariant::kFftMagnitude) return mags;
  FeatureSequence mel = mel_filterbank(mags, cfg, w.sample_rate_hz);
  if (cfg.variant == FeatureVariant::kFilterbank) return mel;
  return stack_frames(mel, cfg);
}

int extract_num_frames(uint64_t num_samples, const FeatureConfig& cfg,
                       int sample_rate_hz) {
  const int win = cfg.window_samples(sample_rate_hz);
  const int hop = cfg.hop_samples(sample_rate_hz);
  if (num_samples < static_cast<uint64_t>(win)) return 0;
  int t_stft = 1 + static_cast<int>((num_samples - win) / hop);
  if (cfg.variant != FeatureVariant::kStackedFilterbank) return t_stft;
  return (t_stft + cfg.stride - 1) / cfg.stride;
}

void frame_sample_span(int frame, const FeatureConfig& cfg, int sample_rate_hz,
                       uint64_t num_samples, uint64_t* begin, uint64_t* end) {
  const uint64_t win = cfg.window_samples(sample_rate_hz);
  const uint64_t hop = cfg.hop_samples(sample_rate_hz);
  uint64_t first, last;  // first/last underlying STFT frame of this output frame
  if (cfg.variant == FeatureVariant::kStackedFilterbank) {
    first = static_cast<uint64_t>(frame) * cfg.stride;
    last = first + cfg.stack - 1;
  } else {
    first = last = static_cast<uint64_t>(frame);
  }
  *begin = first * hop;
  *end = std::min(num_samples, last * hop + win);
}

StreamingExtractor::StreamingExtractor(const FeatureConfig& cfg, int sample_rate_hz)
    : cfg_(cfg), sample_rate_hz_(sample_rate_hz) {
  cfg_.validate();
  win_ = cfg_.window_samples(sample_rate_hz);
  hop_ = cfg_.hop_samples(sample_rate_hz);
  check(win_ <= cfg_.n_fft, "StreamingExtractor: window longer than n_fft");
  window_ = hann_periodic(win_);
  if (cfg_.variant != FeatureVariant::kFftMagnitude)
    mel_weights_ = mel_weights(cfg_, sample_rate_hz);
  buf_.reserve(static_cast<size_t>(win_) + 4096);
}

void StreamingExtractor::push(std::span<const double> samples) {
  check(!finished_, "StreamingExtractor: push after finish");
  for (double s : samples) {
    if (!std::isfinite(s)) throw NumericError("StreamingExtractor: non-finite sample");
    buf_.push_back(s);
  }
  while (static_cast<int>(buf_.size()) >= win_) {
    emit_stft_frame();
    buf_.erase(buf_.begin(), buf_.begin() + hop_);
  }
}

void StreamingExtractor::emit_stft_frame() {
  const int bins = cfg_.n_fft / 2 + 1;
  std::vector<std::complex<double>> scratch;
  std::vector<float> mags(bins);
  stft_frame({buf_.data(), static_cast<size_t>(win_)}, window_, cfg_.n_fft,
             scratch, mags);
  if (cfg_.variant == FeatureVariant::kFftMagnitude) {
    handle_frame(std::move(mags));
    return;
  }
  std::vector<float> mel(cfg_.n_mels);
  mel_frame(mags, mel_weights_, cfg_.n_mels, mel);
  handle_frame(std::move(mel));
}

void StreamingExtractor::handle_frame(std::vector<float>&& frame) {
  if (cfg_.variant != FeatureVariant::kStackedFilterbank) {
    ready_.push_back(std::move(frame));
    return;
  }
  mel_pending_.push_back(std::move(frame));
  ++mel_frames_seen_;
  // A stack frame t' needs input frames up to t'*stride + stack - 1.
  while (stacks_emitted_ * cfg_.stride + cfg_.stack <= mel_frames_seen_) {
    std::vector<float> stacked(static_cast<size_t>(cfg_.n_mels) * cfg_.stack);
    uint64_t base = stacks_emitted_ * cfg_.stride;
    uint64_t oldest = mel_frames_seen_ - mel_pending_.size();
    for (int j = 0; j < cfg_.stack; ++j) {
      const auto& src = mel_pending_[static_cast<size_t>(base + j - oldest)];
      std::copy(src.begin(), src.end(), stacked.begin() + static_cast<size_t>(j) * cfg_.n_mels);
    }
    ready_.push_back(std::move(stacked));
    ++stacks_emitted_;
    // Drop frames no longer reachable by any future stack.
    uint64_t next_base = stacks_emitted_ * cfg_.stride;
    while (oldest < next_base && !mel_pending_.empty()) {
      mel_pending_.pop_front();
      ++oldest;
    }
  }
}

void StreamingExtractor::finish() {
  if (finished_) return;
  finished_ = true;
  if (cfg_.variant != FeatureVariant::kStackedFilterbank) return;
  if (mel_frames_seen_ == 0) return;
  check(mel_frames_seen_ >= static_cast<uint64_t>(cfg_.stack),
        "StreamingExtractor: fewer frames than stack size");
  // Trailing stacks pad by repeating the final input frame, matching
  // stack_frames().
  uint64_t total = (mel_frames_seen_ + cfg_.stride - 1) / cfg_.stride;
  while (stacks_emitted_ < total) {
    std::vector<float> stacked(static_cast<size_t>(cfg_.n_mels) * cfg_.stack);
    uint64_t base = stacks_emitted_ * cfg_.stride;
    uint64_t oldest = mel_frames_seen_ - mel_pending_.size();
    for (int j = 0; j < cfg_.stack; ++j) {
      uint64_t src = std::min(base + j, mel_frames_seen_ - 1);
      const auto& row = mel_pending_[static_cast<size_t>(src - oldest)];
      std::copy(row.begin(), row.end(), stacked.begin() + static_cast<size_t>(j) * cfg_.n_mels);
    }
    ready_.push_back(std::move(stacked));
    ++stacks_emitted_;
  }
  mel_pending_.clear();
}

bool StreamingExtractor::pop(std::vector<float>& out) {
  if (ready_.empty()) return false;
  out = std::move(ready_.front());
  ready_.pop_front();
  return true;
}

void write_vff(const std::string& path, const FeatureSequence& s) {
  VffStreamWriter w(path, s.variant, s.cols, s.frame_hop_s);
  for (int t = 0; t < s.rows; ++t) w.write_frame(s.row(t));
  w.close();
}

FeatureSequence read_vff(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open feature file: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kVffMagic, 4) != 0)
    throw FormatError(path + ": bad VFF1 magic");
  uint32_t variant = 0, rows = 0, cols = 0;
  double hop_s = 0.0;
  in.read(reinterpret_cast<char*>(&variant), 4);
  in.read(reinterpret_cast<char*>(&rows), 4);
  in.read(reinterpret_cast<char*>(&cols), 4);
  in.read(reinterpret_cast<char*>(&hop_s), 8);
  if (!in) throw FormatError(path + ": truncated VFF1 header");
  if (variant > 2) throw FormatError(path + ": unknown feature variant tag");
  FeatureSequence s = FeatureSequence::zeros(static_cast<FeatureVariant>(variant),
                                             static_cast<int>(rows),
                                             static_cast<int>(cols), hop_s);
  in.read(reinterpret_cast<char*>(s.data.data()),
          static_cast<std::streamsize>(s.data.size() * sizeof(float)));
  if (static_cast<size_t>(in.gcount()) != s.data.size() * sizeof(float))
    throw FormatError(path + ": truncated VFF1 data");
  for (float v : s.data)
    if (!std::isfinite(v)) throw FormatError(path + ": non-finite feature value");
  return s;
}

VffStreamWriter::VffStreamWriter(const std::string& path, FeatureVariant variant,
                                 int cols, double frame_hop_s)
    : out_(path, std::ios::binary), path_(path), cols_(cols) {
  if (!out_) throw FormatError("cannot open feature file for writing: " + path);
  out_.write(kVffMagic, 4);
  uint32_t v = static_cast<uint32_t>(variant);
  uint32_t rows = 0;
  uint32_t c = static_cast<uint32_t>(cols);
  out_.write(reinterpret_cast<char*>(&v), 4);
  out_.write(reinterpret_cast<char*>(&rows), 4);  // patched in close()
  out_.write(reinterpret_cast<char*>(&c), 4);
  out_.write(reinterpret_cast<const char*>(&frame_hop_s), 8);
}

VffStreamWriter::~VffStreamWriter() {
  if (!closed_) close();
}

void VffStreamWriter::write_frame(std::span<const float> frame) {
  check(static_cast<int>(frame.size()) == cols_,
        "VffStreamWriter: frame width mismatch");
  out_.write(reinterpret_cast<const char*>(frame.data()),
             static_cast<std::streamsize>(frame.size() * sizeof(float)));
  ++rows_;
}

void VffStreamWriter::close() {
  if (closed_) return;
  closed_ = true;
  out_.seekp(8);
  out_.write(reinterpret_cast<char*>(&rows_), 4);
  out_.close();
}

}  // namespace vflite
