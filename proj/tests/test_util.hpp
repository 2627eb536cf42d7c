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

#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "vflite/dsp.hpp"
#include "vflite/rng.hpp"
#include "vflite/wav.hpp"

namespace vflite::test {

// Unique scratch directory under the build tree, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("vflite_" + tag + "_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  std::string file(const std::string& name) const { return (path_ / name).string(); }
  std::string dir() const { return path_.string(); }

 private:
  std::filesystem::path path_;
};

inline Waveform sine_wave(double freq_hz, double seconds, double amp = 0.5,
                          int rate = 16000) {
  Waveform w;
  w.sample_rate_hz = rate;
  size_t n = static_cast<size_t>(seconds * rate);
  w.samples.resize(n);
  for (size_t i = 0; i < n; ++i)
    w.samples[i] = amp * std::sin(2.0 * M_PI * freq_hz * i / rate);
  return w;
}

inline Waveform noise_wave(double seconds, uint64_t seed, double amp = 0.2,
                           int rate = 16000) {
  Waveform w;
  w.sample_rate_hz = rate;
  size_t n = static_cast<size_t>(seconds * rate);
  w.samples.resize(n);
  Rng rng(seed);
  for (auto& s : w.samples) s = amp * rng.uniform(-1.0, 1.0);
  return w;
}

// White noise band-limited with an FFT brickwall; a synthetic "speaker"
// whose energy lives in [lo_hz, hi_hz].
inline Waveform band_noise(double lo_hz, double hi_hz, double seconds,
                           uint64_t seed, double amp = 0.25, int rate = 16000) {
  size_t n = static_cast<size_t>(seconds * rate);
  size_t m = 1;
  while (m < n) m <<= 1;
  std::vector<std::complex<double>> buf(m);
  Rng rng(seed);
  for (size_t i = 0; i < n; ++i) buf[i] = rng.gaussian();
  fft_inplace(buf, false);
  for (size_t k = 0; k < m; ++k) {
    double f = static_cast<double>(k <= m / 2 ? k : m - k) * rate / m;
    if (f < lo_hz || f > hi_hz) buf[k] = 0.0;
  }
  fft_inplace(buf, true);
  Waveform w;
  w.sample_rate_hz = rate;
  w.samples.resize(n);
  double peak = 1e-12;
  for (size_t i = 0; i < n; ++i) peak = std::max(peak, std::abs(buf[i].real()));
  for (size_t i = 0; i < n; ++i) w.samples[i] = amp * buf[i].real() / peak;
  return w;
}

inline FeatureSequence random_features(FeatureVariant variant, int rows, int cols,
                                       uint64_t seed, double lo = 0.0,
                                       double hi = 2.0) {
  FeatureSequence s = FeatureSequence::zeros(variant, rows, cols, 0.01);
  Rng rng(seed);
  for (auto& v : s.data) v = static_cast<float>(rng.uniform(lo, hi));
  return s;
}

}  // namespace vflite::test
