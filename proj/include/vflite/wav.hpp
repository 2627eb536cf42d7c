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
#include <fstream>
#include <span>
#include <string>
#include <vector>

namespace vflite {

// Mono audio at a fixed sample rate. Samples are nominally in [-1, 1];
// mixing may exceed that range (clipping is flagged, never applied).
struct Waveform {
  std::vector<double> samples;
  int sample_rate_hz = 16000;

  double duration_s() const {
    return static_cast<double>(samples.size()) / sample_rate_hz;
  }
};

// Reads a RIFF/PCM WAV file. Only 16-bit signed little-endian mono at
// 16 kHz is accepted; anything else is a FormatError.
Waveform read_wav(const std::string& path);

// Writes 16-bit PCM mono. Samples are clamped to [-1, 1] on write.
void write_wav(const std::string& path, const Waveform& w);

// Streaming WAV reader for bounded-memory processing of long files.
class WavStreamReader {
 public:
  explicit WavStreamReader(const std::string& path);

  int sample_rate_hz() const { return sample_rate_hz_; }
  uint64_t total_samples() const { return total_samples_; }

  // Fills `out` with up to out.size() samples; returns the count read
  // (0 at end of stream).
  size_t read(std::span<double> out);

 private:
  std::ifstream in_;
  int sample_rate_hz_ = 0;
  uint64_t total_samples_ = 0;
  uint64_t samples_read_ = 0;
};

// Streaming WAV writer (16-bit PCM mono); patches the RIFF sizes on close.
class WavStreamWriter {
 public:
  WavStreamWriter(const std::string& path, int sample_rate_hz);
  ~WavStreamWriter();

  void write(std::span<const double> samples);
  void close();

 private:
  std::ofstream out_;
  uint64_t samples_written_ = 0;
  bool closed_ = false;
};

}  // namespace vflite
