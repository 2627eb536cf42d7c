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

#include "vflite/wav.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>

#include "vflite/error.hpp"

static_assert(std::endian::native == std::endian::little,
              "vflite file formats assume a little-endian host");

namespace vflite {

namespace {

constexpr int kRequiredRate = 16000;
constexpr double kScale = 32768.0;

uint32_t read_u32(std::ifstream& in) {
  uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), 4);
  return v;
}

uint16_t read_u16(std::ifstream& in) {
  uint16_t v = 0;
  in.read(reinterpret_cast<char*>(&v), 2);
  return v;
}

struct WavHeaderInfo {
  int sample_rate_hz;
  uint64_t num_samples;  // stream is positioned at the first data byte
};

// Parses the RIFF header and scans chunks until "data". Rejects anything
// that is not 16-bit PCM mono at 16 kHz.
WavHeaderInfo parse_wav_header(std::ifstream& in, const std::string& path) {
  char tag[4];
  in.read(tag, 4);
  if (!in || std::memcmp(tag, "RIFF", 4) != 0)
    throw FormatError(path + ": not a RIFF file");
  read_u32(in);  // overall size, unused
  in.read(tag, 4);
  if (!in || std::memcmp(tag, "WAVE", 4) != 0)
    throw FormatError(path + ": RIFF file is not WAVE");

  bool have_fmt = false;
  uint16_t format = 0, channels = 0, bits = 0;
  uint32_t rate = 0;
  while (in.read(tag, 4)) {
    uint32_t chunk_size = read_u32(in);
    if (!in) break;
    if (std::memcmp(tag, "fmt ", 4) == 0) {
      if (chunk_size < 16) throw FormatError(path + ": fmt chunk too small");
      format = read_u16(in);
      channels = read_u16(in);
      rate = read_u32(in);
      read_u32(in);  // byte rate
      read_u16(in);  // block align
      bits = read_u16(in);
      in.seekg(chunk_size - 16 + (chunk_size & 1), std::ios::cur);
      have_fmt = true;
    } else if (std::memcmp(tag, "data", 4) == 0) {
      if (!have_fmt) throw FormatError(path + ": data chunk before fmt chunk");
      if (format != 1)
        throw FormatError(path + ": only PCM (format 1) WAV is supported");
      if (bits != 16)
        throw FormatError(path + ": only 16-bit samples are supported, got " +
                          std::to_string(bits));
      if (channels != 1)
        throw FormatError(path + ": only mono audio is supported, got " +
                          std::to_string(channels) + " channels");
      if (static_cast<int>(rate) != kRequiredRate)
        throw FormatError(path + ": sample rate must be 16000 Hz, got " +
                          std::to_string(rate));
      return {static_cast<int>(rate), chunk_size / 2};
    } else {
      in.seekg(chunk_size + (chunk_size & 1), std::ios::cur);
    }
  }
  throw FormatError(path + ": no data chunk found");
}

}  // namespace

Waveform read_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open WAV file: " + path);
  WavHeaderInfo info = parse_wav_header(in, path);

  std::vector<int16_t> raw(info.num_samples);
  in.read(reinterpret_cast<char*>(raw.data()),
          static_cast<std::streamsize>(raw.size() * 2));
  if (static_cast<uint64_t>(in.gcount()) != info.num_samples * 2)
    throw FormatError(path + ": truncated data chunk");

  Waveform w;
  w.sample_rate_hz = info.sample_rate_hz;
  w.samples.resize(raw.size());
  for (size_t i = 0; i < raw.size(); ++i) w.samples[i] = raw[i] / kScale;
  return w;
}

void write_wav(const std::string& path, const Waveform& w) {
  WavStreamWriter writer(path, w.sample_rate_hz);
  writer.write(w.samples);
  writer.close();
}

WavStreamReader::WavStreamReader(const std::string& path)
    : in_(path, std::ios::binary) {
  if (!in_) throw FormatError("cannot open WAV file: " + path);
  WavHeaderInfo info = parse_wav_header(in_, path);
  sample_rate_hz_ = info.sample_rate_hz;
  total_samples_ = info.num_samples;
}

size_t WavStreamReader::read(std::span<double> out) {
  uint64_t remaining = total_samples_ - samples_read_;
  size_t want = std::min<uint64_t>(out.size(), remaining);
  if (want == 0) return 0;
  std::vector<int16_t> raw(want);
  in_.read(reinterpret_cast<char*>(raw.data()),
           static_cast<std::streamsize>(want * 2));
  size_t got = static_cast<size_t>(in_.gcount()) / 2;
  for (size_t i = 0; i < got; ++i) out[i] = raw[i] / kScale;
  samples_read_ += got;
  return got;
}

WavStreamWriter::WavStreamWriter(const std::string& path, int sample_rate_hz)
    : out_(path, std::ios::binary) {
  if (!out_) throw FormatError("cannot open WAV file for writing: " + path);
  // Sizes are placeholders, patched in close().
  uint32_t zero = 0;
  uint16_t fmt_pcm = 1, channels = 1, bits = 16;
  uint32_t rate = static_cast<uint32_t>(sample_rate_hz);
  uint32_t byte_rate = rate * 2;
  uint16_t block_align = 2;
  uint32_t fmt_size = 16;
  out_.write("RIFF", 4);
  out_.write(reinterpret_cast<char*>(&zero), 4);
  out_.write("WAVE", 4);
  out_.write("fmt ", 4);
  out_.write(reinterpret_cast<char*>(&fmt_size), 4);
  out_.write(reinterpret_cast<char*>(&fmt_pcm), 2);
  out_.write(reinterpret_cast<char*>(&channels), 2);
  out_.write(reinterpret_cast<char*>(&rate), 4);
  out_.write(reinterpret_cast<char*>(&byte_rate), 4);
  out_.write(reinterpret_cast<char*>(&block_align), 2);
  out_.write(reinterpret_cast<char*>(&bits), 2);
  out_.write("data", 4);
  out_.write(reinterpret_cast<char*>(&zero), 4);
}

WavStreamWriter::~WavStreamWriter() {
  if (!closed_) close();
}

void WavStreamWriter::write(std::span<const double> samples) {
  std::vector<int16_t> raw(samples.size());
  for (size_t i = 0; i < samples.size(); ++i) {
    double v = std::clamp(samples[i], -1.0, 1.0);
    raw[i] = static_cast<int16_t>(
        std::clamp(std::lround(v * kScale), -32768L, 32767L));
  }
  out_.write(reinterpret_cast<char*>(raw.data()),
             static_cast<std::streamsize>(raw.size() * 2));
  samples_written_ += samples.size();
}

void WavStreamWriter::close() {
  if (closed_) return;
  closed_ = true;
  uint32_t data_size = static_cast<uint32_t>(samples_written_ * 2);
  uint32_t riff_size = 36 + data_size;
  out_.seekp(4);
  out_.write(reinterpret_cast<char*>(&riff_size), 4);
  out_.seekp(40);
  out_.write(reinterpret_cast<char*>(&data_size), 4);
  out_.close();
}

}  // namespace vflite
