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
#include <optional>
#include <string>
#include <vector>

#include "vflite/dsp.hpp"
#include "vflite/dvector.hpp"
#include "vflite/rng.hpp"
#include "vflite/wav.hpp"

namespace vflite {

enum class NoiseKind : uint8_t { kSpeech = 0, kNonSpeech = 1 };
enum class RoomKind : uint8_t { kAdditive = 0, kReverb = 1 };

std::string noise_kind_name(NoiseKind k);
NoiseKind noise_kind_from_name(const std::string& name);

// How one mixture is synthesized. `rir` must be present iff room == kReverb.
// By default the RIR is applied to the interference only; `reverb_target`
// extends it to the target speech as well.
struct MixSpec {
  double snr_db = 5.0;
  NoiseKind noise_kind = NoiseKind::kSpeech;
  RoomKind room = RoomKind::kAdditive;
  std::optional<std::vector<double>> rir;
  bool reverb_target = false;
  uint64_t seed = 0;

  void validate() const;
};

// Bookkeeping from the mix: the gain applied to the interference, the SNR
// recomputed from the two addends, and whether the sum left [-1, 1].
// Clipping is reported, never normalized away.
struct MixMeta {
  double noise_gain = 0.0;
  double measured_snr_db = 0.0;
  bool clipped = false;
};

// One training/eval record: noisy and clean features in lockstep, the
// conditioning d-vector, and per-output-frame overlap labels (1 = frame
// contains interfering speech).
struct MixtureExample {
  FeatureSequence noisy;
  FeatureSequence clean;
  DVector dvec;
  std::vector<uint8_t> overlap_labels;
  MixSpec spec;
  MixMeta meta;
};

double rms(const Waveform& w);

// Uniform SNR draw in [lo_db, hi_db].
double sample_snr(double lo_db, double hi_db, Rng& rng);

// clean + g * noise with g chosen so that 20*log10(rms(clean)/rms(g*noise))
// equals snr_db exactly. The noise is looped or truncated to the clean
// length first. Throws on silent (zero-RMS) inputs.
Waveform mix_at_snr(const Waveform& clean, const Waveform& noise, double snr_db);
// Same, also returning the scaled noise addend and the mix metadata.
Waveform mix_at_snr_detailed(const Waveform& clean, const Waveform& noise,
                             double snr_db, Waveform* scaled_noise, MixMeta* meta);

// Convolves w with the RIR (normalized so its max-|.| tap has magnitude 1)
// and truncates to the input length.
Waveform apply_rir(const Waveform& w, const std::vector<double>& rir);

// Synthetic exponentially decaying RIR: white Gaussian noise shaped by
// exp(-6.908 t / rt60) (-60 dB at t = rt60), leading tap forced to 1.
std::vector<double> synth_rir(double rt60_s, int sample_rate_hz, Rng& rng);

// Full mixture synthesis: reverberate per spec, mix at the requested SNR,
// extract noisy/clean features in lockstep, and label output frames whose
// scaled speech-interference RMS exceeds the silence threshold (1e-4 of
// full scale).
MixtureExample make_example(const Waveform& clean, const Waveform& noise,
                            const Waveform& ref_audio, const MixSpec& spec,
                            const FeatureConfig& fcfg, int dvec_dim = kDVectorDim);

// Silence threshold for overlap labels, relative to full-scale 1.0.
inline constexpr double kOverlapSilenceRms = 1e-4;

// Corpus manifest line: <clean.wav>\t<noise.wav>\t<ref.wav>\t<speech|nonspeech>
struct ManifestRow {
  std::string clean_path;
  std::string noise_path;
  std::string ref_path;
  NoiseKind kind;
};
std::vector<ManifestRow> read_manifest(const std::string& path);

// Example archive: per index, <stem>.noisy.vff, <stem>.clean.vff,
// <stem>.dvec (VFD1) and <stem>.json (spec, labels, mix metadata).
void write_example(const std::string& dir, int index, const MixtureExample& ex);
MixtureExample load_example(const std::string& dir, int index);
std::string example_stem(int index);

// Loads ex000000.., stopping at the first missing index.
std::vector<MixtureExample> load_examples(const std::string& dir);

}  // namespace vflite
