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

#include "vflite/mixer.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "vflite/error.hpp"

namespace vflite {

namespace {

using nlohmann::json;

// Loop (or truncate) noise to exactly n samples.
std::vector<double> tile_to(const std::vector<double>& src, size_t n) {
  check(!src.empty(), "mix: empty noise waveform");
  std::vector<double> out(n);
  for (size_t i = 0; i < n; ++i) out[i] = src[i % src.size()];
  return out;
}

}  // namespace

std::string noise_kind_name(NoiseKind k) {
  return k == NoiseKind::kSpeech ? "speech" : "nonspeech";
}

NoiseKind noise_kind_from_name(const std::string& name) {
  if (name == "speech") return NoiseKind::kSpeech;
  if (name == "nonspeech") return NoiseKind::kNonSpeech;
  throw ValueError("unknown noise kind: " + name + " (expected speech|nonspeech)");
}

void MixSpec::validate() const {
  check(std::isfinite(snr_db), "MixSpec: snr_db must be finite");
  if (room == RoomKind::kReverb)
    check(rir.has_value() && !rir->empty(), "MixSpec: reverb requires an RIR");
  else
    check(!rir.has_value(), "MixSpec: rir given for an additive mix");
}

double rms(const Waveform& w) {
  if (w.samples.empty()) return 0.0;
  double acc = 0.0;
  for (double s : w.samples) acc += s * s;
  return std::sqrt(acc / w.samples.size());
}

double sample_snr(double lo_db, double hi_db, Rng& rng) {
  check(std::isfinite(lo_db) && std::isfinite(hi_db) && lo_db <= hi_db,
        "sample_snr: invalid bounds");
  return rng.uniform(lo_db, hi_db);
}

Waveform mix_at_snr_detailed(const Waveform& clean, const Waveform& noise,
                             double snr_db, Waveform* scaled_noise, MixMeta* meta) {
  check(std::isfinite(snr_db), "mix_at_snr: snr_db must be finite");
  check(clean.sample_rate_hz == noise.sample_rate_hz,
        "mix_at_snr: sample rate mismatch");
  check(!clean.samples.empty(), "mix_at_snr: empty clean waveform");

  Waveform tiled;
  tiled.sample_rate_hz = noise.sample_rate_hz;
  tiled.samples = tile_to(noise.samples, clean.samples.size());

  double rms_c = rms(clean);
  double rms_n = rms(tiled);
  if (rms_c <= 0.0) throw ValueError("mix_at_snr: clean waveform is silent");
  if (rms_n <= 0.0) throw ValueError("mix_at_snr: noise waveform is silent");

  double gain = (rms_c / rms_n) * std::pow(10.0, -snr_db / 20.0);
  Waveform out;
  out.sample_rate_hz = clean.sample_rate_hz;
  out.samples.resize(clean.samples.size());
  bool clipped = false;
  for (size_t i = 0; i < out.samples.size(); ++i) {
    tiled.samples[i] *= gain;
    out.samples[i] = clean.samples[i] + tiled.samples[i];
    if (std::abs(out.samples[i]) > 1.0) clipped = true;
  }
  if (meta) {
    meta->noise_gain = gain;
    meta->measured_snr_db = 20.0 * std::log10(rms_c / rms(tiled));
    meta->clipped = clipped;
  }
  if (scaled_noise) *scaled_noise = std::move(tiled);
  return out;
}

Waveform mix_at_snr(const Waveform& clean, const Waveform& noise, double snr_db) {
  return mix_at_snr_detailed(clean, noise, snr_db, nullptr, nullptr);
}

Waveform apply_rir(const Waveform& w, const std::vector<double>& rir) {
  check(!rir.empty(), "apply_rir: empty RIR");
  double max_abs = 0.0;
  for (double t : rir) {
    if (!std::isfinite(t)) throw NumericError("apply_rir: non-finite RIR tap");
    max_abs = std::max(max_abs, std::abs(t));
  }
  check(max_abs > 0.0, "apply_rir: all-zero RIR");

  const size_t n = w.samples.size();
  const size_t r = rir.size();
  check(n > 0, "apply_rir: empty waveform");

  // Full convolution via FFT, truncated to the input length.
  size_t m = 1;
  while (m < n + r - 1) m <<= 1;
  std::vector<std::complex<double>> a(m), b(m);
  for (size_t i = 0; i < n; ++i) a[i] = w.samples[i];
  for (size_t i = 0; i < r; ++i) b[i] = rir[i] / max_abs;
  fft_inplace(a, false);
  fft_inplace(b, false);
  for (size_t i = 0; i < m; ++i) a[i] *= b[i];
  fft_inplace(a, true);

  Waveform out;
  out.sample_rate_hz = w.sample_rate_hz;
  out.samples.resize(n);
  for (size_t i = 0; i < n; ++i) out.samples[i] = a[i].real();
  return out;
}

std::vector<double> synth_rir(double rt60_s, int sample_rate_hz, Rng& rng) {
  check(rt60_s >= 0.05 && rt60_s <= 1.5, "synth_rir: rt60 must be in [0.05, 1.5] s");
  check(sample_rate_hz > 0, "synth_rir: invalid sample rate");
  size_t n = static_cast<size_t>(std::llround(rt60_s * sample_rate_hz));
  std::vector<double> rir(n);
  for (size_t i = 0; i < n; ++i) {
    double t = static_cast<double>(i) / sample_rate_hz;
    rir[i] = rng.gaussian() * std::exp(-6.908 * t / rt60_s);
  }
  rir[0] = 1.0;
  return rir;
}

MixtureExample make_example(const Waveform& clean, const Waveform& noise,
                            const Waveform& ref_audio, const MixSpec& spec,
                            const FeatureConfig& fcfg, int dvec_dim) {
  spec.validate();
  fcfg.validate();

  Waveform target = clean;
  Waveform interferer = noise;
  if (spec.room == RoomKind::kReverb) {
    interferer = apply_rir(interferer, *spec.rir);
    if (spec.reverb_target) target = apply_rir(target, *spec.rir);
  }

  MixtureExample ex;
  ex.spec = spec;
  Waveform scaled_noise;
  Waveform mixture =
      mix_at_snr_detailed(target, interferer, spec.snr_db, &scaled_noise, &ex.meta);

  ex.noisy = extract(mixture, fcfg);
  ex.clean = extract(target, fcfg);
  ex.dvec = embed_reference(ref_audio, fcfg, dvec_dim);

  ex.overlap_labels.assign(ex.noisy.rows, 0);
  if (spec.noise_kind == NoiseKind::kSpeech) {
    for (int t = 0; t < ex.noisy.rows; ++t) {
      uint64_t lo = 0, hi = 0;
      frame_sample_span(t, fcfg, mixture.sample_rate_hz, scaled_noise.samples.size(),
                        &lo, &hi);
      double acc = 0.0;
      for (uint64_t i = lo; i < hi; ++i) acc += scaled_noise.samples[i] * scaled_noise.samples[i];
      double frame_rms = hi > lo ? std::sqrt(acc / static_cast<double>(hi - lo)) : 0.0;
      ex.overlap_labels[t] = frame_rms > kOverlapSilenceRms ? 1 : 0;
    }
  }
  return ex;
}

std::vector<ManifestRow> read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open manifest: " + path);
  std::vector<ManifestRow> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, '\t')) fields.push_back(field);
    if (fields.size() != 4)
      throw FormatError(path + ":" + std::to_string(lineno) +
                        ": expected 4 tab-separated fields, got " +
                        std::to_string(fields.size()));
    rows.push_back(
        {fields[0], fields[1], fields[2], noise_kind_from_name(fields[3])});
  }
  return rows;
}

std::string example_stem(int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "ex%06d", index);
  return buf;
}

void write_example(const std::string& dir, int index, const MixtureExample& ex) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const std::string stem = example_stem(index);
  const fs::path base = fs::path(dir) / stem;
  write_vff(base.string() + ".noisy.vff", ex.noisy);
  write_vff(base.string() + ".clean.vff", ex.clean);
  save_dvector(base.string() + ".dvec", ex.dvec);

  json j;
  j["spec"]["snr_db"] = ex.spec.snr_db;
  j["spec"]["noise_kind"] = noise_kind_name(ex.spec.noise_kind);
  j["spec"]["room"] = ex.spec.room == RoomKind::kReverb ? "reverb" : "additive";
  j["spec"]["reverb_target"] = ex.spec.reverb_target;
  j["spec"]["seed"] = ex.spec.seed;
  if (ex.spec.rir) j["spec"]["rir_taps"] = ex.spec.rir->size();
  j["meta"]["noise_gain"] = ex.meta.noise_gain;
  j["meta"]["measured_snr_db"] = ex.meta.measured_snr_db;
  j["meta"]["clipped"] = ex.meta.clipped;
  j["labels"] = ex.overlap_labels;
  j["dvector"] = stem + ".dvec";
  j["variant"] = feature_variant_name(ex.noisy.variant);

  std::ofstream out(base.string() + ".json");
  if (!out) throw FormatError("cannot write sidecar: " + base.string() + ".json");
  out << j.dump(2) << "\n";
}

MixtureExample load_example(const std::string& dir, int index) {
  namespace fs = std::filesystem;
  const fs::path base = fs::path(dir) / example_stem(index);
  std::ifstream in(base.string() + ".json");
  if (!in) throw FormatError("cannot open sidecar: " + base.string() + ".json");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw FormatError(base.string() + ".json: " + e.what());
  }

  MixtureExample ex;
  ex.noisy = read_vff(base.string() + ".noisy.vff");
  ex.clean = read_vff(base.string() + ".clean.vff");
  ex.dvec = load_dvector((fs::path(dir) / j.at("dvector").get<std::string>()).string());
  ex.overlap_labels = j.at("labels").get<std::vector<uint8_t>>();
  ex.spec.snr_db = j.at("spec").at("snr_db").get<double>();
  ex.spec.noise_kind = noise_kind_from_name(j.at("spec").at("noise_kind").get<std::string>());
  ex.spec.room = j.at("spec").at("room").get<std::string>() == "reverb"
                     ? RoomKind::kReverb
                     : RoomKind::kAdditive;
  ex.spec.reverb_target = j.at("spec").value("reverb_target", false);
  ex.spec.seed = j.at("spec").value("seed", 0ull);
  // The RIR taps themselves are not stored; keep the spec consistent.
  if (ex.spec.room == RoomKind::kReverb)
    ex.spec.rir = std::vector<double>{1.0};
  ex.meta.noise_gain = j.at("meta").at("noise_gain").get<double>();
  ex.meta.measured_snr_db = j.at("meta").at("measured_snr_db").get<double>();
  ex.meta.clipped = j.at("meta").at("clipped").get<bool>();

  check(ex.noisy.rows == ex.clean.rows && ex.noisy.cols == ex.clean.cols,
        "load_example: noisy/clean shape mismatch");
  check(ex.overlap_labels.size() == static_cast<size_t>(ex.noisy.rows),
        "load_example: label count mismatch");
  return ex;
}

std::vector<MixtureExample> load_examples(const std::string& dir) {
  namespace fs = std::filesystem;
  std::vector<MixtureExample> examples;
  for (int i = 0;; ++i) {
    fs::path sidecar = fs::path(dir) / (example_stem(i) + ".json");
    if (!fs::exists(sidecar)) break;
    examples.push_back(load_example(dir, i));
  }
  if (examples.empty())
    throw FormatError("no examples found in " + dir + " (expected ex000000.json...)");
  return examples;
}

}  // namespace vflite
