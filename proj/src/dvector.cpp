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

#include "vflite/dvector.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "vflite/error.hpp"
#include "vflite/rng.hpp"

namespace vflite {

namespace {

constexpr char kVfdMagic[4] = {'V', 'F', 'D', '1'};
constexpr int kStatsDim = 2 * 128;  // per-band mean + stddev of 128 log-mels
constexpr uint64_t kProjectionSeed = 0xd1ce5eedu;

double l2_norm(const std::vector<double>& v) {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return std::sqrt(acc);
}

// Seeded Gaussian matrix with Gram-Schmidt orthonormalized rows. Rows past
// the rank of the stats space cannot be orthogonalized, so they are only
// normalized; close enough for a dimensionality shim.
std::vector<double> projection_matrix(int dim) {
  Rng rng(kProjectionSeed);
  std::vector<std::vector<double>> rows(dim, std::vector<double>(kStatsDim));
  for (auto& r : rows)
    for (auto& x : r) x = rng.gaussian();
  for (int i = 0; i < dim; ++i) {
    if (i < kStatsDim) {
      for (int j = 0; j < i; ++j) {
        double dot = 0.0;
        for (int k = 0; k < kStatsDim; ++k) dot += rows[i][k] * rows[j][k];
        for (int k = 0; k < kStatsDim; ++k) rows[i][k] -= dot * rows[j][k];
      }
    }
    double n = l2_norm(rows[i]);
    check(n > 1e-12, "projection_matrix: degenerate row");
    for (auto& x : rows[i]) x /= n;
  }
  std::vector<double> flat(static_cast<size_t>(dim) * kStatsDim);
  for (int i = 0; i < dim; ++i)
    std::memcpy(flat.data() + static_cast<size_t>(i) * kStatsDim, rows[i].data(),
                sizeof(double) * kStatsDim);
  return flat;
}

}  // namespace

double DVector::norm() const {
  double acc = 0.0;
  for (float x : values) acc += static_cast<double>(x) * x;
  return std::sqrt(acc);
}

void DVector::validate() const {
  check(!values.empty(), "DVector: empty");
  for (float x : values)
    if (!std::isfinite(x)) throw NumericError("DVector: non-finite value");
  check(std::abs(norm() - 1.0) <= 1e-6, "DVector: not unit norm");
}

DVector embed_reference(const Waveform& ref, const FeatureConfig& fcfg, int dim) {
  check(dim >= 1, "embed_reference: dim must be positive");
  if (ref.samples.size() < static_cast<size_t>(ref.sample_rate_hz))
    throw ValueError("embed_reference: reference audio shorter than 1 s");

  FeatureConfig cfg = fcfg;
  cfg.variant = FeatureVariant::kFilterbank;
  cfg.n_mels = 128;
  cfg.validate();
  FeatureSequence mel = extract(ref, cfg);

  std::vector<double> stats(kStatsDim, 0.0);
  for (int b = 0; b < 128; ++b) {
    double mean = 0.0;
    for (int t = 0; t < mel.rows; ++t) mean += mel.at(t, b);
    mean /= mel.rows;
    double var = 0.0;
    for (int t = 0; t < mel.rows; ++t) {
      double d = mel.at(t, b) - mean;
      var += d * d;
    }
    stats[b] = mean;
    stats[128 + b] = std::sqrt(var / mel.rows);
  }

  std::vector<double> v;
  if (dim == kStatsDim) {
    v = stats;
  } else {
    std::vector<double> proj = projection_matrix(dim);
    v.assign(dim, 0.0);
    for (int i = 0; i < dim; ++i) {
      double acc = 0.0;
      for (int k = 0; k < kStatsDim; ++k)
        acc += proj[static_cast<size_t>(i) * kStatsDim + k] * stats[k];
      v[i] = acc;
    }
  }

  double n = l2_norm(v);
  if (n <= 1e-12)
    throw ValueError("embed_reference: reference has no spectral energy");
  DVector d;
  d.values.resize(dim);
  for (int i = 0; i < dim; ++i) d.values[i] = static_cast<float>(v[i] / n);
  return d;
}

void save_dvector(const std::string& path, const DVector& v) {
  v.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open d-vector file for writing: " + path);
  out.write(kVfdMagic, 4);
  uint32_t d = static_cast<uint32_t>(v.values.size());
  out.write(reinterpret_cast<char*>(&d), 4);
  out.write(reinterpret_cast<const char*>(v.values.data()),
            static_cast<std::streamsize>(v.values.size() * sizeof(float)));
}

DVector load_dvector(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open d-vector file: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kVfdMagic, 4) != 0)
    throw FormatError(path + ": bad VFD1 magic");
  uint32_t d = 0;
  in.read(reinterpret_cast<char*>(&d), 4);
  if (!in || d == 0 || d > (1u << 20))
    throw FormatError(path + ": bad d-vector dimension");
  DVector v;
  v.values.resize(d);
  in.read(reinterpret_cast<char*>(v.values.data()),
          static_cast<std::streamsize>(d * sizeof(float)));
  if (static_cast<size_t>(in.gcount()) != d * sizeof(float))
    throw FormatError(path + ": truncated d-vector data");
  for (float x : v.values)
    if (!std::isfinite(x)) throw FormatError(path + ": non-finite d-vector value");

  double n = v.norm();
  if (std::abs(n - 1.0) > 1e-3)
    throw FormatError(path + ": d-vector norm " + std::to_string(n) +
                      " too far from 1");
  if (std::abs(n - 1.0) > 1e-6) {
    for (auto& x : v.values) x = static_cast<float>(x / n);
  }
  return v;
}

}  // namespace vflite
