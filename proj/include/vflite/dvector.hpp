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
#include <vector>

#include "vflite/dsp.hpp"
#include "vflite/wav.hpp"

namespace vflite {

inline constexpr int kDVectorDim = 256;

// Unit-norm speaker embedding conditioning the mask network.
struct DVector {
  std::vector<float> values;

  int dim() const { return static_cast<int>(values.size()); }
  double norm() const;
  void validate() const;  // finite, unit norm within 1e-6
};

// Deterministic statistics embedder: per-band mean and standard deviation
// of 128-dim log-mel frames (256 dims), optionally projected to `dim` with
// a fixed seeded near-orthonormal matrix, then L2-normalized. A stand-in
// with a stable contract; not a trained speaker encoder.
DVector embed_reference(const Waveform& ref, const FeatureConfig& fcfg,
                        int dim = kDVectorDim);

// "VFD1" file: magic, u32 D, D float32 little-endian values. Loading
// re-validates the norm: within 1e-6 of 1 the values are accepted as-is
// (keeps save->load bit-exact), off by up to 1e-3 they are renormalized,
// anything worse is rejected.
void save_dvector(const std::string& path, const DVector& v);
DVector load_dvector(const std::string& path);

}  // namespace vflite
