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

#include <cmath>
#include <limits>
#include <span>

#include "vflite/masknet.hpp"

namespace vflite {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// y += M x, accumulating in double regardless of T.
template <typename T>
void matvec_add(const MatT<T>& m, std::span<const T> x, std::span<T> y) {
  for (int r = 0; r < m.rows; ++r) {
    const T* row = m.row(r);
    double acc = static_cast<double>(y[r]);
    for (int c = 0; c < m.cols; ++c)
      acc += static_cast<double>(row[c]) * static_cast<double>(x[c]);
    y[r] = static_cast<T>(acc);
  }
}

// y += M x into a double buffer (no narrowing between chained products).
template <typename T>
void matvec_accumulate(const MatT<T>& m, std::span<const T> x, std::span<double> y) {
  for (int r = 0; r < m.rows; ++r) {
    const T* row = m.row(r);
    double acc = y[r];
    for (int c = 0; c < m.cols; ++c)
      acc += static_cast<double>(row[c]) * static_cast<double>(x[c]);
    y[r] = acc;
  }
}

// Mask values are nudged one representable value inside (0, 1) so the
// open-interval contract survives the float cast of a saturated sigmoid.
inline float clamp_mask_open01(double m) {
  float f = static_cast<float>(m);
  if (f <= 0.0f) f = std::numeric_limits<float>::min();
  if (f >= 1.0f) f = 1.0f - std::numeric_limits<float>::epsilon() / 2.0f;
  return f;
}

inline double clamp_mask_open01_d(double m) {
  if (m <= 0.0) return std::numeric_limits<double>::min();
  if (m >= 1.0) return 1.0 - std::numeric_limits<double>::epsilon() / 2.0;
  return m;
}

}  // namespace vflite
