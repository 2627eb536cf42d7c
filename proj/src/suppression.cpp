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

#include "vflite/suppression.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "vflite/error.hpp"

namespace vflite {

void SuppressionConfig::validate() const {
  if (mode == SuppressionMode::kFixed)
    check(w >= 0.0 && w <= 1.0, "suppression: fixed w must be in [0, 1]");
  if (mode == SuppressionMode::kAdaptive) {
    check(a > 0.0, "suppression: a must be > 0");
    check(b >= 0.0, "suppression: b must be >= 0");
    check(beta >= 0.0 && beta < 1.0, "suppression: beta must be in [0, 1)");
  }
}

SuppressionConfig SuppressionConfig::parse(const std::string& text) {
  SuppressionConfig cfg;
  if (text == "off") {
    cfg.mode = SuppressionMode::kOff;
    cfg.w = 0.0;
    return cfg;
  }
  if (text.rfind("fixed:", 0) == 0) {
    cfg.mode = SuppressionMode::kFixed;
    try {
      cfg.w = std::stod(text.substr(6));
    } catch (const std::exception&) {
      throw UsageError("suppression: cannot parse fixed strength in '" + text + "'");
    }
    cfg.validate();
    return cfg;
  }
  if (text == "adaptive") {
    cfg.mode = SuppressionMode::kAdaptive;
    return cfg;
  }
  if (text.rfind("adaptive:", 0) == 0) {
    cfg.mode = SuppressionMode::kAdaptive;
    std::stringstream ss(text.substr(9));
    std::string tok;
    double vals[3];
    int i = 0;
    while (std::getline(ss, tok, ',') && i < 3) {
      try {
        vals[i++] = std::stod(tok);
      } catch (const std::exception&) {
        throw UsageError("suppression: cannot parse '" + text + "'");
      }
    }
    if (i != 3) throw UsageError("suppression: adaptive expects a,b,beta");
    cfg.a = vals[0];
    cfg.b = vals[1];
    cfg.beta = vals[2];
    cfg.validate();
    return cfg;
  }
  throw UsageError("suppression: unknown mode '" + text +
                   "' (expected off, fixed:W, or adaptive[:a,b,beta])");
}

std::string SuppressionConfig::describe() const {
  switch (mode) {
    case SuppressionMode::kOff:
      return "off";
    case SuppressionMode::kFixed:
      return "fixed:" + std::to_string(w);
    case SuppressionMode::kAdaptive: {
      std::ostringstream os;
      os << "adaptive:" << a << "," << b << "," << beta;
      return os.str();
    }
  }
  return "?";
}

SuppressionState make_suppression_state(const SuppressionConfig& cfg) {
  SuppressionState s;
  s.w_prev = std::clamp(cfg.b, 0.0, 1.0);
  return s;
}

double f_adapt(double noise_score) {
  return std::clamp((noise_score + 1.0) / 2.0, 0.0, 1.0);
}

double update_strength(SuppressionState& state, double f,
                       const SuppressionConfig& cfg) {
  check(f >= 0.0 && f <= 1.0, "update_strength: f must be in [0, 1]");
  double w = cfg.beta * state.w_prev + (1.0 - cfg.beta) * (cfg.a * f + cfg.b);
  w = std::clamp(w, 0.0, 1.0);
  state.w_prev = w;
  return w;
}

double next_strength(SuppressionState& state, double noise_score,
                     const SuppressionConfig& cfg) {
  switch (cfg.mode) {
    case SuppressionMode::kOff:
      return 0.0;
    case SuppressionMode::kFixed:
      return cfg.w;
    case SuppressionMode::kAdaptive:
      return update_strength(state, f_adapt(noise_score), cfg);
  }
  return 0.0;
}

void compensate(std::span<const float> s_enh, std::span<const float> s_in,
                double w, std::span<float> out) {
  check(w >= 0.0 && w <= 1.0, "compensate: w must be in [0, 1]");
  check(s_enh.size() == s_in.size() && s_in.size() == out.size(),
        "compensate: width mismatch");
  if (w == 0.0) {
    std::copy(s_in.begin(), s_in.end(), out.begin());
    return;
  }
  if (w == 1.0) {
    std::copy(s_enh.begin(), s_enh.end(), out.begin());
    return;
  }
  for (size_t i = 0; i < out.size(); ++i)
    out[i] = static_cast<float>(w * s_enh[i] + (1.0 - w) * s_in[i]);
}

}  // namespace vflite
