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

#include <doctest.h>

#include <cmath>

#include "vflite/error.hpp"
#include "vflite/rng.hpp"
#include "vflite/suppression.hpp"

using namespace vflite;

TEST_CASE("f_adapt: margin endpoints and clamping") {
  CHECK(f_adapt(1.0) == 1.0);
  CHECK(f_adapt(-1.0) == 0.0);
  CHECK(f_adapt(0.0) == 0.5);
  CHECK(f_adapt(5.0) == 1.0);
  CHECK(f_adapt(-7.0) == 0.0);
}

TEST_CASE("update_strength: direct recursion cases") {
  SuppressionConfig cfg;
  cfg.mode = SuppressionMode::kAdaptive;

  SUBCASE("beta=0 passes a*f+b through") {
    cfg.beta = 0.0;
    SuppressionState s{0.4};
    CHECK(update_strength(s, 0.7, cfg) == 0.7);
    CHECK(s.w_prev == 0.7);
  }

  SUBCASE("beta=0.8 from w_prev=0 with f=1 gives 0.2") {
    cfg.beta = 0.8;
    SuppressionState s{0.0};
    CHECK(update_strength(s, 1.0, cfg) == doctest::Approx(0.2).epsilon(1e-15));
  }

  SUBCASE("clamps to [0,1] when a*f+b exceeds 1") {
    cfg.beta = 0.0;
    cfg.a = 2.0;
    cfg.b = 0.5;
    SuppressionState s{0.0};
    CHECK(update_strength(s, 1.0, cfg) == 1.0);
  }

  SUBCASE("f outside [0,1] is rejected") {
    SuppressionState s{0.0};
    CHECK_THROWS_AS(update_strength(s, 1.5, cfg), ValueError);
  }
}

TEST_CASE("update_strength: geometric convergence at ratio beta") {
  // With constant f = c, |w_t - L| = beta^t * |w_0 - L| where
  // L = a*c + b (in range, so the clamp never engages).
  SuppressionConfig cfg;
  cfg.mode = SuppressionMode::kAdaptive;
  cfg.a = 0.9;
  cfg.b = 0.05;
  cfg.beta = 0.8;
  const double c = 0.6;
  const double target = cfg.a * c + cfg.b;

  SuppressionState s = make_suppression_state(cfg);
  const double w0 = s.w_prev;
  for (int t = 1; t <= 100; ++t) {
    double w = update_strength(s, c, cfg);
    double expect = std::pow(cfg.beta, t) * std::abs(w0 - target);
    CHECK(std::abs(std::abs(w - target) - expect) <= 1e-12);
  }
}

TEST_CASE("update_strength: monotone in f for fixed state") {
  SuppressionConfig cfg;
  cfg.mode = SuppressionMode::kAdaptive;
  cfg.beta = 0.8;
  double prev = -1.0;
  for (double f = 0.0; f <= 1.0; f += 0.05) {
    SuppressionState s{0.3};
    double w = update_strength(s, f, cfg);
    CHECK(w >= prev);
    prev = w;
  }
}

TEST_CASE("update_strength: w stays in [0,1] under random abuse") {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    SuppressionConfig cfg;
    cfg.mode = SuppressionMode::kAdaptive;
    cfg.a = rng.uniform(0.1, 3.0);
    cfg.b = rng.uniform(0.0, 2.0);
    cfg.beta = rng.uniform(0.0, 0.99);
    SuppressionState s = make_suppression_state(cfg);
    for (int t = 0; t < 200; ++t) {
      double w = update_strength(s, rng.uniform(0.0, 1.0), cfg);
      CHECK(w >= 0.0);
      CHECK(w <= 1.0);
    }
  }
}

TEST_CASE("compensate: endpoints bit-exact, interior convex") {
  std::vector<float> enh = {0.0f, 1.5f, 0.25f};
  std::vector<float> in = {2.0f, 0.5f, 0.25f};
  std::vector<float> out(3);

  compensate(enh, in, 0.0, out);
  CHECK(out == in);  // w=0: filtering disabled
  compensate(enh, in, 1.0, out);
  CHECK(out == enh);  // w=1: no compensation

  compensate(enh, in, 0.5, out);
  CHECK(out[0] == 1.0f);
  for (int i = 0; i < 3; ++i) {
    CHECK(out[i] >= std::min(enh[i], in[i]));
    CHECK(out[i] <= std::max(enh[i], in[i]));
  }

  CHECK_THROWS_AS(compensate(enh, in, 1.5, out), ValueError);
  std::vector<float> bad(2);
  CHECK_THROWS_AS(compensate(enh, in, 0.5, bad), ValueError);
}

TEST_CASE("next_strength: mode dispatch") {
  SuppressionState s{0.5};

  SuppressionConfig off;
  off.mode = SuppressionMode::kOff;
  CHECK(next_strength(s, 3.0, off) == 0.0);

  SuppressionConfig fixed;
  fixed.mode = SuppressionMode::kFixed;
  fixed.w = 0.6;
  CHECK(next_strength(s, -3.0, fixed) == 0.6);

  SuppressionConfig ad;
  ad.mode = SuppressionMode::kAdaptive;
  ad.beta = 0.0;
  SuppressionState s2{0.0};
  CHECK(next_strength(s2, 0.0, ad) == 0.5);  // f_adapt(0) = 0.5
}

TEST_CASE("suppression config: parse and validation") {
  SuppressionConfig off = SuppressionConfig::parse("off");
  CHECK(off.mode == SuppressionMode::kOff);

  SuppressionConfig fx = SuppressionConfig::parse("fixed:0.3");
  CHECK(fx.mode == SuppressionMode::kFixed);
  CHECK(fx.w == doctest::Approx(0.3));

  SuppressionConfig ad = SuppressionConfig::parse("adaptive:1.0,0.1,0.8");
  CHECK(ad.mode == SuppressionMode::kAdaptive);
  CHECK(ad.b == doctest::Approx(0.1));
  CHECK(ad.beta == doctest::Approx(0.8));

  CHECK_THROWS_AS(SuppressionConfig::parse("sometimes"), UsageError);
  CHECK_THROWS_AS(SuppressionConfig::parse("fixed:1.2"), ValueError);
  CHECK_THROWS_AS(SuppressionConfig::parse("adaptive:1.0,0.1"), UsageError);

  SuppressionConfig bad;
  bad.mode = SuppressionMode::kAdaptive;
  bad.beta = 1.0;
  CHECK_THROWS_AS(bad.validate(), ValueError);
}
