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
#include "vflite/masknet.hpp"
#include "vflite/model_io.hpp"
#include "test_util.hpp"

using namespace vflite;
using namespace vflite::test;

namespace {

MaskNetConfig toy_cfg(int f = 12, int d = 6, int layers = 2, int units = 16) {
  MaskNetConfig cfg;
  cfg.input_dim = f;
  cfg.dvec_dim = d;
  cfg.lstm_layers = layers;
  cfg.lstm_units = units;
  cfg.head_hidden = {8, 8};
  cfg.variant = FeatureVariant::kFilterbank;
  return cfg;
}

DVector unit_dvec(int d, uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(d);
  double norm = 0.0;
  for (auto& x : v) {
    x = rng.gaussian();
    norm += x * x;
  }
  norm = std::sqrt(norm);
  DVector out;
  out.values.resize(d);
  for (int i = 0; i < d; ++i) out.values[i] = static_cast<float>(v[i] / norm);
  return out;
}

}  // namespace

TEST_CASE("init_params: deterministic, bounded, forget bias set") {
  MaskNetConfig cfg = toy_cfg();
  NetParams a = init_params(cfg, 0);
  NetParams b = init_params(cfg, 0);
  NetParams c = init_params(cfg, 1);
  CHECK(a.lstm[0].w_x.v == b.lstm[0].w_x.v);
  CHECK(a.lstm[0].w_x.v != c.lstm[0].w_x.v);

  for_each_tensor(a, [&](const std::string&, TensorKind kind,
                         const std::vector<uint32_t>& shape, const float* data,
                         size_t n) {
    if (kind != TensorKind::kWeight) return;
    double bound = 1.0 / std::sqrt(static_cast<double>(shape[1]));
    for (size_t i = 0; i < n; ++i) {
      CHECK(std::isfinite(data[i]));
      CHECK(std::abs(data[i]) <= bound);
    }
  });

  for (const auto& layer : a.lstm)
    for (int u = 0; u < cfg.lstm_units; ++u) {
      CHECK(layer.b[cfg.lstm_units + u] == 1.0f);  // forget gate
      CHECK(layer.b[u] == 0.0f);
    }
}

TEST_CASE("param_count: toy formula check") {
  MaskNetConfig cfg = toy_cfg(6, 4, 2, 8);
  cfg.head_hidden = {8, 8};
  // lstm0: 4*8*(10+8)+32, lstm1: 4*8*(8+8)+32, mask: 6*8+6,
  // noise: 8*8+8, 8*8+8, 1*8+1.
  size_t expect = (4 * 8 * 18 + 32) + (4 * 8 * 16 + 32) + (6 * 8 + 6) +
                  (8 * 8 + 8) + (8 * 8 + 8) + (8 + 1);
  CHECK(param_count(cfg) == expect);
}

TEST_CASE("forward_step: zero params give mask 0.5 and score 0") {
  MaskNetConfig cfg = toy_cfg();
  NetParams p = zero_params_t<float>(cfg);
  StreamState state = make_stream_state(cfg);
  std::vector<float> frame(cfg.input_dim, 0.7f);
  StepOutput out = forward_step(p, cfg, state, frame, unit_dvec(cfg.dvec_dim, 1));
  for (float m : out.mask) CHECK(m == 0.5f);
  CHECK(out.noise_score == 0.0f);
}

TEST_CASE("forward_step: severed recurrence makes identical frames agree") {
  MaskNetConfig cfg = toy_cfg();
  NetParams p = init_params(cfg, 3);
  // Cut both recurrent paths: zero W_h and drive the forget gate to ~0 so
  // the cell state cannot carry information either.
  for (auto& layer : p.lstm) {
    std::fill(layer.w_h.v.begin(), layer.w_h.v.end(), 0.0f);
    std::fill(layer.b.begin() + cfg.lstm_units,
              layer.b.begin() + 2 * cfg.lstm_units, -40.0f);
  }
  DVector dvec = unit_dvec(cfg.dvec_dim, 2);
  std::vector<float> frame(cfg.input_dim);
  for (int f = 0; f < cfg.input_dim; ++f) frame[f] = 0.1f * f;

  StreamState state = make_stream_state(cfg);
  StepOutput first = forward_step(p, cfg, state, frame, dvec);
  StepOutput second = forward_step(p, cfg, state, frame, dvec);
  for (int f = 0; f < cfg.input_dim; ++f)
    CHECK(second.mask[f] == doctest::Approx(first.mask[f]).epsilon(1e-6));
  CHECK(second.noise_score == doctest::Approx(first.noise_score).epsilon(1e-6));
  CHECK(state.frames_seen == 2);
}

TEST_CASE("forward_step: dimension mismatches are rejected") {
  MaskNetConfig cfg = toy_cfg();
  NetParams p = init_params(cfg, 4);
  StreamState state = make_stream_state(cfg);
  std::vector<float> bad_frame(cfg.input_dim + 1, 0.0f);
  CHECK_THROWS_AS(forward_step(p, cfg, state, bad_frame, unit_dvec(cfg.dvec_dim, 1)),
                  ValueError);
  std::vector<float> frame(cfg.input_dim, 0.0f);
  CHECK_THROWS_AS(forward_step(p, cfg, state, frame, unit_dvec(cfg.dvec_dim + 2, 1)),
                  ValueError);
}

TEST_CASE("streaming equals batch forward (fold oracle)") {
  for (bool with_conv : {false, true}) {
    MaskNetConfig cfg = toy_cfg();
    if (with_conv) cfg.conv = ConvConfig{3, 2};
    NetParams p = init_params(cfg, 5);
    DVector dvec = unit_dvec(cfg.dvec_dim, 6);
    FeatureSequence frames =
        random_features(cfg.variant, 50, cfg.input_dim, 7, 0.0, 2.0);

    SequenceOutput batch = forward_sequence(p, cfg, frames, dvec);

    StreamState state = make_stream_state(cfg);
    double max_diff = 0.0;
    for (int t = 0; t < frames.rows; ++t) {
      StepOutput step = forward_step(p, cfg, state, frames.row(t), dvec);
      for (int f = 0; f < cfg.input_dim; ++f)
        max_diff = std::max(max_diff,
                            std::abs(static_cast<double>(step.mask[f]) -
                                     batch.masks.row(t)[f]));
      max_diff = std::max(max_diff, std::abs(static_cast<double>(step.noise_score) -
                                             batch.noise_scores[t]));
    }
    CHECK(max_diff < 1e-5);
  }
}

TEST_CASE("causality: changing frame t leaves earlier outputs untouched") {
  MaskNetConfig cfg = toy_cfg();
  NetParams p = init_params(cfg, 8);
  DVector dvec = unit_dvec(cfg.dvec_dim, 9);
  FeatureSequence frames = random_features(cfg.variant, 20, cfg.input_dim, 10);

  SequenceOutput base = forward_sequence(p, cfg, frames, dvec);
  const int cut = 11;
  FeatureSequence altered = frames;
  for (int f = 0; f < cfg.input_dim; ++f) altered.at(cut, f) += 1.0f;
  SequenceOutput changed = forward_sequence(p, cfg, altered, dvec);

  for (int t = 0; t < cut; ++t) {
    for (int f = 0; f < cfg.input_dim; ++f)
      CHECK(changed.masks.row(t)[f] == base.masks.row(t)[f]);
    CHECK(changed.noise_scores[t] == base.noise_scores[t]);
  }
  // And the altered frame itself does change the output.
  bool any_diff = false;
  for (int f = 0; f < cfg.input_dim; ++f)
    any_diff |= changed.masks.row(cut)[f] != base.masks.row(cut)[f];
  CHECK(any_diff);
}

TEST_CASE("state isolation: interleaved streams match solo runs") {
  MaskNetConfig cfg = toy_cfg();
  NetParams p = init_params(cfg, 11);
  DVector dvec_a = unit_dvec(cfg.dvec_dim, 12);
  DVector dvec_b = unit_dvec(cfg.dvec_dim, 13);
  FeatureSequence fa = random_features(cfg.variant, 15, cfg.input_dim, 14);
  FeatureSequence fb = random_features(cfg.variant, 15, cfg.input_dim, 15);

  SequenceOutput solo_a = forward_sequence(p, cfg, fa, dvec_a);
  SequenceOutput solo_b = forward_sequence(p, cfg, fb, dvec_b);

  StreamState sa = make_stream_state(cfg), sb = make_stream_state(cfg);
  for (int t = 0; t < 15; ++t) {
    StepOutput oa = forward_step(p, cfg, sa, fa.row(t), dvec_a);
    StepOutput ob = forward_step(p, cfg, sb, fb.row(t), dvec_b);
    for (int f = 0; f < cfg.input_dim; ++f) {
      CHECK(oa.mask[f] == solo_a.masks.row(t)[f]);
      CHECK(ob.mask[f] == solo_b.masks.row(t)[f]);
    }
  }
}

TEST_CASE("masks stay strictly inside (0, 1) even when saturated") {
  MaskNetConfig cfg = toy_cfg();
  NetParams p = init_params(cfg, 16);
  // Saturate the mask head.
  std::fill(p.mask.b.begin(), p.mask.b.end(), 50.0f);
  StreamState state = make_stream_state(cfg);
  FeatureSequence frames = random_features(cfg.variant, 3, cfg.input_dim, 17);
  StepOutput out = forward_step(p, cfg, state, frames.row(0), unit_dvec(cfg.dvec_dim, 1));
  for (float m : out.mask) {
    CHECK(m > 0.0f);
    CHECK(m < 1.0f);
  }
}

TEST_CASE("apply_mask: endpoints and the scalar filterbank case") {
  FeatureSequence s = random_features(FeatureVariant::kFilterbank, 4, 5, 18, 0.0, 3.0);

  Masks ones{4, 5, std::vector<float>(20, 1.0f)};
  FeatureSequence same = apply_mask(s, ones);
  CHECK(same.data == s.data);

  Masks zeros{4, 5, std::vector<float>(20, 0.0f)};
  FeatureSequence gone = apply_mask(s, zeros);
  for (float v : gone.data) CHECK(v == 0.0f);

  // One filterbank cell: S_in = 1 (linear e-1), m = 0.5.
  FeatureSequence one = FeatureSequence::zeros(FeatureVariant::kFilterbank, 1, 1, 0.01);
  one.at(0, 0) = 1.0f;
  Masks half{1, 1, {0.5f}};
  FeatureSequence o = apply_mask(one, half);
  CHECK(o.at(0, 0) ==
        doctest::Approx(std::log1p(0.5 * (std::exp(1.0) - 1.0))).epsilon(1e-6));
  CHECK(o.at(0, 0) == doctest::Approx(0.6201).epsilon(1e-3));

  // FFT magnitudes use the raw product.
  FeatureSequence mag = FeatureSequence::zeros(FeatureVariant::kFftMagnitude, 1, 1, 0.01);
  mag.at(0, 0) = 2.0f;
  FeatureSequence m2 = apply_mask(mag, half);
  CHECK(m2.at(0, 0) == 1.0f);

  // Raw-product ablation on log features.
  FeatureSequence raw = apply_mask(one, half, /*linear_domain=*/false);
  CHECK(raw.at(0, 0) == 0.5f);
}

TEST_CASE("apply_mask: suppression-only and range checks") {
  FeatureSequence s = random_features(FeatureVariant::kFilterbank, 6, 7, 19, 0.0, 4.0);
  FeatureSequence masks_src = random_features(FeatureVariant::kFilterbank, 6, 7, 20, 0.001, 0.999);
  Masks m{6, 7, masks_src.data};
  FeatureSequence out = apply_mask(s, m);
  for (size_t i = 0; i < out.data.size(); ++i) {
    CHECK(out.data[i] >= 0.0f);
    CHECK(out.data[i] <= s.data[i]);
  }

  Masks bad{6, 7, std::vector<float>(42, 1.5f)};
  CHECK_THROWS_AS(apply_mask(s, bad), ValueError);
  Masks wrong_shape{3, 7, std::vector<float>(21, 0.5f)};
  CHECK_THROWS_AS(apply_mask(s, wrong_shape), ValueError);
}

TEST_CASE("vfm: float model roundtrip is bit-exact") {
  TempDir tmp("vfm");
  MaskNetConfig cfg = toy_cfg();
  cfg.conv = ConvConfig{3, 2};
  MaskNetModel m;
  m.cfg = cfg;
  m.params = init_params(cfg, 21);
  save_model(tmp.file("m.vfm"), m);
  MaskNetModel r = load_model(tmp.file("m.vfm"));
  CHECK(!r.quantized());
  CHECK(r.cfg.input_dim == cfg.input_dim);
  CHECK(r.cfg.conv.has_value());
  CHECK(r.cfg.head_hidden == cfg.head_hidden);

  bool same = true;
  size_t seen = 0;
  for_each_tensor(m.float_params(), [&](const std::string& name, TensorKind,
                                        const std::vector<uint32_t>&,
                                        const float* data, size_t n) {
    // Compare against the reloaded copy tensor-by-tensor.
    for_each_tensor(r.float_params(), [&](const std::string& name2, TensorKind,
                                          const std::vector<uint32_t>&,
                                          const float* data2, size_t n2) {
      if (name2 != name) return;
      ++seen;
      same &= n == n2 && std::equal(data, data + n, data2);
    });
  });
  CHECK(seen == 16);  // conv(2) + 2 lstm(3 each) + mask(2) + noise heads(6)
  CHECK(same);
}

TEST_CASE("vfm: malformed files are rejected") {
  TempDir tmp("vfmbad");
  {
    std::ofstream out(tmp.file("bad.vfm"), std::ios::binary);
    out << "WHAT";
  }
  CHECK_THROWS_AS(load_model(tmp.file("bad.vfm")), FormatError);

  // Truncated tensor payload.
  MaskNetConfig cfg = toy_cfg();
  MaskNetModel m;
  m.cfg = cfg;
  m.params = init_params(cfg, 22);
  save_model(tmp.file("ok.vfm"), m);
  std::ifstream in(tmp.file("ok.vfm"), std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  in.close();
  {
    std::ofstream out(tmp.file("trunc.vfm"), std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() / 2));
  }
  CHECK_THROWS_AS(load_model(tmp.file("trunc.vfm")), FormatError);
}
