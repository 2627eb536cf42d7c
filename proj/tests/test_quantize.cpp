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
#include "vflite/model_io.hpp"
#include "vflite/quantize.hpp"
#include "test_util.hpp"

using namespace vflite;
using namespace vflite::test;

namespace {

MaskNetConfig toy_cfg() {
  MaskNetConfig cfg;
  cfg.input_dim = 10;
  cfg.dvec_dim = 4;
  cfg.lstm_layers = 2;
  cfg.lstm_units = 12;
  cfg.head_hidden = {8};
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

TEST_CASE("quantize_tensor: scale rule and exact values") {
  std::vector<float> t = {1.27f, -0.5f, 0.5f, 0.0f};
  QuantTensor q = quantize_tensor(t);
  CHECK(q.scale == doctest::Approx(0.01).epsilon(1e-6));
  CHECK(q.q[0] == 127);
  CHECK(q.q[1] == -50);
  CHECK(q.q[2] == 50);
  CHECK(q.q[3] == 0);
}

TEST_CASE("quantize_tensor: all-zero tensor uses scale 1") {
  std::vector<float> t(16, 0.0f);
  QuantTensor q = quantize_tensor(t);
  CHECK(q.scale == 1.0f);
  for (int8_t v : q.q) CHECK(v == 0);
}

TEST_CASE("quantize_tensor: roundtrip error bounded by scale/2") {
  Rng rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<float> t(5000);
    double range = rng.uniform(0.01, 10.0);
    for (auto& v : t) v = static_cast<float>(rng.uniform(-range, range));
    QuantTensor q = quantize_tensor(t);
    std::vector<float> back = dequantize_tensor(q);
    for (size_t i = 0; i < t.size(); ++i)
      CHECK(std::abs(static_cast<double>(t[i]) - back[i]) <=
            q.scale / 2.0 + 1e-9);
  }
}

TEST_CASE("quantize_model: biases stay float and re-quantization errors") {
  MaskNetConfig cfg = toy_cfg();
  MaskNetModel m;
  m.cfg = cfg;
  m.params = init_params(cfg, 31);
  MaskNetModel q = quantize_model(m);
  CHECK(q.quantized());
  CHECK(q.quant_params().lstm[0].b == m.float_params().lstm[0].b);
  CHECK_THROWS_AS(quantize_model(q), ValueError);
}

TEST_CASE("forward_step_quantized: zero weights give mask 0.5 exactly") {
  MaskNetConfig cfg = toy_cfg();
  MaskNetModel m;
  m.cfg = cfg;
  m.params = zero_params_t<float>(cfg);
  QuantParams qp = quantize_params(m.float_params());
  StreamState state = make_stream_state(cfg);
  std::vector<float> frame(cfg.input_dim, 0.9f);
  StepOutput out = forward_step_quantized(qp, cfg, state, frame, unit_dvec(4, 3));
  for (float v : out.mask) CHECK(v == 0.5f);
  CHECK(out.noise_score == 0.0f);
}

TEST_CASE("forward_step_quantized: deterministic and close to float path") {
  MaskNetConfig cfg = toy_cfg();
  NetParams p = init_params(cfg, 32);
  QuantParams qp = quantize_params(p);
  DVector dvec = unit_dvec(4, 33);
  FeatureSequence frames = random_features(cfg.variant, 100, cfg.input_dim, 34, 0.0, 2.0);

  SequenceOutput qa = forward_sequence_quantized(qp, cfg, frames, dvec);
  SequenceOutput qb = forward_sequence_quantized(qp, cfg, frames, dvec);
  CHECK(qa.masks.v == qb.masks.v);
  CHECK(qa.noise_scores == qb.noise_scores);

  SequenceOutput fl = forward_sequence(p, cfg, frames, dvec);
  double mae = 0.0;
  for (size_t i = 0; i < fl.masks.v.size(); ++i)
    mae += std::abs(static_cast<double>(fl.masks.v[i]) - qa.masks.v[i]);
  mae /= fl.masks.v.size();
  CHECK(mae < 0.05);
}

TEST_CASE("forward_step_quantized: streaming folds to the batch path exactly") {
  MaskNetConfig cfg = toy_cfg();
  cfg.conv = ConvConfig{3, 1};
  NetParams p = init_params(cfg, 35);
  QuantParams qp = quantize_params(p);
  DVector dvec = unit_dvec(4, 36);
  FeatureSequence frames = random_features(cfg.variant, 40, cfg.input_dim, 37);

  SequenceOutput batch = forward_sequence_quantized(qp, cfg, frames, dvec);
  StreamState state = make_stream_state(cfg);
  for (int t = 0; t < frames.rows; ++t) {
    StepOutput step = forward_step_quantized(qp, cfg, state, frames.row(t), dvec);
    for (int f = 0; f < cfg.input_dim; ++f)
      CHECK(step.mask[f] == batch.masks.row(t)[f]);
    CHECK(step.noise_score == batch.noise_scores[t]);
  }
}

TEST_CASE("quantized state isolation across interleaved streams") {
  MaskNetConfig cfg = toy_cfg();
  NetParams p = init_params(cfg, 38);
  QuantParams qp = quantize_params(p);
  DVector da = unit_dvec(4, 39), db = unit_dvec(4, 40);
  FeatureSequence fa = random_features(cfg.variant, 12, cfg.input_dim, 41);
  FeatureSequence fb = random_features(cfg.variant, 12, cfg.input_dim, 42);

  SequenceOutput solo_a = forward_sequence_quantized(qp, cfg, fa, da);
  SequenceOutput solo_b = forward_sequence_quantized(qp, cfg, fb, db);
  StreamState sa = make_stream_state(cfg), sb = make_stream_state(cfg);
  for (int t = 0; t < 12; ++t) {
    StepOutput oa = forward_step_quantized(qp, cfg, sa, fa.row(t), da);
    StepOutput ob = forward_step_quantized(qp, cfg, sb, fb.row(t), db);
    for (int f = 0; f < cfg.input_dim; ++f) {
      CHECK(oa.mask[f] == solo_a.masks.row(t)[f]);
      CHECK(ob.mask[f] == solo_b.masks.row(t)[f]);
    }
  }
}

TEST_CASE("vfm: quantized model roundtrip is bit-exact") {
  TempDir tmp("qvfm");
  MaskNetConfig cfg = toy_cfg();
  cfg.conv = ConvConfig{5, 2};
  MaskNetModel m;
  m.cfg = cfg;
  m.params = init_params(cfg, 43);
  MaskNetModel q = quantize_model(m);
  save_model(tmp.file("q.vfm"), q);
  MaskNetModel r = load_model(tmp.file("q.vfm"));
  REQUIRE(r.quantized());

  const QuantParams& a = q.quant_params();
  const QuantParams& b = r.quant_params();
  CHECK(a.conv->k.q == b.conv->k.q);
  CHECK(a.conv->k.scale == b.conv->k.scale);
  for (size_t i = 0; i < a.lstm.size(); ++i) {
    CHECK(a.lstm[i].w_x.q == b.lstm[i].w_x.q);
    CHECK(a.lstm[i].w_x.scale == b.lstm[i].w_x.scale);
    CHECK(a.lstm[i].w_h.q == b.lstm[i].w_h.q);
    CHECK(a.lstm[i].b == b.lstm[i].b);
  }
  CHECK(a.mask.w.q == b.mask.w.q);
  CHECK(a.noise_out.w.q == b.noise_out.w.q);
  CHECK(a.noise_out.b == b.noise_out.b);

  // Inference agrees bit-for-bit after the roundtrip.
  DVector dvec = unit_dvec(4, 44);
  FeatureSequence frames = random_features(cfg.variant, 10, cfg.input_dim, 45);
  SequenceOutput ya = forward_sequence_quantized(a, cfg, frames, dvec);
  SequenceOutput yb = forward_sequence_quantized(b, cfg, frames, dvec);
  CHECK(ya.masks.v == yb.masks.v);
}

TEST_CASE("quantized file is roughly 4x smaller on weight-heavy models") {
  TempDir tmp("qsize");
  MaskNetConfig cfg;
  cfg.input_dim = 64;
  cfg.dvec_dim = 16;
  cfg.lstm_layers = 2;
  cfg.lstm_units = 64;
  cfg.variant = FeatureVariant::kFilterbank;
  MaskNetModel m;
  m.cfg = cfg;
  m.params = init_params(cfg, 46);
  save_model(tmp.file("f.vfm"), m);
  save_model(tmp.file("q.vfm"), quantize_model(m));
  auto fsize = std::filesystem::file_size(tmp.file("f.vfm"));
  auto qsize = std::filesystem::file_size(tmp.file("q.vfm"));
  double ratio = static_cast<double>(fsize) / qsize;
  CHECK(ratio > 3.5);
  CHECK(ratio < 4.5);
}
