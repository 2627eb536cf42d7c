# Copyright 2026 The vflite Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Smoke tests for the python module."""

import math

import numpy as np
import pytest

import vflite


def test_extract_shapes_and_zero_input():
    zero = np.zeros(16000)
    fft = vflite.extract(zero, variant="fft")
    fbank = vflite.extract(zero, variant="fbank")
    stacked = vflite.extract(zero, variant="stacked")
    assert fft.shape == (98, 513)
    assert fbank.shape == (98, 128)
    assert stacked.shape == (25, 512)
    assert not fft.any()
    assert not stacked.any()

    rng = np.random.default_rng(0)
    noisy = vflite.extract(rng.uniform(-0.3, 0.3, 8000), variant="fbank")
    assert (noisy >= 0).all()


def test_extract_rejects_short_input():
    with pytest.raises(ValueError):
        vflite.extract(np.zeros(100), variant="fft")


def test_losses():
    assert vflite.g_asym(-2.0, 10.0) == -2.0
    assert vflite.g_asym(3.0, 10.0) == 30.0

    rng = np.random.default_rng(1)
    a = rng.uniform(0, 2, size=(5, 7)).astype(np.float32)
    b = rng.uniform(0, 2, size=(5, 7)).astype(np.float32)
    assert vflite.asym_l2_loss(a, b, 1.0) == vflite.l2_loss(a, b)
    assert vflite.asym_l2_loss(a, b, 10.0) >= vflite.l2_loss(a, b)

    one = np.array([[1.0]], dtype=np.float32)
    zero = np.array([[0.0]], dtype=np.float32)
    assert vflite.asym_l2_loss(one, zero, 10.0) == 100.0  # over-suppression
    assert vflite.asym_l2_loss(zero, one, 10.0) == 1.0    # under-suppression

    assert vflite.hinge_loss(2.0, 1) == 0.0
    assert vflite.hinge_loss(0.5, 0) == 1.5


def test_mask_and_suppression():
    feats = np.array([[1.0, 2.0]], dtype=np.float32)
    ones = np.ones_like(feats)
    zeros = np.zeros_like(feats)
    assert (vflite.apply_mask(feats, ones) == feats).all()
    assert not vflite.apply_mask(feats, zeros).any()
    half = vflite.apply_mask(feats, 0.5 * ones)
    assert half[0, 0] == pytest.approx(math.log1p(0.5 * (math.e - 1)), rel=1e-6)

    assert vflite.f_adapt(1.0) == 1.0
    assert vflite.f_adapt(-1.0) == 0.0
    enh = np.array([0.0, 1.0], dtype=np.float32)
    inp = np.array([2.0, 3.0], dtype=np.float32)
    assert (vflite.compensate(enh, inp, 0.0) == inp).all()
    assert (vflite.compensate(enh, inp, 1.0) == enh).all()


def test_mix_at_snr():
    rng = np.random.default_rng(2)
    clean = rng.normal(0, 0.1, 8000)
    noise = rng.normal(0, 0.2, 5000)
    mixed, info = vflite.mix_at_snr(clean, noise, 10.0)
    assert mixed.shape == clean.shape
    assert info["measured_snr_db"] == pytest.approx(10.0, abs=1e-9)

    with pytest.raises(ValueError):
        vflite.mix_at_snr(np.zeros(8000), noise, 10.0)


def test_rir():
    rir = vflite.synth_rir(0.05, seed=3)
    assert rir.shape == (800,)
    assert rir[0] == 1.0
    x = np.random.default_rng(4).normal(0, 0.1, 1600)
    delayed = vflite.apply_rir(x, np.array([0.0, 1.0]))
    assert delayed[1:] == pytest.approx(x[:-1], abs=1e-9)


def test_embedding_roundtrip(tmp_path):
    rng = np.random.default_rng(5)
    ref = rng.normal(0, 0.2, 24000)
    v = vflite.embed_reference(ref, dim=32)
    assert v.shape == (32,)
    assert np.linalg.norm(v) == pytest.approx(1.0, abs=1e-6)

    path = str(tmp_path / "v.vfd")
    vflite.save_dvector(path, v)
    assert (vflite.load_dvector(path) == v).all()


def test_model_forward_quantize_save(tmp_path):
    model = vflite.init_model(input_dim=16, dvec_dim=8, lstm_layers=1,
                              lstm_units=12, head_hidden=[8], variant="fbank",
                              seed=7)
    assert not model.quantized
    assert model.config["input_dim"] == 16

    rng = np.random.default_rng(6)
    frames = rng.uniform(0, 2, size=(20, 16)).astype(np.float32)
    dvec = rng.normal(size=8).astype(np.float32)
    dvec /= np.linalg.norm(dvec)

    masks, scores = model.forward(frames, dvec)
    assert masks.shape == (20, 16)
    assert scores.shape == (20,)
    assert (masks > 0).all() and (masks < 1).all()

    qmodel = model.quantize()
    assert qmodel.quantized
    qmasks, _ = qmodel.forward(frames, dvec)
    assert np.abs(qmasks - masks).mean() < 0.05

    path = str(tmp_path / "m.vfm")
    qmodel.save(path)
    reloaded = vflite.Model.load(path)
    rmasks, _ = reloaded.forward(frames, dvec)
    assert (rmasks == qmasks).all()


def test_model_enhance_passthrough():
    model = vflite.init_model(input_dim=16, dvec_dim=8, lstm_layers=1,
                              lstm_units=12, head_hidden=[8], variant="fbank",
                              seed=8)
    rng = np.random.default_rng(7)
    frames = rng.uniform(0, 2, size=(15, 16)).astype(np.float32)
    dvec = rng.normal(size=8).astype(np.float32)
    dvec /= np.linalg.norm(dvec)

    out, w = model.enhance(frames, dvec, suppression="off")
    assert (out == frames).all()
    assert (w == 0).all()

    out1, w1 = model.enhance(frames, dvec, suppression="fixed:1")
    assert (w1 == 1).all()
    assert (out1 <= frames + 1e-7).all()  # suppression-only masking


def test_wav_and_vff_roundtrip(tmp_path):
    rng = np.random.default_rng(8)
    samples = rng.uniform(-0.5, 0.5, 8000)
    wav_path = str(tmp_path / "a.wav")
    vflite.write_wav(wav_path, samples)
    loaded, rate = vflite.read_wav(wav_path)
    assert rate == 16000
    assert loaded == pytest.approx(samples, abs=1e-4)

    feats = vflite.extract(loaded, variant="fbank")
    vff_path = str(tmp_path / "a.vff")
    vflite.write_vff(vff_path, feats, "fbank")
    back, variant, hop = vflite.read_vff(vff_path)
    assert variant == "fbank"
    assert hop == pytest.approx(0.01)
    assert (back == feats).all()
