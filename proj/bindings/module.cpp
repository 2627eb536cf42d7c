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

// Python bindings for the vflite core: feature extraction, mixing,
// speaker embeddings, the mask network, losses, suppression, and
// quantization. Arrays cross the boundary as numpy.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "vflite/enhance.hpp"
#include "vflite/error.hpp"
#include "vflite/evaluate.hpp"
#include "vflite/model_io.hpp"
#include "vflite/training.hpp"

namespace py = pybind11;
using namespace vflite;

namespace {

Waveform to_waveform(py::array_t<double, py::array::c_style | py::array::forcecast> samples,
                     int sample_rate) {
  if (samples.ndim() != 1) throw ValueError("samples must be a 1-D array");
  Waveform w;
  w.sample_rate_hz = sample_rate;
  w.samples.assign(samples.data(), samples.data() + samples.shape(0));
  return w;
}

py::array_t<double> from_samples(const std::vector<double>& v) {
  // The single-ssize_t array_t constructor produces a zero-stride array in
  // this pybind11 version; always pass an explicit shape.
  py::array_t<double> out(std::vector<py::ssize_t>{static_cast<py::ssize_t>(v.size())});
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

FeatureConfig config_from_kwargs(const std::string& variant, int n_fft,
                                 double window_ms, double hop_ms, int n_mels,
                                 int stack, int stride, double mel_fmin_hz,
                                 double mel_fmax_hz) {
  FeatureConfig cfg;
  cfg.variant = feature_variant_from_name(variant);
  cfg.n_fft = n_fft;
  cfg.window_ms = window_ms;
  cfg.hop_ms = hop_ms;
  cfg.n_mels = n_mels;
  cfg.stack = stack;
  cfg.stride = stride;
  cfg.mel_fmin_hz = mel_fmin_hz;
  cfg.mel_fmax_hz = mel_fmax_hz;
  cfg.validate();
  return cfg;
}

py::array_t<float> features_to_array(const FeatureSequence& s) {
  py::array_t<float> out({s.rows, s.cols});
  std::copy(s.data.begin(), s.data.end(), out.mutable_data());
  return out;
}

FeatureSequence features_from_array(
    py::array_t<float, py::array::c_style | py::array::forcecast> a,
    const std::string& variant, double frame_hop_s = 0.01) {
  if (a.ndim() != 2) throw ValueError("features must be a 2-D array");
  FeatureSequence s = FeatureSequence::zeros(feature_variant_from_name(variant),
                                             static_cast<int>(a.shape(0)),
                                             static_cast<int>(a.shape(1)), frame_hop_s);
  std::copy(a.data(), a.data() + a.size(), s.data.begin());
  return s;
}

DVector dvec_from_array(py::array_t<float, py::array::c_style | py::array::forcecast> a) {
  if (a.ndim() != 1) throw ValueError("d-vector must be a 1-D array");
  DVector v;
  v.values.assign(a.data(), a.data() + a.shape(0));
  v.validate();
  return v;
}

py::array_t<float> floats_to_array(const std::vector<float>& v) {
  py::array_t<float> out(std::vector<py::ssize_t>{static_cast<py::ssize_t>(v.size())});
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

py::dict config_to_dict(const MaskNetConfig& cfg, bool quantized) {
  py::dict d;
  d["input_dim"] = cfg.input_dim;
  d["dvec_dim"] = cfg.dvec_dim;
  d["lstm_layers"] = cfg.lstm_layers;
  d["lstm_units"] = cfg.lstm_units;
  d["head_hidden"] = cfg.head_hidden;
  d["variant"] = feature_variant_name(cfg.variant);
  d["linear_domain_mask"] = cfg.linear_domain_mask;
  d["quantized"] = quantized;
  if (cfg.conv) {
    py::dict c;
    c["kernel_width"] = cfg.conv->kernel_width;
    c["channels"] = cfg.conv->channels;
    d["conv"] = c;
  } else {
    d["conv"] = py::none();
  }
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Streaming speaker-conditioned speech enhancement frontend";

  py::register_exception<UsageError>(m, "UsageError", PyExc_ValueError);
  py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);
  py::register_exception<ValueError>(m, "InvalidValueError", PyExc_ValueError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

  // --- audio and features -------------------------------------------
  m.def(
      "read_wav",
      [](const std::string& path) {
        Waveform w = read_wav(path);
        return py::make_tuple(from_samples(w.samples), w.sample_rate_hz);
      },
      py::arg("path"), "Read a 16-bit mono PCM WAV file -> (samples, rate)");
  m.def(
      "write_wav",
      [](const std::string& path,
         py::array_t<double, py::array::c_style | py::array::forcecast> samples,
         int sample_rate) { write_wav(path, to_waveform(samples, sample_rate)); },
      py::arg("path"), py::arg("samples"), py::arg("sample_rate") = 16000);

  m.def(
      "extract",
      [](py::array_t<double, py::array::c_style | py::array::forcecast> samples,
         int sample_rate, const std::string& variant, int n_fft, double window_ms,
         double hop_ms, int n_mels, int stack, int stride, double mel_fmin_hz,
         double mel_fmax_hz) {
        FeatureConfig cfg =
            config_from_kwargs(variant, n_fft, window_ms, hop_ms, n_mels, stack,
                               stride, mel_fmin_hz, mel_fmax_hz);
        return features_to_array(extract(to_waveform(samples, sample_rate), cfg));
      },
      py::arg("samples"), py::arg("sample_rate") = 16000,
      py::arg("variant") = "stacked", py::arg("n_fft") = 1024,
      py::arg("window_ms") = 25.0, py::arg("hop_ms") = 10.0, py::arg("n_mels") = 128,
      py::arg("stack") = 4, py::arg("stride") = 4, py::arg("mel_fmin_hz") = 125.0,
      py::arg("mel_fmax_hz") = 7500.0,
      "PCM samples -> feature matrix (fft | fbank | stacked)");

  m.def(
      "read_vff",
      [](const std::string& path) {
        FeatureSequence s = read_vff(path);
        return py::make_tuple(features_to_array(s), feature_variant_name(s.variant),
                              s.frame_hop_s);
      },
      py::arg("path"), "Read a VFF1 file -> (features, variant, frame_hop_s)");
  m.def(
      "write_vff",
      [](const std::string& path,
         py::array_t<float, py::array::c_style | py::array::forcecast> features,
         const std::string& variant, double frame_hop_s) {
        write_vff(path, features_from_array(features, variant, frame_hop_s));
      },
      py::arg("path"), py::arg("features"), py::arg("variant"),
      py::arg("frame_hop_s") = 0.01);

  // --- mixing --------------------------------------------------------
  m.def(
      "mix_at_snr",
      [](py::array_t<double, py::array::c_style | py::array::forcecast> clean,
         py::array_t<double, py::array::c_style | py::array::forcecast> noise,
         double snr_db, int sample_rate) {
        MixMeta meta;
        Waveform mixed = mix_at_snr_detailed(to_waveform(clean, sample_rate),
                                             to_waveform(noise, sample_rate), snr_db,
                                             nullptr, &meta);
        py::dict info;
        info["noise_gain"] = meta.noise_gain;
        info["measured_snr_db"] = meta.measured_snr_db;
        info["clipped"] = meta.clipped;
        return py::make_tuple(from_samples(mixed.samples), info);
      },
      py::arg("clean"), py::arg("noise"), py::arg("snr_db"),
      py::arg("sample_rate") = 16000,
      "clean + g*noise at an exact SNR -> (mixture, info)");
  m.def(
      "apply_rir",
      [](py::array_t<double, py::array::c_style | py::array::forcecast> samples,
         py::array_t<double, py::array::c_style | py::array::forcecast> rir,
         int sample_rate) {
        std::vector<double> taps(rir.data(), rir.data() + rir.size());
        return from_samples(apply_rir(to_waveform(samples, sample_rate), taps).samples);
      },
      py::arg("samples"), py::arg("rir"), py::arg("sample_rate") = 16000);
  m.def(
      "synth_rir",
      [](double rt60_s, int sample_rate, uint64_t seed) {
        Rng rng(seed);
        return from_samples(synth_rir(rt60_s, sample_rate, rng));
      },
      py::arg("rt60_s"), py::arg("sample_rate") = 16000, py::arg("seed") = 0);

  // --- speaker embedding ----------------------------------------------
  m.def(
      "embed_reference",
      [](py::array_t<double, py::array::c_style | py::array::forcecast> samples,
         int sample_rate, int dim) {
        FeatureConfig cfg;
        return floats_to_array(
            embed_reference(to_waveform(samples, sample_rate), cfg, dim).values);
      },
      py::arg("samples"), py::arg("sample_rate") = 16000,
      py::arg("dim") = kDVectorDim,
      "Deterministic statistics d-vector from reference audio");
  m.def("save_dvector",
        [](const std::string& path,
           py::array_t<float, py::array::c_style | py::array::forcecast> v) {
          save_dvector(path, dvec_from_array(v));
        });
  m.def("load_dvector", [](const std::string& path) {
    return floats_to_array(load_dvector(path).values);
  });

  // --- losses ----------------------------------------------------------
  m.def("g_asym", &g_asym, py::arg("x"), py::arg("alpha"));
  m.def(
      "l2_loss",
      [](py::array_t<float, py::array::c_style | py::array::forcecast> a,
         py::array_t<float, py::array::c_style | py::array::forcecast> b) {
        return l2_loss(features_from_array(a, "fbank"), features_from_array(b, "fbank"));
      },
      py::arg("clean"), py::arg("enhanced"));
  m.def(
      "asym_l2_loss",
      [](py::array_t<float, py::array::c_style | py::array::forcecast> a,
         py::array_t<float, py::array::c_style | py::array::forcecast> b, double alpha) {
        return asym_l2_loss(features_from_array(a, "fbank"),
                            features_from_array(b, "fbank"), alpha);
      },
      py::arg("clean"), py::arg("enhanced"), py::arg("alpha"));
  m.def("hinge_loss", &hinge_loss, py::arg("score"), py::arg("label"));

  // --- suppression -------------------------------------------------------
  m.def("f_adapt", &f_adapt, py::arg("noise_score"));
  m.def(
      "compensate",
      [](py::array_t<float, py::array::c_style | py::array::forcecast> enhanced,
         py::array_t<float, py::array::c_style | py::array::forcecast> input, double w) {
        if (enhanced.size() != input.size())
          throw ValueError("compensate: width mismatch");
        py::array_t<float> out(std::vector<py::ssize_t>{enhanced.size()});
        compensate({enhanced.data(), static_cast<size_t>(enhanced.size())},
                   {input.data(), static_cast<size_t>(input.size())}, w,
                   {out.mutable_data(), static_cast<size_t>(out.size())});
        return out;
      },
      py::arg("enhanced"), py::arg("input"), py::arg("w"));

  // --- mask application ----------------------------------------------------
  m.def(
      "apply_mask",
      [](py::array_t<float, py::array::c_style | py::array::forcecast> features,
         py::array_t<float, py::array::c_style | py::array::forcecast> masks,
         const std::string& variant, bool linear_domain) {
        FeatureSequence s = features_from_array(features, variant);
        Masks mk;
        mk.rows = static_cast<int>(masks.shape(0));
        mk.cols = static_cast<int>(masks.shape(1));
        mk.v.assign(masks.data(), masks.data() + masks.size());
        return features_to_array(apply_mask(s, mk, linear_domain));
      },
      py::arg("features"), py::arg("masks"), py::arg("variant") = "fbank",
      py::arg("linear_domain") = true);

  // --- the model ------------------------------------------------------------
  py::class_<MaskNetModel>(m, "Model")
      .def_static("load", &load_model, py::arg("path"))
      .def("save", [](const MaskNetModel& self, const std::string& path) {
        save_model(path, self);
      })
      .def_property_readonly("quantized", &MaskNetModel::quantized)
      .def_property_readonly("config", [](const MaskNetModel& self) {
        return config_to_dict(self.cfg, self.quantized());
      })
      .def("quantize", &quantize_model)
      .def(
          "forward",
          [](const MaskNetModel& self,
             py::array_t<float, py::array::c_style | py::array::forcecast> frames,
             py::array_t<float, py::array::c_style | py::array::forcecast> dvec) {
            FeatureSequence s =
                features_from_array(frames, feature_variant_name(self.cfg.variant));
            DVector v = dvec_from_array(dvec);
            SequenceOutput out =
                self.quantized()
                    ? forward_sequence_quantized(self.quant_params(), self.cfg, s, v)
                    : forward_sequence(self.float_params(), self.cfg, s, v);
            py::array_t<float> masks({out.masks.rows, out.masks.cols});
            std::copy(out.masks.v.begin(), out.masks.v.end(), masks.mutable_data());
            return py::make_tuple(masks, floats_to_array(out.noise_scores));
          },
          py::arg("frames"), py::arg("dvec"),
          "Batched forward -> (masks, noise_scores)")
      .def(
          "enhance",
          [](const MaskNetModel& self,
             py::array_t<float, py::array::c_style | py::array::forcecast> frames,
             py::array_t<float, py::array::c_style | py::array::forcecast> dvec,
             const std::string& suppression) {
            FeatureSequence s =
                features_from_array(frames, feature_variant_name(self.cfg.variant));
            EnhanceOptions opts;
            opts.suppression = SuppressionConfig::parse(suppression);
            opts.collect_w_trace = true;
            EnhanceStats stats;
            FeatureSequence out =
                enhance_features(self, dvec_from_array(dvec), s, opts, &stats);
            return py::make_tuple(features_to_array(out),
                                  floats_to_array(stats.w_trace));
          },
          py::arg("frames"), py::arg("dvec"), py::arg("suppression") = "fixed:1",
          "Streaming enhancement over frames -> (features, w_trace)");

  m.def(
      "init_model",
      [](int input_dim, int dvec_dim, int lstm_layers, int lstm_units,
         const std::vector<int>& head_hidden, const std::string& variant,
         bool linear_domain_mask, uint64_t seed) {
        MaskNetConfig cfg;
        cfg.input_dim = input_dim;
        cfg.dvec_dim = dvec_dim;
        cfg.lstm_layers = lstm_layers;
        cfg.lstm_units = lstm_units;
        cfg.head_hidden = head_hidden;
        cfg.variant = feature_variant_from_name(variant);
        cfg.linear_domain_mask = linear_domain_mask;
        cfg.validate();
        MaskNetModel m2;
        m2.cfg = cfg;
        m2.params = init_params(cfg, seed);
        return m2;
      },
      py::arg("input_dim"), py::arg("dvec_dim") = kDVectorDim,
      py::arg("lstm_layers") = 3, py::arg("lstm_units") = 512,
      py::arg("head_hidden") = std::vector<int>{64, 64},
      py::arg("variant") = "stacked", py::arg("linear_domain_mask") = true,
      py::arg("seed") = 0);

  m.def(
      "train",
      [](const std::string& data_dir, int steps, int batch, double lr, double alpha,
         double noise_head_weight, int lstm_layers, int lstm_units,
         const std::vector<int>& head_hidden, uint64_t seed) {
        std::vector<MixtureExample> data = load_examples(data_dir);
        MaskNetConfig cfg;
        cfg.input_dim = data.front().noisy.cols;
        cfg.dvec_dim = data.front().dvec.dim();
        cfg.variant = data.front().noisy.variant;
        cfg.lstm_layers = lstm_layers;
        cfg.lstm_units = lstm_units;
        cfg.head_hidden = head_hidden;
        cfg.validate();
        LossConfig lcfg;
        lcfg.alpha = alpha;
        lcfg.noise_head_weight = noise_head_weight;
        TrainConfig tcfg;
        tcfg.steps = steps;
        tcfg.batch_size = batch;
        tcfg.learning_rate = lr;
        tcfg.seed = seed;
        TrainResult result = train(data, cfg, lcfg, tcfg);
        MaskNetModel m2;
        m2.cfg = cfg;
        m2.params = result.params;
        std::vector<double> losses;
        for (const StepMetrics& s : result.history) losses.push_back(s.total);
        return py::make_tuple(m2, losses);
      },
      py::arg("data_dir"), py::arg("steps") = 100, py::arg("batch") = 4,
      py::arg("lr") = 1e-3, py::arg("alpha") = 10.0,
      py::arg("noise_head_weight") = 0.1, py::arg("lstm_layers") = 2,
      py::arg("lstm_units") = 32, py::arg("head_hidden") = std::vector<int>{16, 16},
      py::arg("seed") = 0,
      "Train on a 'mix' example directory -> (Model, loss_history)");
}
