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

// vflite: streaming speaker-conditioned speech enhancement frontend.
//
// Subcommands: features, mix, train, enhance, quantize, eval.
// Exit codes: 0 success, 1 usage error, 2 data/format error, 3 numeric
// failure.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "vflite/enhance.hpp"
#include "vflite/error.hpp"
#include "vflite/evaluate.hpp"
#include "vflite/model_io.hpp"
#include "vflite/parallel.hpp"
#include "vflite/training.hpp"

namespace {

using nlohmann::json;
using namespace vflite;

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open config file: " + path);
  try {
    json j;
    in >> j;
    return j;
  } catch (const json::exception& e) {
    throw FormatError(path + ": " + e.what());
  }
}

// Feature settings from a JSON config file; CLI flags override afterwards.
FeatureConfig feature_config_from_json(const json& j) {
  FeatureConfig cfg;
  if (j.contains("variant"))
    cfg.variant = feature_variant_from_name(j.at("variant").get<std::string>());
  cfg.n_fft = j.value("n_fft", cfg.n_fft);
  cfg.window_ms = j.value("window_ms", cfg.window_ms);
  cfg.hop_ms = j.value("hop_ms", cfg.hop_ms);
  cfg.n_mels = j.value("n_mels", cfg.n_mels);
  cfg.stack = j.value("stack", cfg.stack);
  cfg.stride = j.value("stride", cfg.stride);
  cfg.mel_fmin_hz = j.value("mel_fmin_hz", cfg.mel_fmin_hz);
  cfg.mel_fmax_hz = j.value("mel_fmax_hz", cfg.mel_fmax_hz);
  return cfg;
}

SuppressionConfig suppression_from_json(const json& j) {
  SuppressionConfig cfg;
  std::string mode = j.value("mode", "fixed");
  if (mode == "off") {
    cfg.mode = SuppressionMode::kOff;
    cfg.w = 0.0;
  } else if (mode == "fixed") {
    cfg.mode = SuppressionMode::kFixed;
    cfg.w = j.value("w", 1.0);
  } else if (mode == "adaptive") {
    cfg.mode = SuppressionMode::kAdaptive;
    cfg.a = j.value("a", 1.0);
    cfg.b = j.value("b", 0.0);
    cfg.beta = j.value("beta", 0.8);
  } else {
    throw FormatError("suppression config: unknown mode '" + mode + "'");
  }
  cfg.validate();
  return cfg;
}

struct CommonFeatureArgs {
  std::string config_path;
  std::string variant;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config_path,
                    "JSON config file mirroring the flags");
    cmd->add_option("--variant", variant, "Feature variant: fft|fbank|stacked");
  }
  FeatureConfig resolve() const {
    FeatureConfig cfg;
    if (!config_path.empty()) {
      json j = load_json_file(config_path);
      cfg = feature_config_from_json(j.contains("features") ? j.at("features") : j);
    }
    if (!variant.empty()) cfg.variant = feature_variant_from_name(variant);
    cfg.validate();
    return cfg;
  }
  // The suppression block of the same config file, when present.
  std::optional<SuppressionConfig> config_suppression() const {
    if (config_path.empty()) return std::nullopt;
    json j = load_json_file(config_path);
    if (!j.contains("suppression")) return std::nullopt;
    return suppression_from_json(j.at("suppression"));
  }
};

int cmd_features(const std::string& in_wav, const std::string& out_vff,
                 const CommonFeatureArgs& fargs) {
  FeatureConfig cfg = fargs.resolve();
  Waveform w = read_wav(in_wav);
  FeatureSequence s = extract(w, cfg);
  write_vff(out_vff, s);
  std::cout << "wrote " << out_vff << " (" << s.rows << " x " << s.cols << ", "
            << feature_variant_name(s.variant) << ")\n";
  return 0;
}

struct MixArgs {
  std::string manifest_path, outdir;
  double snr_lo = 1.0, snr_hi = 10.0;
  bool reverb = false;
  bool reverb_target = false;
  double rt60_lo = 0.1, rt60_hi = 0.5;
  std::string rir_dir;
  uint64_t seed = 0;
  int dvec_dim = kDVectorDim;
};

int cmd_mix(const MixArgs& args, const CommonFeatureArgs& fargs) {
  FeatureConfig fcfg = fargs.resolve();
  check(args.snr_lo <= args.snr_hi, "mix: --snr-lo must be <= --snr-hi");
  std::vector<ManifestRow> rows = read_manifest(args.manifest_path);
  check(!rows.empty(), "mix: manifest has no rows");

  // Optional user-supplied RIR pool, sorted for reproducibility.
  std::vector<std::string> rir_pool;
  if (!args.rir_dir.empty()) {
    namespace fs = std::filesystem;
    for (const auto& e : fs::directory_iterator(args.rir_dir))
      if (e.path().extension() == ".wav") rir_pool.push_back(e.path().string());
    std::sort(rir_pool.begin(), rir_pool.end());
    check(!rir_pool.empty(), "mix: --rir-dir contains no .wav files");
  }

  std::filesystem::create_directories(args.outdir);
  std::vector<MixtureExample> examples(rows.size());
  parallel_for(rows.size(), [&](size_t i) {
    Rng rng(derive_seed(args.seed, 0, i));
    MixSpec spec;
    spec.seed = derive_seed(args.seed, 0, i);
    spec.snr_db = sample_snr(args.snr_lo, args.snr_hi, rng);
    spec.noise_kind = rows[i].kind;
    spec.reverb_target = args.reverb_target;
    if (args.reverb) {
      spec.room = RoomKind::kReverb;
      if (!rir_pool.empty()) {
        Waveform rir_wav = read_wav(rir_pool[rng.below(rir_pool.size())]);
        spec.rir = rir_wav.samples;
      } else {
        spec.rir = synth_rir(rng.uniform(args.rt60_lo, args.rt60_hi),
                             16000, rng);
      }
    }
    Waveform clean = read_wav(rows[i].clean_path);
    Waveform noise = read_wav(rows[i].noise_path);
    Waveform ref = read_wav(rows[i].ref_path);
    examples[i] = make_example(clean, noise, ref, spec, fcfg, args.dvec_dim);
  });
  for (size_t i = 0; i < examples.size(); ++i)
    write_example(args.outdir, static_cast<int>(i), examples[i]);
  std::cout << "wrote " << examples.size() << " examples to " << args.outdir << "\n";
  return 0;
}

struct TrainArgs {
  std::string data_dir, out_model;
  std::string model_config_path;
  std::string init_from;
  std::string metrics_log;
  double alpha = 10.0;
  double lambda = 0.1;
  double lr = 1e-3;
  std::string optimizer = "adam";
  int batch = 4;
  int steps = 100;
  double clip = 5.0;
  uint64_t seed = 0;
  int lstm_layers = 3;
  int lstm_units = 512;
  std::vector<int> head_hidden = {64, 64};
  bool raw_mask = false;
};

int cmd_train(const TrainArgs& args) {
  std::vector<MixtureExample> dataset = load_examples(args.data_dir);
  const MixtureExample& first = dataset.front();

  MaskNetConfig cfg;
  std::optional<NetParams> init;
  if (!args.init_from.empty()) {
    MaskNetModel m = load_model(args.init_from);
    if (m.quantized())
      throw ValueError("train: cannot resume from a quantized checkpoint");
    cfg = m.cfg;
    init = m.float_params();
  } else if (!args.model_config_path.empty()) {
    std::ifstream in(args.model_config_path);
    if (!in) throw FormatError("cannot open model config: " + args.model_config_path);
    std::string text((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
    cfg = config_from_json(text, nullptr);
  } else {
    cfg.input_dim = first.noisy.cols;
    cfg.dvec_dim = first.dvec.dim();
    cfg.variant = first.noisy.variant;
    cfg.lstm_layers = args.lstm_layers;
    cfg.lstm_units = args.lstm_units;
    cfg.head_hidden = args.head_hidden;
    cfg.linear_domain_mask = !args.raw_mask;
  }
  cfg.validate();

  LossConfig lcfg;
  lcfg.alpha = args.alpha;
  lcfg.noise_head_weight = args.lambda;
  TrainConfig tcfg;
  tcfg.learning_rate = args.lr;
  if (args.optimizer == "adam") tcfg.optimizer = TrainConfig::Optimizer::kAdam;
  else if (args.optimizer == "sgd") tcfg.optimizer = TrainConfig::Optimizer::kSgd;
  else throw UsageError("train: unknown optimizer '" + args.optimizer + "'");
  tcfg.batch_size = args.batch;
  tcfg.steps = args.steps;
  tcfg.clip_norm = args.clip;
  tcfg.seed = args.seed;

  TrainResult result = train(dataset, cfg, lcfg, tcfg, init ? &*init : nullptr);

  MaskNetModel model;
  model.cfg = cfg;
  model.params = result.params;
  save_model(args.out_model, model);

  std::string log_path = args.metrics_log.empty()
                             ? args.out_model + ".metrics.jsonl"
                             : args.metrics_log;
  std::ofstream log(log_path);
  if (!log) throw FormatError("cannot write metrics log: " + log_path);
  for (const StepMetrics& m : result.history) {
    json j;
    j["step"] = m.step;
    j["total"] = m.total;
    j["mask_loss"] = m.mask_loss;
    j["noise_loss"] = m.noise_loss;
    j["grad_norm"] = m.grad_norm;
    log << j.dump() << "\n";
  }
  if (!result.history.empty())
    std::cout << "final loss " << result.history.back().total << " after "
              << result.history.size() << " steps\n";
  std::cout << "wrote " << args.out_model << "\n";
  return 0;
}

struct EnhanceArgs {
  std::string in_wav, out_vff;
  std::string model_path, dvec_path;
  std::string suppression = "fixed:1";
  std::string w_trace_path;
};

int cmd_enhance(const EnhanceArgs& args, const CommonFeatureArgs& fargs,
                bool suppression_given) {
  MaskNetModel model = load_model(args.model_path);
  DVector dvec = load_dvector(args.dvec_path);

  FeatureConfig fcfg = fargs.resolve();
  fcfg.variant = model.cfg.variant;
  fcfg.validate();

  EnhanceOptions opts;
  std::optional<SuppressionConfig> from_cfg = fargs.config_suppression();
  if (!suppression_given && from_cfg)
    opts.suppression = *from_cfg;
  else
    opts.suppression = SuppressionConfig::parse(args.suppression);
  opts.collect_w_trace = !args.w_trace_path.empty();

  EnhanceStats stats =
      enhance_wav_file(args.in_wav, model, dvec, fcfg, args.out_vff, opts);

  if (!args.w_trace_path.empty()) {
    std::ofstream out(args.w_trace_path);
    if (!out) throw FormatError("cannot write w trace: " + args.w_trace_path);
    json j;
    j["w"] = stats.w_trace;
    out << j.dump() << "\n";
  }
  std::cout << "enhanced " << stats.frames << " frames, mean w " << stats.mean_w
            << ", realtime factor "
            << (stats.audio_seconds > 0 ? stats.proc_seconds / stats.audio_seconds : 0.0)
            << "\n";
  return 0;
}

int cmd_quantize(const std::string& in_model, const std::string& out_model) {
  MaskNetModel m = load_model(in_model);
  MaskNetModel q = quantize_model(m);
  save_model(out_model, q);
  namespace fs = std::filesystem;
  std::cout << "quantized " << in_model << " (" << fs::file_size(in_model)
            << " bytes) -> " << out_model << " (" << fs::file_size(out_model)
            << " bytes)\n";
  return 0;
}

struct EvalArgs {
  std::string manifest_path, report_path;
  std::string model_path;
  std::string conditions = "clean,additive,reverb";
  std::string suppression = "fixed:1";
  double snr_lo = 1.0, snr_hi = 10.0;
  double rt60_lo = 0.1, rt60_hi = 0.5;
  double epsilon = 0.05;
  uint64_t seed = 0;
};

int cmd_eval(const EvalArgs& args, const CommonFeatureArgs& fargs,
             bool suppression_given) {
  MaskNetModel model = load_model(args.model_path);
  std::vector<ManifestRow> manifest = read_manifest(args.manifest_path);

  EvalOptions opts;
  opts.fcfg = fargs.resolve();
  opts.fcfg.variant = model.cfg.variant;
  opts.fcfg.validate();
  std::optional<SuppressionConfig> from_cfg = fargs.config_suppression();
  if (!suppression_given && from_cfg)
    opts.suppression = *from_cfg;
  else
    opts.suppression = SuppressionConfig::parse(args.suppression);
  opts.conditions.clear();
  std::stringstream ss(args.conditions);
  std::string tok;
  while (std::getline(ss, tok, ','))
    if (!tok.empty()) opts.conditions.push_back(tok);
  opts.snr_lo_db = args.snr_lo;
  opts.snr_hi_db = args.snr_hi;
  opts.rt60_lo_s = args.rt60_lo;
  opts.rt60_hi_s = args.rt60_hi;
  opts.epsilon = args.epsilon;
  opts.seed = args.seed;

  EvalReport report = run_eval(manifest, model, opts);
  std::ofstream out(args.report_path);
  if (!out) throw FormatError("cannot write report: " + args.report_path);
  out << report_to_json(report, opts, args.model_path) << "\n";

  for (const EvalRow& r : report.rows)
    std::cout << r.condition << ": mse " << r.mse_unenhanced << " -> "
              << r.mse_enhanced << ", over " << r.over_suppression_rate
              << ", under " << r.under_suppression_rate << ", mean w " << r.mean_w
              << ", rtf " << r.realtime_factor << "\n";
  std::cout << "wrote " << args.report_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"vflite: streaming speaker-conditioned speech enhancement frontend"};
  app.require_subcommand(1);

  // features
  auto* features = app.add_subcommand("features", "Extract features from a WAV file");
  std::string f_in, f_out;
  CommonFeatureArgs f_fargs;
  features->add_option("input", f_in, "Input WAV (16-bit mono PCM, 16 kHz)")->required();
  features->add_option("output", f_out, "Output VFF1 feature file")->required();
  f_fargs.attach(features);

  // mix
  auto* mix = app.add_subcommand("mix", "Synthesize a mixture dataset from a manifest");
  MixArgs m_args;
  CommonFeatureArgs m_fargs;
  mix->add_option("manifest", m_args.manifest_path,
                  "Manifest: clean.wav<TAB>noise.wav<TAB>ref.wav<TAB>speech|nonspeech")
      ->required();
  mix->add_option("outdir", m_args.outdir, "Output example directory")->required();
  mix->add_option("--snr-lo", m_args.snr_lo, "Lower SNR bound in dB");
  mix->add_option("--snr-hi", m_args.snr_hi, "Upper SNR bound in dB");
  mix->add_flag("--reverb", m_args.reverb, "Convolve the interference with an RIR");
  mix->add_flag("--reverb-target", m_args.reverb_target,
                "Also convolve the target speech with the RIR");
  mix->add_option("--rt60-lo", m_args.rt60_lo, "Lower RT60 bound for synthetic RIRs");
  mix->add_option("--rt60-hi", m_args.rt60_hi, "Upper RT60 bound for synthetic RIRs");
  mix->add_option("--rir-dir", m_args.rir_dir,
                  "Directory of RIR .wav files (instead of synthetic RIRs)");
  mix->add_option("--seed", m_args.seed, "RNG seed");
  mix->add_option("--dvec-dim", m_args.dvec_dim, "d-vector dimension");
  m_fargs.attach(mix);

  // train
  auto* train_cmd = app.add_subcommand("train", "Train a mask network");
  TrainArgs t_args;
  train_cmd->add_option("data", t_args.data_dir, "Example directory from 'mix'")->required();
  train_cmd->add_option("output", t_args.out_model, "Output VFM1 checkpoint")->required();
  train_cmd->add_option("--model-config", t_args.model_config_path,
                        "Model config JSON (overrides the topology flags)");
  train_cmd->add_option("--init-from", t_args.init_from, "Resume from a checkpoint");
  train_cmd->add_option("--metrics-log", t_args.metrics_log,
                        "Metrics JSONL path (default: <output>.metrics.jsonl)");
  train_cmd->add_option("--alpha", t_args.alpha, "Asymmetric penalty factor (>= 1)");
  train_cmd->add_option("--lambda", t_args.lambda, "Noise-head loss weight");
  train_cmd->add_option("--lr", t_args.lr, "Learning rate");
  train_cmd->add_option("--optimizer", t_args.optimizer, "adam|sgd");
  train_cmd->add_option("--batch", t_args.batch, "Batch size");
  train_cmd->add_option("--steps", t_args.steps, "Training steps");
  train_cmd->add_option("--clip", t_args.clip, "Gradient-norm clip (<= 0 disables)");
  train_cmd->add_option("--seed", t_args.seed, "RNG seed");
  train_cmd->add_option("--lstm-layers", t_args.lstm_layers, "LSTM layer count");
  train_cmd->add_option("--lstm-units", t_args.lstm_units, "LSTM units per layer");
  train_cmd->add_option("--head-hidden", t_args.head_hidden,
                        "Noise-head hidden widths");
  train_cmd->add_flag("--raw-mask", t_args.raw_mask,
                      "Mask log features with a raw cellwise product");

  // enhance
  auto* enhance = app.add_subcommand("enhance", "Stream a WAV file through the model");
  EnhanceArgs e_args;
  CommonFeatureArgs e_fargs;
  enhance->add_option("input", e_args.in_wav, "Input WAV")->required();
  enhance->add_option("output", e_args.out_vff, "Output VFF1 feature file")->required();
  enhance->add_option("--model", e_args.model_path, "VFM1 model")->required();
  enhance->add_option("--dvec", e_args.dvec_path, "VFD1 d-vector")->required();
  auto* e_sup = enhance->add_option("--suppression", e_args.suppression,
                                    "off | fixed:W | adaptive[:a,b,beta]");
  enhance->add_option("--w-trace", e_args.w_trace_path,
                      "Write the per-frame suppression strengths to a JSON file");
  e_fargs.attach(enhance);

  // quantize
  auto* quant = app.add_subcommand("quantize", "Quantize a model to int8");
  std::string q_in, q_out;
  quant->add_option("input", q_in, "Float VFM1 model")->required();
  quant->add_option("output", q_out, "Quantized VFM1 model")->required();

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate feature-domain proxy metrics");
  EvalArgs v_args;
  CommonFeatureArgs v_fargs;
  eval_cmd->add_option("manifest", v_args.manifest_path, "Evaluation manifest")->required();
  eval_cmd->add_option("report", v_args.report_path, "Output report JSON")->required();
  eval_cmd->add_option("--model", v_args.model_path, "VFM1 model")->required();
  eval_cmd->add_option("--conditions", v_args.conditions,
                       "Comma list of clean,additive,reverb");
  auto* v_sup = eval_cmd->add_option("--suppression", v_args.suppression,
                                     "off | fixed:W | adaptive[:a,b,beta]");
  eval_cmd->add_option("--snr-lo", v_args.snr_lo, "Lower SNR bound in dB");
  eval_cmd->add_option("--snr-hi", v_args.snr_hi, "Upper SNR bound in dB");
  eval_cmd->add_option("--rt60-lo", v_args.rt60_lo, "Lower RT60 bound");
  eval_cmd->add_option("--rt60-hi", v_args.rt60_hi, "Upper RT60 bound");
  eval_cmd->add_option("--epsilon", v_args.epsilon,
                       "Suppression-rate threshold in log-feature units");
  eval_cmd->add_option("--seed", v_args.seed, "RNG seed");
  v_fargs.attach(eval_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == static_cast<int>(CLI::ExitCodes::Success) ? 0 : 1;
  }

  try {
    if (features->parsed()) return cmd_features(f_in, f_out, f_fargs);
    if (mix->parsed()) return cmd_mix(m_args, m_fargs);
    if (train_cmd->parsed()) return cmd_train(t_args);
    if (enhance->parsed()) return cmd_enhance(e_args, e_fargs, e_sup->count() > 0);
    if (quant->parsed()) return cmd_quantize(q_in, q_out);
    if (eval_cmd->parsed()) return cmd_eval(v_args, v_fargs, v_sup->count() > 0);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
