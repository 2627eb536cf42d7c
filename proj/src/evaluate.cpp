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

#include "vflite/evaluate.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "vflite/error.hpp"
#include "vflite/parallel.hpp"

namespace vflite {

namespace {

using nlohmann::json;

struct RowResult {
  FrameMetrics enhanced;
  double unenh_sq_err_sum = 0.0;
  double w_sum = 0.0;
  uint64_t frames = 0;
  double proc_seconds = 0.0;
  double audio_seconds = 0.0;
};

}  // namespace

FrameMetrics feature_metrics(const FeatureSequence& out, const FeatureSequence& clean,
                             double epsilon) {
  check(out.rows == clean.rows && out.cols == clean.cols,
        "feature_metrics: shape mismatch");
  FrameMetrics m;
  for (size_t i = 0; i < out.data.size(); ++i) {
    double d = static_cast<double>(out.data[i]) - clean.data[i];
    m.sq_err_sum += d * d;
    if (out.data[i] < clean.data[i] - epsilon) ++m.over_cells;
    if (out.data[i] > clean.data[i] + epsilon) ++m.under_cells;
  }
  m.cells = out.data.size();
  return m;
}

EvalReport run_eval(const std::vector<ManifestRow>& manifest,
                    const MaskNetModel& model, const EvalOptions& opts) {
  opts.fcfg.validate();
  opts.suppression.validate();
  check(!manifest.empty(), "eval: empty manifest");
  check(opts.fcfg.variant == model.cfg.variant,
        "eval: feature variant does not match the model");
  check(opts.fcfg.feature_dim() == model.cfg.input_dim,
        "eval: feature width does not match the model");

  struct Condition {
    std::string name;
    RoomKind room;
    bool mixed;  // false for the clean condition
    std::optional<NoiseKind> kind;
  };
  std::vector<Condition> conditions;
  for (const std::string& c : opts.conditions) {
    if (c == "clean") {
      conditions.push_back({"clean", RoomKind::kAdditive, false, std::nullopt});
    } else if (c == "additive" || c == "reverb") {
      RoomKind room = c == "reverb" ? RoomKind::kReverb : RoomKind::kAdditive;
      for (NoiseKind k : {NoiseKind::kSpeech, NoiseKind::kNonSpeech})
        conditions.push_back({c + "_" + noise_kind_name(k), room, true, k});
    } else {
      throw UsageError("eval: unknown condition '" + c +
                       "' (expected clean, additive, or reverb)");
    }
  }

  EvalReport report;
  for (size_t ci = 0; ci < conditions.size(); ++ci) {
    const Condition& cond = conditions[ci];
    std::vector<size_t> row_indices;
    for (size_t r = 0; r < manifest.size(); ++r)
      if (!cond.mixed || manifest[r].kind == *cond.kind) row_indices.push_back(r);
    if (row_indices.empty()) continue;

    std::vector<RowResult> results(row_indices.size());
    parallel_for(row_indices.size(), [&](size_t i) {
      const ManifestRow& row = manifest[row_indices[i]];
      Rng rng(derive_seed(opts.seed, ci, row_indices[i]));
      Waveform clean = read_wav(row.clean_path);
      Waveform ref = read_wav(row.ref_path);

      FeatureSequence clean_feats, input_feats;
      DVector dvec;
      if (!cond.mixed) {
        clean_feats = extract(clean, opts.fcfg);
        input_feats = clean_feats;
        dvec = embed_reference(ref, opts.fcfg, model.cfg.dvec_dim);
      } else {
        Waveform noise = read_wav(row.noise_path);
        MixSpec spec;
        spec.snr_db = sample_snr(opts.snr_lo_db, opts.snr_hi_db, rng);
        spec.noise_kind = row.kind;
        spec.room = cond.room;
        if (cond.room == RoomKind::kReverb)
          spec.rir = synth_rir(rng.uniform(opts.rt60_lo_s, opts.rt60_hi_s),
                               clean.sample_rate_hz, rng);
        MixtureExample ex =
            make_example(clean, noise, ref, spec, opts.fcfg, model.cfg.dvec_dim);
        clean_feats = std::move(ex.clean);
        input_feats = std::move(ex.noisy);
        dvec = std::move(ex.dvec);
      }

      EnhanceOptions eopts;
      eopts.suppression = opts.suppression;
      EnhanceStats stats;
      FeatureSequence out = enhance_features(model, dvec, input_feats, eopts, &stats);

      RowResult& res = results[i];
      res.enhanced = feature_metrics(out, clean_feats, opts.epsilon);
      FrameMetrics unenh = feature_metrics(input_feats, clean_feats, opts.epsilon);
      res.unenh_sq_err_sum = unenh.sq_err_sum;
      res.w_sum = stats.mean_w * stats.frames;
      res.frames = stats.frames;
      res.proc_seconds = stats.proc_seconds;
      res.audio_seconds = input_feats.rows * input_feats.frame_hop_s;
    });

    // Fixed reduction order over rows.
    EvalRow out_row;
    out_row.condition = cond.name;
    double sq_enh = 0.0, sq_unenh = 0.0, w_sum = 0.0;
    double proc = 0.0, audio = 0.0;
    uint64_t cells = 0, over = 0, under = 0, frames = 0;
    for (const RowResult& r : results) {
      sq_enh += r.enhanced.sq_err_sum;
      sq_unenh += r.unenh_sq_err_sum;
      cells += r.enhanced.cells;
      over += r.enhanced.over_cells;
      under += r.enhanced.under_cells;
      w_sum += r.w_sum;
      frames += r.frames;
      proc += r.proc_seconds;
      audio += r.audio_seconds;
    }
    out_row.mse_enhanced = cells ? sq_enh / cells : 0.0;
    out_row.mse_unenhanced = cells ? sq_unenh / cells : 0.0;
    out_row.over_suppression_rate = cells ? static_cast<double>(over) / cells : 0.0;
    out_row.under_suppression_rate = cells ? static_cast<double>(under) / cells : 0.0;
    out_row.mean_w = frames ? w_sum / frames : 0.0;
    out_row.frames = frames;
    out_row.realtime_factor = audio > 0.0 ? proc / audio : 0.0;
    report.rows.push_back(std::move(out_row));
  }
  return report;
}

std::string report_to_json(const EvalReport& report, const EvalOptions& opts,
                           const std::string& model_path) {
  json j;
  j["model"] = model_path;
  j["epsilon"] = opts.epsilon;
  j["suppression"] = opts.suppression.describe();
  j["snr_db"] = {opts.snr_lo_db, opts.snr_hi_db};
  j["seed"] = opts.seed;
  j["rows"] = json::array();
  for (const EvalRow& r : report.rows) {
    json row;
    row["condition"] = r.condition;
    row["mse_enhanced"] = r.mse_enhanced;
    row["mse_unenhanced"] = r.mse_unenhanced;
    row["over_suppression_rate"] = r.over_suppression_rate;
    row["under_suppression_rate"] = r.under_suppression_rate;
    row["mean_w"] = r.mean_w;
    row["frames"] = r.frames;
    row["realtime_factor"] = r.realtime_factor;
    j["rows"].push_back(row);
  }
  return j.dump(2);
}

}  // namespace vflite
