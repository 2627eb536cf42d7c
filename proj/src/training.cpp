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

#include "vflite/training.hpp"

#include <algorithm>
#include <cmath>

#include "vflite/error.hpp"
#include "vflite/net_math.hpp"
#include "vflite/parallel.hpp"

namespace vflite {

void LossConfig::validate() const {
  check(alpha >= 1.0, "LossConfig: alpha must be >= 1");
  check(noise_head_weight >= 0.0, "LossConfig: noise_head_weight must be >= 0");
}

void TrainConfig::validate() const {
  check(learning_rate > 0.0, "TrainConfig: learning_rate must be positive");
  check(batch_size >= 1, "TrainConfig: batch_size must be positive");
  check(steps >= 0, "TrainConfig: steps must be non-negative");
}

double g_asym(double x, double alpha) {
  return x <= 0.0 ? x : alpha * x;
}

double l2_loss(const FeatureSequence& s_cln, const FeatureSequence& s_enh) {
  check(s_cln.rows == s_enh.rows && s_cln.cols == s_enh.cols,
        "l2_loss: shape mismatch");
  double acc = 0.0;
  for (size_t i = 0; i < s_cln.data.size(); ++i) {
    double d = static_cast<double>(s_cln.data[i]) - s_enh.data[i];
    acc += d * d;
  }
  return acc;
}

double asym_l2_loss(const FeatureSequence& s_cln, const FeatureSequence& s_enh,
                    double alpha) {
  check(s_cln.rows == s_enh.rows && s_cln.cols == s_enh.cols,
        "asym_l2_loss: shape mismatch");
  check(alpha >= 1.0, "asym_l2_loss: alpha must be >= 1");
  double acc = 0.0;
  for (size_t i = 0; i < s_cln.data.size(); ++i) {
    double d = static_cast<double>(s_cln.data[i]) - s_enh.data[i];
    double g = d <= 0.0 ? d : alpha * d;
    acc += g * g;
  }
  return acc;
}

double hinge_loss(double score, int label) {
  check(label == 0 || label == 1, "hinge_loss: label must be 0 or 1");
  double y = 2.0 * label - 1.0;
  return std::max(0.0, 1.0 - y * score);
}

double total_loss(const MixtureExample& ex, const Masks& masks,
                  std::span<const float> noise_scores, const LossConfig& cfg,
                  bool linear_domain_mask) {
  cfg.validate();
  check(noise_scores.size() == ex.overlap_labels.size(),
        "total_loss: score/label count mismatch");
  FeatureSequence enh = apply_mask(ex.noisy, masks, linear_domain_mask);
  double loss = asym_l2_loss(ex.clean, enh, cfg.alpha);
  double hinge = 0.0;
  for (size_t t = 0; t < noise_scores.size(); ++t)
    hinge += hinge_loss(noise_scores[t], ex.overlap_labels[t]);
  return loss + cfg.noise_head_weight * hinge;
}

namespace {

// Training-path masking in double; no clamping (the sigmoid keeps the mask
// strictly inside (0, 1), so the branches of apply_mask never trigger).
double mask_value(double s_in, double m, FeatureVariant variant, bool linear) {
  if (variant == FeatureVariant::kFftMagnitude || !linear) return m * s_in;
  return std::log1p(m * std::expm1(s_in));
}

double mask_dvalue_dm(double s_in, double m, FeatureVariant variant, bool linear) {
  if (variant == FeatureVariant::kFftMagnitude || !linear) return s_in;
  double e = std::expm1(s_in);
  return e / (1.0 + m * e);
}

void validate_example(const MaskNetConfig& cfg, const MixtureExample& ex) {
  check(ex.noisy.rows == ex.clean.rows && ex.noisy.cols == ex.clean.cols,
        "training: noisy/clean shape mismatch");
  check(ex.noisy.cols == cfg.input_dim, "training: feature width mismatch");
  check(ex.overlap_labels.size() == static_cast<size_t>(ex.noisy.rows),
        "training: label count mismatch");
  check(ex.dvec.dim() == cfg.dvec_dim, "training: d-vector dimension mismatch");
}

}  // namespace

LossBreakdown example_loss(const NetParamsD& p, const MaskNetConfig& cfg,
                           const MixtureExample& ex, const LossConfig& lcfg) {
  lcfg.validate();
  validate_example(cfg, ex);
  const int t_count = ex.noisy.rows;
  std::vector<double> dvec(ex.dvec.values.begin(), ex.dvec.values.end());
  StreamStateT<double> state = make_stream_state_t<double>(cfg);

  LossBreakdown out;
  std::vector<double> frame(cfg.input_dim), mask;
  for (int t = 0; t < t_count; ++t) {
    for (int f = 0; f < cfg.input_dim; ++f) frame[f] = ex.noisy.at(t, f);
    double score = 0.0;
    forward_step_t<double>(p, cfg, state, frame, dvec, mask, &score, nullptr);
    for (int f = 0; f < cfg.input_dim; ++f) {
      double s_enh = mask_value(frame[f], mask[f], cfg.variant, cfg.linear_domain_mask);
      double d = static_cast<double>(ex.clean.at(t, f)) - s_enh;
      double g = d <= 0.0 ? d : lcfg.alpha * d;
      out.mask_loss += g * g;
    }
    out.noise_loss += hinge_loss(score, ex.overlap_labels[t]);
  }
  out.total = out.mask_loss + lcfg.noise_head_weight * out.noise_loss;
  return out;
}

LossBreakdown example_backward(const NetParamsD& p, const MaskNetConfig& cfg,
                               const MixtureExample& ex, const LossConfig& lcfg,
                               NetParamsD* grads) {
  lcfg.validate();
  validate_example(cfg, ex);
  check(grads != nullptr, "example_backward: grads must be non-null");
  *grads = zero_params_t<double>(cfg);

  const int t_count = ex.noisy.rows;
  const int units = cfg.lstm_units;
  const int f_dim = cfg.input_dim;
  std::vector<double> dvec(ex.dvec.values.begin(), ex.dvec.values.end());

  // Forward with per-step caches.
  std::vector<StepCache<double>> caches(t_count);
  StreamStateT<double> state = make_stream_state_t<double>(cfg);
  std::vector<double> frame(f_dim), mask;
  LossBreakdown out;
  std::vector<std::vector<double>> d_mask(t_count);   // dL/dm per frame
  std::vector<double> d_score(t_count, 0.0);          // dL/dscore per frame
  for (int t = 0; t < t_count; ++t) {
    for (int f = 0; f < f_dim; ++f) frame[f] = ex.noisy.at(t, f);
    double score = 0.0;
    forward_step_t<double>(p, cfg, state, frame, dvec, mask, &score, &caches[t]);

    d_mask[t].assign(f_dim, 0.0);
    for (int f = 0; f < f_dim; ++f) {
      double s_enh = mask_value(frame[f], mask[f], cfg.variant, cfg.linear_domain_mask);
      double d = static_cast<double>(ex.clean.at(t, f)) - s_enh;
      double g = d <= 0.0 ? d : lcfg.alpha * d;
      out.mask_loss += g * g;
      // dL/dS_enh: -2d on the under-suppression side, -2*alpha^2*d above.
      double dl_denh = d <= 0.0 ? -2.0 * d : -2.0 * lcfg.alpha * lcfg.alpha * d;
      d_mask[t][f] =
          dl_denh * mask_dvalue_dm(frame[f], mask[f], cfg.variant,
                                   cfg.linear_domain_mask);
    }
    int label = ex.overlap_labels[t];
    double y = 2.0 * label - 1.0;
    double margin = 1.0 - y * score;
    out.noise_loss += std::max(0.0, margin);
    if (margin > 0.0) d_score[t] = -lcfg.noise_head_weight * y;
  }
  out.total = out.mask_loss + lcfg.noise_head_weight * out.noise_loss;

  // Head backward: accumulate dL/dh_top per step.
  std::vector<std::vector<double>> dh_top(t_count, std::vector<double>(units, 0.0));
  for (int t = 0; t < t_count; ++t) {
    const StepCache<double>& c = caches[t];
    const std::vector<double>& h_top = c.h[cfg.lstm_layers - 1];

    // Mask head (sigmoid).
    for (int f = 0; f < f_dim; ++f) {
      double m = c.mask[f];
      double dz = d_mask[t][f] * m * (1.0 - m);
      if (dz == 0.0) continue;
      double* wrow = grads->mask.w.row(f);
      const double* prow = p.mask.w.row(f);
      for (int u = 0; u < units; ++u) {
        wrow[u] += dz * h_top[u];
        dh_top[t][u] += prow[u] * dz;
      }
      grads->mask.b[f] += dz;
    }

    // Noise head (ReLU stack + affine), only when the hinge is active.
    if (d_score[t] != 0.0) {
      const size_t n_hidden = p.noise_hidden.size();
      double dy = d_score[t];
      const std::vector<double>& last_act =
          n_hidden == 0 ? h_top : c.head_act[n_hidden - 1];
      std::vector<double> dact(last_act.size(), 0.0);
      for (size_t j = 0; j < last_act.size(); ++j) {
        grads->noise_out.w.row(0)[j] += dy * last_act[j];
        dact[j] = p.noise_out.w.row(0)[j] * dy;
      }
      grads->noise_out.b[0] += dy;
      for (int li = static_cast<int>(n_hidden) - 1; li >= 0; --li) {
        const std::vector<double>& pre = c.head_pre[li];
        const std::vector<double>& prev_act = li == 0 ? h_top : c.head_act[li - 1];
        std::vector<double> dprev(prev_act.size(), 0.0);
        for (size_t r = 0; r < pre.size(); ++r) {
          double dz = pre[r] > 0.0 ? dact[r] : 0.0;
          if (dz == 0.0) continue;
          double* wrow = grads->noise_hidden[li].w.row(static_cast<int>(r));
          const double* prow = p.noise_hidden[li].w.row(static_cast<int>(r));
          for (size_t cc = 0; cc < prev_act.size(); ++cc) {
            wrow[cc] += dz * prev_act[cc];
            dprev[cc] += prow[cc] * dz;
          }
          grads->noise_hidden[li].b[r] += dz;
        }
        dact = std::move(dprev);
      }
      for (int u = 0; u < units; ++u) dh_top[t][u] += dact[u];
    }
  }

  // BPTT, top layer down. dh_above carries dL/dh_l(t) from the layer above
  // (or the heads, for the top layer).
  std::vector<std::vector<double>> dh_above = std::move(dh_top);
  for (int l = cfg.lstm_layers - 1; l >= 0; --l) {
    const LstmLayerT<double>& layer = p.lstm[l];
    LstmLayerT<double>& glayer = grads->lstm[l];
    const int in_dim = layer.w_x.cols;
    const bool need_dx = l > 0 || cfg.conv.has_value();

    std::vector<std::vector<double>> dx_below;
    if (need_dx)
      dx_below.assign(t_count, std::vector<double>(in_dim, 0.0));
    std::vector<double> dh_next(units, 0.0), dc_next(units, 0.0);
    std::vector<double> dz(static_cast<size_t>(4) * units);

    for (int t = t_count - 1; t >= 0; --t) {
      const StepCache<double>& c = caches[t];
      const std::vector<double>& gi = c.gate_i[l];
      const std::vector<double>& gf = c.gate_f[l];
      const std::vector<double>& gg = c.gate_g[l];
      const std::vector<double>& go = c.gate_o[l];
      const std::vector<double>& tc = c.tanh_c[l];
      const std::vector<double>& c_prev = c.c_prev[l];
      const std::vector<double>& x_t = l == 0 ? c.input : c.h[l - 1];
      const std::vector<double>& h_prev = c.h_prev[l];

      for (int u = 0; u < units; ++u) {
        double dh = dh_above[t][u] + dh_next[u];
        double d_o = dh * tc[u];
        double dc = dh * go[u] * (1.0 - tc[u] * tc[u]) + dc_next[u];
        dz[u] = dc * gg[u] * gi[u] * (1.0 - gi[u]);                  // i
        dz[units + u] = dc * c_prev[u] * gf[u] * (1.0 - gf[u]);      // f
        dz[2 * units + u] = dc * gi[u] * (1.0 - gg[u] * gg[u]);      // g
        dz[3 * units + u] = d_o * go[u] * (1.0 - go[u]);             // o
        dc_next[u] = dc * gf[u];
      }

      std::fill(dh_next.begin(), dh_next.end(), 0.0);
      for (int r = 0; r < 4 * units; ++r) {
        double dzr = dz[r];
        if (dzr == 0.0) continue;
        double* gx = glayer.w_x.row(r);
        double* gh = glayer.w_h.row(r);
        const double* px = layer.w_x.row(r);
        const double* ph = layer.w_h.row(r);
        for (int cc = 0; cc < in_dim; ++cc) gx[cc] += dzr * x_t[cc];
        if (need_dx) {
          double* dxt = dx_below[t].data();
          for (int cc = 0; cc < in_dim; ++cc) dxt[cc] += px[cc] * dzr;
        }
        for (int cc = 0; cc < units; ++cc) {
          gh[cc] += dzr * h_prev[cc];
          dh_next[cc] += ph[cc] * dzr;
        }
        glayer.b[r] += dzr;
      }
    }
    if (l > 0) dh_above = std::move(dx_below);
    else if (cfg.conv) {
      // Conv backward: the first input_dim*channels entries of dx feed the
      // ReLU'd conv output; the d-vector tail has no parameters.
      const ConvLayerT<double>& conv = *p.conv;
      ConvLayerT<double>& gconv = grads->conv.value();
      const int kw = conv.k.cols;
      const int half = kw / 2;
      for (int t = 0; t < t_count; ++t) {
        const StepCache<double>& c = caches[t];
        for (int ch = 0; ch < conv.k.rows; ++ch) {
          for (int f = 0; f < f_dim; ++f) {
            size_t idx = static_cast<size_t>(ch) * f_dim + f;
            double dpre = c.conv_pre[idx] > 0.0 ? dx_below[t][idx] : 0.0;
            if (dpre == 0.0) continue;
            for (int j = 0; j < kw; ++j) {
              int src = f + j - half;
              if (src < 0 || src >= f_dim) continue;
              gconv.k.row(ch)[j] += dpre * c.frame[src];
            }
            gconv.b[ch] += dpre;
          }
        }
      }
    }
  }
  return out;
}

double global_grad_norm(const NetParamsD& g) {
  double acc = 0.0;
  for_each_tensor(g, [&](const std::string&, TensorKind, const std::vector<uint32_t>&,
                         const double* data, size_t n) {
    for (size_t i = 0; i < n; ++i) acc += data[i] * data[i];
  });
  return std::sqrt(acc);
}

TrainResult train(const std::vector<MixtureExample>& dataset,
                  const MaskNetConfig& cfg, const LossConfig& lcfg,
                  const TrainConfig& tcfg, const NetParams* init) {
  cfg.validate();
  lcfg.validate();
  tcfg.validate();
  check(!dataset.empty(), "train: empty dataset");
  for (const auto& ex : dataset) validate_example(cfg, ex);

  NetParams start = init ? *init : init_params(cfg, tcfg.seed);
  std::vector<double> theta = flatten(to_double(start));
  const size_t n_params = theta.size();
  std::vector<double> adam_m, adam_v;
  if (tcfg.optimizer == TrainConfig::Optimizer::kAdam) {
    adam_m.assign(n_params, 0.0);
    adam_v.assign(n_params, 0.0);
  }

  TrainResult result;
  const int batch = std::min<int>(tcfg.batch_size, static_cast<int>(dataset.size()));
  std::vector<NetParamsD> grads(batch);
  std::vector<LossBreakdown> losses(batch);

  for (int step = 0; step < tcfg.steps; ++step) {
    NetParamsD params = unflatten(cfg, theta);
    parallel_for(batch, [&](size_t j) {
      size_t idx = (static_cast<size_t>(step) * batch + j) % dataset.size();
      losses[j] = example_backward(params, cfg, dataset[idx], lcfg, &grads[j]);
    });

    // Average in fixed example order.
    std::vector<double> g(n_params, 0.0);
    for (int j = 0; j < batch; ++j) {
      size_t off = 0;
      for_each_tensor(grads[j], [&](const std::string&, TensorKind,
                                    const std::vector<uint32_t>&,
                                    const double* data, size_t n) {
        for (size_t i = 0; i < n; ++i) g[off + i] += data[i];
        off += n;
      });
    }
    for (auto& v : g) v /= batch;

    double norm = 0.0;
    for (double v : g) norm += v * v;
    norm = std::sqrt(norm);
    if (!std::isfinite(norm))
      throw NumericError("train: non-finite gradient at step " + std::to_string(step));
    if (tcfg.clip_norm > 0.0 && norm > tcfg.clip_norm) {
      double s = tcfg.clip_norm / norm;
      for (auto& v : g) v *= s;
    }

    if (tcfg.optimizer == TrainConfig::Optimizer::kAdam) {
      double t = step + 1.0;
      double bc1 = 1.0 - std::pow(tcfg.adam_beta1, t);
      double bc2 = 1.0 - std::pow(tcfg.adam_beta2, t);
      for (size_t i = 0; i < n_params; ++i) {
        adam_m[i] = tcfg.adam_beta1 * adam_m[i] + (1.0 - tcfg.adam_beta1) * g[i];
        adam_v[i] = tcfg.adam_beta2 * adam_v[i] + (1.0 - tcfg.adam_beta2) * g[i] * g[i];
        double mh = adam_m[i] / bc1;
        double vh = adam_v[i] / bc2;
        theta[i] -= tcfg.learning_rate * mh / (std::sqrt(vh) + tcfg.adam_eps);
      }
    } else {
      for (size_t i = 0; i < n_params; ++i) theta[i] -= tcfg.learning_rate * g[i];
    }

    StepMetrics m;
    m.step = step;
    for (int j = 0; j < batch; ++j) {
      m.total += losses[j].total;
      m.mask_loss += losses[j].mask_loss;
      m.noise_loss += losses[j].noise_loss;
    }
    m.total /= batch;
    m.mask_loss /= batch;
    m.noise_loss /= batch;
    m.grad_norm = norm;
    result.history.push_back(m);
  }

  result.params = to_float(unflatten(cfg, theta));
  for_each_tensor(result.params,
                  [&](const std::string&, TensorKind, const std::vector<uint32_t>&,
                      const float* data, size_t n) {
                    for (size_t i = 0; i < n; ++i)
                      if (!std::isfinite(data[i]))
                        throw NumericError("train: non-finite parameter after training");
                  });
  return result;
}

}  // namespace vflite
