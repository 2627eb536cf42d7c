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

#include "vflite/model_io.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <map>

#include <json.hpp>

#include "vflite/error.hpp"

namespace vflite {

namespace {

using nlohmann::json;

constexpr char kVfmMagic[4] = {'V', 'F', 'M', '1'};
constexpr uint16_t kVfmVersion = 1;
constexpr uint8_t kDtypeF32 = 0;
constexpr uint8_t kDtypeI8 = 1;

struct TensorRecord {
  std::string name;
  uint8_t dtype;
  std::vector<uint32_t> dims;
  float scale = 1.0f;            // i8 only
  std::vector<float> f;          // f32 payload
  std::vector<int8_t> q;         // i8 payload
  size_t count() const {
    size_t n = 1;
    for (uint32_t d : dims) n *= d;
    return n;
  }
};

void write_record(std::ofstream& out, const TensorRecord& rec) {
  uint16_t name_len = static_cast<uint16_t>(rec.name.size());
  out.write(reinterpret_cast<char*>(&name_len), 2);
  out.write(rec.name.data(), name_len);
  out.write(reinterpret_cast<const char*>(&rec.dtype), 1);
  uint8_t rank = static_cast<uint8_t>(rec.dims.size());
  out.write(reinterpret_cast<char*>(&rank), 1);
  for (uint32_t d : rec.dims) out.write(reinterpret_cast<char*>(&d), 4);
  if (rec.dtype == kDtypeI8) {
    out.write(reinterpret_cast<const char*>(&rec.scale), 4);
    out.write(reinterpret_cast<const char*>(rec.q.data()),
              static_cast<std::streamsize>(rec.q.size()));
  } else {
    out.write(reinterpret_cast<const char*>(rec.f.data()),
              static_cast<std::streamsize>(rec.f.size() * sizeof(float)));
  }
}

bool read_record(std::ifstream& in, const std::string& path, TensorRecord* rec) {
  uint16_t name_len = 0;
  in.read(reinterpret_cast<char*>(&name_len), 2);
  if (in.eof()) return false;
  if (!in) throw FormatError(path + ": truncated tensor record");
  rec->name.resize(name_len);
  in.read(rec->name.data(), name_len);
  in.read(reinterpret_cast<char*>(&rec->dtype), 1);
  uint8_t rank = 0;
  in.read(reinterpret_cast<char*>(&rank), 1);
  if (!in || rank > 4) throw FormatError(path + ": bad tensor record header");
  rec->dims.resize(rank);
  for (auto& d : rec->dims) in.read(reinterpret_cast<char*>(&d), 4);
  size_t n = rec->count();
  if (rec->dtype == kDtypeI8) {
    in.read(reinterpret_cast<char*>(&rec->scale), 4);
    if (!(rec->scale > 0.0f) || !std::isfinite(rec->scale))
      throw FormatError(path + ": tensor " + rec->name + " has bad scale");
    rec->q.resize(n);
    in.read(reinterpret_cast<char*>(rec->q.data()), static_cast<std::streamsize>(n));
  } else if (rec->dtype == kDtypeF32) {
    rec->f.resize(n);
    in.read(reinterpret_cast<char*>(rec->f.data()),
            static_cast<std::streamsize>(n * sizeof(float)));
    for (float v : rec->f)
      if (!std::isfinite(v))
        throw FormatError(path + ": tensor " + rec->name + " has non-finite value");
  } else {
    throw FormatError(path + ": unknown tensor dtype");
  }
  if (!in) throw FormatError(path + ": truncated tensor data");
  return true;
}

json config_json(const MaskNetConfig& cfg, bool quantized) {
  json j;
  j["input_dim"] = cfg.input_dim;
  j["dvec_dim"] = cfg.dvec_dim;
  if (cfg.conv) {
    j["conv"]["kernel_width"] = cfg.conv->kernel_width;
    j["conv"]["channels"] = cfg.conv->channels;
  } else {
    j["conv"] = nullptr;
  }
  j["lstm_layers"] = cfg.lstm_layers;
  j["lstm_units"] = cfg.lstm_units;
  j["head_hidden"] = cfg.head_hidden;
  j["variant"] = feature_variant_name(cfg.variant);
  j["linear_domain_mask"] = cfg.linear_domain_mask;
  j["dtype"] = quantized ? "i8" : "f32";
  return j;
}

MaskNetConfig config_from(const json& j, bool* quantized) {
  MaskNetConfig cfg;
  try {
    cfg.input_dim = j.at("input_dim").get<int>();
    cfg.dvec_dim = j.at("dvec_dim").get<int>();
    if (j.contains("conv") && !j.at("conv").is_null()) {
      ConvConfig cc;
      cc.kernel_width = j.at("conv").at("kernel_width").get<int>();
      cc.channels = j.at("conv").at("channels").get<int>();
      cfg.conv = cc;
    }
    cfg.lstm_layers = j.at("lstm_layers").get<int>();
    cfg.lstm_units = j.at("lstm_units").get<int>();
    cfg.head_hidden = j.value("head_hidden", std::vector<int>{64, 64});
    cfg.variant = feature_variant_from_name(j.value("variant", std::string("stacked")));
    cfg.linear_domain_mask = j.value("linear_domain_mask", true);
    if (quantized) *quantized = j.value("dtype", std::string("f32")) == "i8";
  } catch (const json::exception& e) {
    throw FormatError(std::string("model config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

}  // namespace

std::string config_to_json(const MaskNetConfig& cfg, bool quantized) {
  return config_json(cfg, quantized).dump();
}

MaskNetConfig config_from_json(const std::string& text, bool* quantized) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(std::string("model config: ") + e.what());
  }
  return config_from(j, quantized);
}

MaskNetModel quantize_model(const MaskNetModel& m) {
  if (m.quantized())
    throw ValueError("quantize_model: model is already int8-quantized");
  MaskNetModel out;
  out.cfg = m.cfg;
  out.params = quantize_params(m.float_params());
  return out;
}

void save_model(const std::string& path, const MaskNetModel& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open model file for writing: " + path);
  out.write(kVfmMagic, 4);
  uint16_t version = kVfmVersion;
  out.write(reinterpret_cast<char*>(&version), 2);
  std::string cfg_json = config_to_json(m.cfg, m.quantized());
  uint32_t len = static_cast<uint32_t>(cfg_json.size());
  out.write(reinterpret_cast<char*>(&len), 4);
  out.write(cfg_json.data(), len);

  if (!m.quantized()) {
    for_each_tensor(m.float_params(),
                    [&](const std::string& name, TensorKind,
                        const std::vector<uint32_t>& shape, const float* data,
                        size_t n) {
                      TensorRecord rec;
                      rec.name = name;
                      rec.dtype = kDtypeF32;
                      rec.dims = shape;
                      rec.f.assign(data, data + n);
                      write_record(out, rec);
                    });
  } else {
    const QuantParams& q = m.quant_params();
    auto write_qmat = [&](const std::string& name, const QuantMat& qm) {
      TensorRecord rec;
      rec.name = name;
      rec.dtype = kDtypeI8;
      rec.dims = {static_cast<uint32_t>(qm.rows), static_cast<uint32_t>(qm.cols)};
      rec.scale = qm.scale;
      rec.q = qm.q;
      write_record(out, rec);
    };
    auto write_bias = [&](const std::string& name, const std::vector<float>& b) {
      TensorRecord rec;
      rec.name = name;
      rec.dtype = kDtypeF32;
      rec.dims = {static_cast<uint32_t>(b.size())};
      rec.f = b;
      write_record(out, rec);
    };
    if (q.conv) {
      write_qmat("conv.k", q.conv->k);
      write_bias("conv.b", q.conv->b);
    }
    for (size_t i = 0; i < q.lstm.size(); ++i) {
      const std::string s = "lstm" + std::to_string(i);
      write_qmat(s + ".w_x", q.lstm[i].w_x);
      write_qmat(s + ".w_h", q.lstm[i].w_h);
      write_bias(s + ".b", q.lstm[i].b);
    }
    write_qmat("mask.w", q.mask.w);
    write_bias("mask.b", q.mask.b);
    for (size_t i = 0; i < q.noise_hidden.size(); ++i) {
      const std::string s = "noise" + std::to_string(i);
      write_qmat(s + ".w", q.noise_hidden[i].w);
      write_bias(s + ".b", q.noise_hidden[i].b);
    }
    write_qmat("noise_out.w", q.noise_out.w);
    write_bias("noise_out.b", q.noise_out.b);
  }
  if (!out) throw FormatError("failed writing model file: " + path);
}

MaskNetModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open model file: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kVfmMagic, 4) != 0)
    throw FormatError(path + ": bad VFM1 magic");
  uint16_t version = 0;
  in.read(reinterpret_cast<char*>(&version), 2);
  if (version != kVfmVersion)
    throw FormatError(path + ": unsupported VFM1 version " + std::to_string(version));
  uint32_t len = 0;
  in.read(reinterpret_cast<char*>(&len), 4);
  if (!in || len == 0 || len > (1u << 20))
    throw FormatError(path + ": bad config length");
  std::string cfg_json(len, '\0');
  in.read(cfg_json.data(), len);
  if (!in) throw FormatError(path + ": truncated config");

  bool quantized = false;
  MaskNetModel m;
  m.cfg = config_from_json(cfg_json, &quantized);

  std::map<std::string, TensorRecord> records;
  TensorRecord rec;
  while (read_record(in, path, &rec)) records[rec.name] = std::move(rec);

  auto take = [&](const std::string& name) -> TensorRecord {
    auto it = records.find(name);
    if (it == records.end())
      throw FormatError(path + ": missing tensor " + name);
    TensorRecord r = std::move(it->second);
    records.erase(it);
    return r;
  };
  auto expect_shape = [&](const TensorRecord& r, std::vector<uint32_t> shape) {
    if (r.dims != shape)
      throw FormatError(path + ": tensor " + r.name + " has unexpected shape");
  };

  if (!quantized) {
    NetParams p = zero_params_t<float>(m.cfg);
    for_each_tensor(p, [&](const std::string& name, TensorKind,
                           const std::vector<uint32_t>& shape, float* data, size_t n) {
      TensorRecord r = take(name);
      if (r.dtype != kDtypeF32)
        throw FormatError(path + ": tensor " + name + " must be f32");
      expect_shape(r, shape);
      std::copy(r.f.begin(), r.f.end(), data);
      (void)n;
    });
    m.params = std::move(p);
  } else {
    // Shapes come from a float skeleton of the same config.
    NetParams skel = zero_params_t<float>(m.cfg);
    QuantParams q;
    auto read_qmat = [&](const std::string& name, const MatT<float>& like) {
      TensorRecord r = take(name);
      if (r.dtype != kDtypeI8)
        throw FormatError(path + ": tensor " + name + " must be i8");
      expect_shape(r, {static_cast<uint32_t>(like.rows), static_cast<uint32_t>(like.cols)});
      QuantMat qm;
      qm.rows = like.rows;
      qm.cols = like.cols;
      qm.scale = r.scale;
      qm.q = std::move(r.q);
      return qm;
    };
    auto read_bias = [&](const std::string& name, size_t n) {
      TensorRecord r = take(name);
      if (r.dtype != kDtypeF32)
        throw FormatError(path + ": tensor " + name + " must be f32");
      expect_shape(r, {static_cast<uint32_t>(n)});
      return r.f;
    };
    if (skel.conv) {
      q.conv.emplace();
      q.conv->k = read_qmat("conv.k", skel.conv->k);
      q.conv->b = read_bias("conv.b", skel.conv->b.size());
    }
    for (size_t i = 0; i < skel.lstm.size(); ++i) {
      const std::string s = "lstm" + std::to_string(i);
      q.lstm.push_back({read_qmat(s + ".w_x", skel.lstm[i].w_x),
                        read_qmat(s + ".w_h", skel.lstm[i].w_h),
                        read_bias(s + ".b", skel.lstm[i].b.size())});
    }
    q.mask = {read_qmat("mask.w", skel.mask.w), read_bias("mask.b", skel.mask.b.size())};
    for (size_t i = 0; i < skel.noise_hidden.size(); ++i) {
      const std::string s = "noise" + std::to_string(i);
      q.noise_hidden.push_back({read_qmat(s + ".w", skel.noise_hidden[i].w),
                                read_bias(s + ".b", skel.noise_hidden[i].b.size())});
    }
    q.noise_out = {read_qmat("noise_out.w", skel.noise_out.w),
                   read_bias("noise_out.b", skel.noise_out.b.size())};
    m.params = std::move(q);
  }
  if (!records.empty())
    throw FormatError(path + ": unexpected extra tensor " + records.begin()->first);
  return m;
}

}  // namespace vflite
