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

#pragma once

#include <string>
#include <variant>

#include "vflite/masknet.hpp"
#include "vflite/quantize.hpp"

namespace vflite {

// A mask network plus its configuration, float or int8-quantized.
struct MaskNetModel {
  MaskNetConfig cfg;
  std::variant<NetParams, QuantParams> params;

  bool quantized() const { return std::holds_alternative<QuantParams>(params); }
  const NetParams& float_params() const { return std::get<NetParams>(params); }
  const QuantParams& quant_params() const { return std::get<QuantParams>(params); }
};

MaskNetModel quantize_model(const MaskNetModel& m);  // errors if already int8

// "VFM1" model file: magic, u16 version, u32-length-prefixed JSON config,
// then per-tensor records in canonical order: u16 name length, name bytes,
// u8 dtype (0 = f32, 1 = i8), u8 rank, u32 dims, for i8 a float32 scale,
// then raw little-endian data. Read until EOF.
void save_model(const std::string& path, const MaskNetModel& m);
MaskNetModel load_model(const std::string& path);

// Config <-> JSON text (the VMF1 header blob; also used by --model-config).
std::string config_to_json(const MaskNetConfig& cfg, bool quantized);
MaskNetConfig config_from_json(const std::string& text, bool* quantized);

}  // namespace vflite
