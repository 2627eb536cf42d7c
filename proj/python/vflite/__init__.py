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

"""Streaming speaker-conditioned speech enhancement frontend.

Thin facade over the C++ core: feature extraction, mixture synthesis,
speaker embeddings, the streaming LSTM mask network, asymmetric-loss
training, adaptive suppression, and int8 dynamic-range quantization.
"""

from vflite._core import (  # noqa: F401
    Model,
    apply_mask,
    apply_rir,
    asym_l2_loss,
    compensate,
    embed_reference,
    extract,
    f_adapt,
    g_asym,
    hinge_loss,
    init_model,
    l2_loss,
    load_dvector,
    mix_at_snr,
    read_vff,
    read_wav,
    save_dvector,
    synth_rir,
    train,
    write_vff,
    write_wav,
)

__all__ = [
    "Model",
    "apply_mask",
    "apply_rir",
    "asym_l2_loss",
    "compensate",
    "embed_reference",
    "extract",
    "f_adapt",
    "g_asym",
    "hinge_loss",
    "init_model",
    "l2_loss",
    "load_dvector",
    "mix_at_snr",
    "read_vff",
    "read_wav",
    "save_dvector",
    "synth_rir",
    "train",
    "write_vff",
    "write_wav",
]

__version__ = "0.1.0"
