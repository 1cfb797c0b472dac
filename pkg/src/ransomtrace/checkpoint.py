# Copyright 2026 The ransomtrace Authors
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
#
"""Single-file model checkpoints.

Layout::

    magic        8 bytes   b"RTCKPT\\x00\\x01"
    header_len   uint64, little-endian
    header       UTF-8 JSON (sorted keys): format version, model config,
                 vocab size and sha256, class order, parameter names and
                 shapes in block order, free-form metadata
    blocks       one little-endian float64 block per parameter, C order

Saving then loading reproduces every parameter bit for bit.
"""

import json
import logging
import struct
from pathlib import Path
from typing import Any, Optional

import numpy as np
import torch

from .data_model import CLASS_NAMES, ModelConfig
from .errors import NumericError, SchemaError
from .model import TransformerClassifier, init_model
from .nttp import TokenVocab

_logger = logging.getLogger(__name__)

MAGIC = b"RTCKPT\x00\x01"
FORMAT_VERSION = 1
_LEN = struct.Struct("<Q")


def encode_checkpoint(
    model: TransformerClassifier,
    vocab: TokenVocab,
    metadata: Optional[dict[str, Any]] = None,
) -> bytes:
    """Serializes the model, bound to ``vocab`` by its hash.

    Raises:
        SchemaError: The vocabulary size differs from the model.
        NumericError: A parameter is not finite.
    """
    if len(vocab) != model.vocab_size:
        raise SchemaError(f"vocab has {len(vocab)} tokens, model expects {model.vocab_size}")
    names, shapes, blocks = [], [], []
    for name, param in model.named_parameters():
        values = param.detach().numpy()
        if not np.isfinite(values).all():
            raise NumericError(f"parameter '{name}' is not finite")
        names.append(name)
        shapes.append(list(values.shape))
        blocks.append(np.ascontiguousarray(values, dtype="<f8").tobytes())
    header = {
        "format_version": FORMAT_VERSION,
        "model_config": model.config.model_dump(mode="json"),
        "vocab_size": model.vocab_size,
        "vocab_sha256": vocab.sha256(),
        "class_order": list(CLASS_NAMES),
        "parameters": [{"name": n, "shape": s} for n, s in zip(names, shapes)],
        "metadata": metadata or {},
    }
    raw = json.dumps(header, sort_keys=True).encode("utf-8")
    return b"".join([MAGIC, _LEN.pack(len(raw)), raw, *blocks])


def decode_checkpoint(
    data: bytes, vocab: Optional[TokenVocab] = None
) -> tuple[TransformerClassifier, dict[str, Any]]:
    """Rebuilds a model (in eval mode) and returns it with the header.

    Raises:
        SchemaError: Bad magic, truncated data, a vocabulary that does not
            match the checkpoint, or an unexpected parameter layout.
    """
    if not data.startswith(MAGIC):
        raise SchemaError("not a ransomtrace checkpoint")
    offset = len(MAGIC)
    try:
        (header_len,) = _LEN.unpack_from(data, offset)
        offset += _LEN.size
        header = json.loads(data[offset : offset + header_len].decode("utf-8"))
    except (struct.error, UnicodeDecodeError, json.JSONDecodeError) as e:
        raise SchemaError(f"corrupt checkpoint header: {e}") from e
    offset += header_len
    if header.get("format_version") != FORMAT_VERSION:
        raise SchemaError(f"unsupported checkpoint version {header.get('format_version')}")
    if vocab is not None and vocab.sha256() != header["vocab_sha256"]:
        raise SchemaError("vocabulary does not match the checkpoint")

    model = init_model(ModelConfig.model_validate(header["model_config"]), header["vocab_size"])
    params = dict(model.named_parameters())
    expected = [p["name"] for p in header["parameters"]]
    if expected != list(params):
        raise SchemaError("checkpoint parameter layout does not match the model")
    with torch.no_grad():
        for entry in header["parameters"]:
            count = int(np.prod(entry["shape"], dtype=np.int64))
            end = offset + 8 * count
            if end > len(data):
                raise SchemaError("checkpoint is truncated")
            values = np.frombuffer(data[offset:end], dtype="<f8").reshape(entry["shape"])
            params[entry["name"]].copy_(torch.from_numpy(values.astype(np.float64)))
            offset = end
    if offset != len(data):
        raise SchemaError("checkpoint has trailing bytes")
    model.eval()
    return model, header


def save_checkpoint(
    path: Path | str,
    model: TransformerClassifier,
    vocab: TokenVocab,
    metadata: Optional[dict[str, Any]] = None,
) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_checkpoint(model, vocab, metadata))
    _logger.info("saved checkpoint to %s", path)
    return path


def load_checkpoint(
    path: Path | str, vocab: Optional[TokenVocab] = None
) -> tuple[TransformerClassifier, dict[str, Any]]:
    path = Path(path)
    if not path.exists():
        raise SchemaError(f"checkpoint not found: {path}")
    return decode_checkpoint(path.read_bytes(), vocab)
