"""Versioned binary model files.

Layout: magic "HWM1", u32 version, u32 header length, JSON header
(model type, constructor config, ordered parameter names and shapes),
then the raw little-endian float64 parameter arrays in header order.
"""
from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from ..errors import InputError
from .autoencoder import AutoencoderModel
from .mlp import MlpModel

MAGIC = b"HWM1"
VERSION = 1


def _model_config(model) -> dict:
    if isinstance(model, AutoencoderModel):
        return {"type": "autoencoder", "n_mels": model.n_mels,
                "hidden_size": model.hidden_size,
                "dropout_rate": model.dropout_rate, "seed": model.seed}
    if isinstance(model, MlpModel):
        return {"type": "mlp", "n_in": model.n_in, "n_classes": model.n_classes,
                "hidden_size": model.hidden_size,
                "hidden_activation": model.hidden_activation, "seed": model.seed}
    raise InputError(f"cannot serialize {type(model).__name__}")


def save_model(model, path) -> None:
    params = model.named_params()
    header = {
        "config": _model_config(model),
        "params": [{"name": k, "shape": list(v.shape)} for k, v in params.items()],
    }
    blob = json.dumps(header).encode()
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", VERSION, len(blob)))
        fh.write(blob)
        for v in params.values():
            fh.write(np.ascontiguousarray(v, dtype="<f8").tobytes())


def load_model(path):
    path = Path(path)
    with open(path, "rb") as fh:
        if fh.read(4) != MAGIC:
            raise InputError(f"{path}: not a model file")
        version, hlen = struct.unpack("<II", fh.read(8))
        if version != VERSION:
            raise InputError(f"{path}: unsupported model version {version}")
        header = json.loads(fh.read(hlen))
        cfg = header["config"]
        if cfg["type"] == "autoencoder":
            model = AutoencoderModel(n_mels=cfg["n_mels"], hidden_size=cfg["hidden_size"],
                                     dropout_rate=cfg["dropout_rate"], seed=cfg["seed"])
        elif cfg["type"] == "mlp":
            model = MlpModel(n_in=cfg["n_in"], n_classes=cfg["n_classes"],
                             hidden_size=cfg["hidden_size"],
                             hidden_activation=cfg["hidden_activation"], seed=cfg["seed"])
        else:
            raise InputError(f"{path}: unknown model type {cfg['type']}")
        params = model.named_params()
        for entry in header["params"]:
            shape = tuple(entry["shape"])
            n = int(np.prod(shape)) if shape else 1
            data = np.frombuffer(fh.read(8 * n), dtype="<f8").reshape(shape)
            target = params[entry["name"]]
            if target.shape != shape:
                raise InputError(f"{path}: shape mismatch for {entry['name']}")
            target[...] = data
    return model
