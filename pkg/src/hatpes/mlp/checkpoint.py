"""Self-describing model checkpoints.

Layout: the magic line ``HATMLP1``, an 8-byte little-endian header length,
a JSON header (model config, species scaler, training-config hash, tensor
directory), then the raw little-endian float64 tensor data in directory
order. Byte-for-byte deterministic for identical parameters, so checkpoint
hashes double as reproducibility fingerprints.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import os
import struct
from typing import Union

import numpy as np
import torch

from .model import DTYPE, ModelConfig, PotentialModel
from .scaler import SpeciesScaler

MAGIC = b"HATMLP1\n"


def save_checkpoint(model: PotentialModel, path: Union[str, os.PathLike],
                    train_config_hash: str = "") -> None:
    state = model.state_dict()
    directory = []
    blobs = []
    for name, tensor in state.items():
        arr = tensor.detach().to(DTYPE).numpy()
        directory.append({"name": name, "shape": list(arr.shape)})
        blobs.append(np.ascontiguousarray(arr, dtype="<f8").tobytes())
    header = json.dumps({
        "model_config": dataclasses.asdict(model.config),
        "scaler": {
            "elements": list(model.scaler.elements),
            "means": list(model.scaler.means),
            "scale": model.scaler.scale,
        },
        "train_config_hash": train_config_hash,
        "tensors": directory,
    }, sort_keys=True).encode()
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<Q", len(header)))
        fh.write(header)
        for blob in blobs:
            fh.write(blob)


def load_checkpoint(path: Union[str, os.PathLike]) -> PotentialModel:
    with open(path, "rb") as fh:
        magic = fh.read(len(MAGIC))
        if magic != MAGIC:
            raise ValueError(f"not a model checkpoint (bad magic {magic!r})")
        (header_len,) = struct.unpack("<Q", fh.read(8))
        header = json.loads(fh.read(header_len))
        mc = dict(header["model_config"])
        mc["readout_hidden"] = tuple(mc["readout_hidden"])
        config = ModelConfig(**mc)
        sc = header["scaler"]
        scaler = SpeciesScaler(tuple(sc["elements"]), tuple(sc["means"]),
                               sc["scale"])
        model = PotentialModel(config, scaler)
        state = {}
        for entry in header["tensors"]:
            shape = tuple(entry["shape"])
            count = int(np.prod(shape)) if shape else 1
            data = np.frombuffer(fh.read(8 * count), dtype="<f8")
            state[entry["name"]] = torch.tensor(
                data.reshape(shape), dtype=DTYPE
            )
        model.load_state_dict(state)
        return model


def checkpoint_hash(path: Union[str, os.PathLike]) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()
