"""Versioned binary weight files.

Layout (little endian)::

    magic      4s   b"HGGC"
    version    u16
    hidden     u32, steps u32, attention u8, node_features u32, thermal_features u32
    n_tensors  u32
    per tensor: name_len u16, name utf-8, ndim u8, shape u32*ndim, data f8*prod(shape)
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .ggcn import GgcnModel, param_shapes

MAGIC = b"HGGC"
VERSION = 1


class WeightFileError(ValueError):
    pass


def save_model(model: GgcnModel, path: str | Path) -> None:
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<H", VERSION))
        fh.write(struct.pack("<IIBII", model.hidden, model.steps, int(model.attention), model.node_features, model.thermal_features))
        fh.write(struct.pack("<I", len(model.params)))
        for name in sorted(model.params):
            arr = np.ascontiguousarray(model.params[name], dtype="<f8")
            raw = name.encode()
            fh.write(struct.pack("<H", len(raw)) + raw)
            fh.write(struct.pack("<B", arr.ndim))
            fh.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
            fh.write(arr.tobytes(order="C"))


def _read(fh, fmt):
    size = struct.calcsize(fmt)
    buf = fh.read(size)
    if len(buf) != size:
        raise WeightFileError("truncated weight file")
    return struct.unpack(fmt, buf)


def load_model(path: str | Path) -> GgcnModel:
    with open(path, "rb") as fh:
        if fh.read(4) != MAGIC:
            raise WeightFileError(f"{path}: not a surrogate weight file")
        (version,) = _read(fh, "<H")
        if version != VERSION:
            raise WeightFileError(f"{path}: unsupported layout version {version}")
        hidden, steps, attention, nf, tf = _read(fh, "<IIBII")
        model = GgcnModel(hidden, steps, bool(attention), node_features=nf, thermal_features=tf)
        expected = param_shapes(hidden, steps, nf, tf)
        (count,) = _read(fh, "<I")
        seen = set()
        for _ in range(count):
            (n,) = _read(fh, "<H")
            name = fh.read(n).decode()
            (ndim,) = _read(fh, "<B")
            shape = _read(fh, f"<{ndim}I")
            if name not in expected or tuple(expected[name]) != tuple(shape):
                raise WeightFileError(f"{path}: unexpected tensor {name} {shape}")
            nbytes = 8 * int(np.prod(shape))
            buf = fh.read(nbytes)
            if len(buf) != nbytes:
                raise WeightFileError("truncated weight file")
            model.params[name] = np.frombuffer(buf, dtype="<f8").reshape(shape).astype(float)
            seen.add(name)
        if seen != set(expected):
            raise WeightFileError(f"{path}: missing tensors {sorted(set(expected) - seen)}")
    return model
