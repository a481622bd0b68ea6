"""Model checkpoint serialization (GRPN format).

Layout, all little-endian:

    header:  magic "GRPN" | version u16 | layer_count u16
             | input_dim u32 | class_count u32 | name_len u16 | name utf-8
    layer:   kind_len u16 | kind utf-8 | config_len u32 | config json utf-8
             | param_count u16
    param:   ndim u8 | dims u32 * ndim | float64 values, C order
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from ..errors import FramingError
from .layers import LAYER_KINDS
from .network import NetworkModel

MAGIC = b"GRPN"
VERSION = 1


def save_model(model: NetworkModel, path) -> None:
    out = bytearray()
    name = model.name.encode()
    out += struct.pack("<4sHHIIH", MAGIC, VERSION, len(model.layers), model.input_dim,
                       model.class_count, len(name))
    out += name
    for layer in model.layers:
        kind = layer.kind.encode()
        config = json.dumps(layer.config(), sort_keys=True).encode()
        out += struct.pack("<H", len(kind)) + kind
        out += struct.pack("<I", len(config)) + config
        out += struct.pack("<H", len(layer.params))
        for p in layer.params:
            out += struct.pack("<B", p.ndim)
            out += struct.pack(f"<{p.ndim}I", *p.shape)
            out += np.ascontiguousarray(p, dtype="<f8").tobytes()
    Path(path).write_bytes(bytes(out))


def load_model(path) -> NetworkModel:
    blob = Path(path).read_bytes()
    off = 0

    def take(fmt):
        nonlocal off
        size = struct.calcsize(fmt)
        if off + size > len(blob):
            raise FramingError("truncated checkpoint")
        vals = struct.unpack_from(fmt, blob, off)
        off += size
        return vals

    magic, version, layer_count, input_dim, class_count, name_len = take("<4sHHIIH")
    if magic != MAGIC:
        raise FramingError(f"bad checkpoint magic {magic!r}")
    if version != VERSION:
        raise FramingError(f"unsupported checkpoint version {version}")
    name = blob[off : off + name_len].decode()
    off += name_len

    layers = []
    for _ in range(layer_count):
        (kind_len,) = take("<H")
        kind = blob[off : off + kind_len].decode()
        off += kind_len
        (config_len,) = take("<I")
        config = json.loads(blob[off : off + config_len].decode())
        off += config_len
        if kind not in LAYER_KINDS:
            raise FramingError(f"unknown layer kind {kind!r}")
        layer = LAYER_KINDS[kind](**config)
        (param_count,) = take("<H")
        if param_count != len(layer.params):
            raise FramingError(
                f"{kind}: {param_count} params in file, layer has {len(layer.params)}"
            )
        for p in layer.params:
            (ndim,) = take("<B")
            shape = take(f"<{ndim}I")
            count = int(np.prod(shape)) if ndim else 1
            size = count * 8
            if off + size > len(blob):
                raise FramingError("truncated checkpoint")
            values = np.frombuffer(blob, dtype="<f8", count=count, offset=off)
            off += size
            if tuple(shape) != p.shape:
                raise FramingError(f"{kind}: shape {shape} != expected {p.shape}")
            p[...] = values.reshape(shape)
        layers.append(layer)
    if off != len(blob):
        raise FramingError("trailing bytes in checkpoint")
    return NetworkModel(layers=layers, input_dim=input_dim, class_count=class_count, name=name)
