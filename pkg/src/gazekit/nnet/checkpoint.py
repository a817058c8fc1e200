"""Checkpoint container: JSON header + raw little-endian float64 blobs.

Layout: magic "GZK1", 8-byte big-endian header length, UTF-8 JSON header,
then every block's C-order bytes in header order. Load/save round-trips
bit-exactly and the bytes are a pure function of the network state, so
identical runs produce identical files.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .layers import LAYER_KINDS
from .model import Network

MAGIC = b"GZK1"
FORMAT_VERSION = 1


class CheckpointError(ValueError):
    pass


def save_checkpoint(path: str | Path, net: Network, metadata: dict | None = None) -> None:
    blocks = []
    blobs = []
    for i, layer in enumerate(net.layers):
        for role, group in (("param", layer.params()), ("buffer", layer.buffers())):
            for name, arr in group.items():
                arr = np.ascontiguousarray(arr, dtype=np.float64)
                blocks.append(
                    {
                        "layer": i,
                        "name": name,
                        "role": role,
                        "shape": list(arr.shape),
                    }
                )
                blobs.append(arr.tobytes())
    header = {
        "format": FORMAT_VERSION,
        "layers": [
            {"kind": layer.kind, "frozen": layer.frozen, "spec": layer.spec()}
            for layer in net.layers
        ],
        "latent_index": net.latent_index,
        "blocks": blocks,
        "metadata": metadata or {},
    }
    header_bytes = json.dumps(header, sort_keys=True, separators=(",", ":")).encode()
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack(">Q", len(header_bytes)))
        fh.write(header_bytes)
        for blob in blobs:
            fh.write(blob)


def load_checkpoint(path: str | Path) -> tuple[Network, dict]:
    raw = Path(path).read_bytes()
    if raw[:4] != MAGIC:
        raise CheckpointError(f"not a checkpoint file: {path}")
    (header_len,) = struct.unpack(">Q", raw[4:12])
    header = json.loads(raw[12 : 12 + header_len].decode())
    if header.get("format") != FORMAT_VERSION:
        raise CheckpointError(f"unsupported checkpoint format {header.get('format')}")

    layers = []
    for entry in header["layers"]:
        cls = LAYER_KINDS.get(entry["kind"])
        if cls is None:
            raise CheckpointError(f"unknown layer kind {entry['kind']!r}")
        layer = cls(**entry["spec"])
        layer.frozen = bool(entry["frozen"])
        layers.append(layer)
    net = Network(layers, header["latent_index"])

    offset = 12 + header_len
    for block in header["blocks"]:
        shape = tuple(block["shape"])
        nbytes = int(np.prod(shape, dtype=np.int64)) * 8 if shape else 8
        arr = np.frombuffer(raw[offset : offset + nbytes], dtype="<f8").reshape(shape)
        offset += nbytes
        layer = net.layers[block["layer"]]
        target = layer.params() if block["role"] == "param" else layer.buffers()
        if block["name"] not in target:
            raise CheckpointError(
                f"layer {block['layer']} has no {block['role']} {block['name']!r}"
            )
        target[block["name"]][...] = arr
    if offset != len(raw):
        raise CheckpointError("trailing bytes in checkpoint")
    return net, header["metadata"]
