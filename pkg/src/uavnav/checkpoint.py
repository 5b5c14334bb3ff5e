"""Checkpoint format: manifest.json + weights.bin.

The manifest is an ordered list of {name, shape, dtype:"f32"}; weights.bin is
the concatenation of each tensor's values as little-endian float32 in manifest
order. Round-trip through this format is bit-exact for float32 parameters.
"""

from __future__ import annotations

import json
import os

import numpy as np

MANIFEST_NAME = "manifest.json"
WEIGHTS_NAME = "weights.bin"


class CheckpointError(Exception):
    pass


class ManifestMismatchError(CheckpointError):
    """Blob length does not match the shapes promised by the manifest."""


class UnknownDtypeError(CheckpointError):
    pass


def save_checkpoint(tensors, path: str) -> None:
    """tensors: iterable of objects with .name, .shape, .values."""
    os.makedirs(path, exist_ok=True)
    manifest = []
    blobs = []
    for p in tensors:
        manifest.append({"name": p.name, "shape": list(p.shape),
                         "dtype": "f32"})
        blobs.append(np.ascontiguousarray(p.values,
                                          dtype="<f4").tobytes())
    with open(os.path.join(path, MANIFEST_NAME), "w") as f:
        json.dump(manifest, f, indent=1)
    with open(os.path.join(path, WEIGHTS_NAME), "wb") as f:
        f.write(b"".join(blobs))


def load_checkpoint(path: str) -> dict[str, np.ndarray]:
    """Returns an ordered {name: float32 array} mapping."""
    manifest_path = os.path.join(path, MANIFEST_NAME)
    weights_path = os.path.join(path, WEIGHTS_NAME)
    if not os.path.isfile(manifest_path):
        raise FileNotFoundError(f"missing checkpoint manifest: {manifest_path}")
    if not os.path.isfile(weights_path):
        raise FileNotFoundError(f"missing checkpoint weights: {weights_path}")
    with open(manifest_path) as f:
        manifest = json.load(f)
    blob = open(weights_path, "rb").read()

    out: dict[str, np.ndarray] = {}
    offset = 0
    for entry in manifest:
        if entry.get("dtype") != "f32":
            raise UnknownDtypeError(
                f"tensor {entry.get('name')!r}: unknown dtype "
                f"{entry.get('dtype')!r}")
        shape = tuple(entry["shape"])
        n = int(np.prod(shape)) if shape else 1
        nbytes = 4 * n
        if offset + nbytes > len(blob):
            raise ManifestMismatchError(
                f"tensor {entry['name']!r}: needs {nbytes} bytes at offset "
                f"{offset}, but only {len(blob) - offset} remain")
        values = np.frombuffer(blob, dtype="<f4", count=n, offset=offset)
        out[entry["name"]] = values.reshape(shape).copy()
        offset += nbytes
    if offset != len(blob):
        raise ManifestMismatchError(
            f"{len(blob) - offset} trailing bytes not covered by the manifest")
    return out


def restore_network(net, values: dict[str, np.ndarray]) -> None:
    """Copy loaded arrays into a network's parameters by tensor name."""
    for p in net.tensors():
        if p.name not in values:
            raise ManifestMismatchError(f"checkpoint lacks tensor {p.name!r}")
        v = values[p.name]
        if tuple(v.shape) != tuple(p.shape):
            raise ManifestMismatchError(
                f"tensor {p.name!r}: checkpoint shape {tuple(v.shape)} != "
                f"network shape {tuple(p.shape)}")
        p.values[...] = v.astype(p.values.dtype)
