"""
Versioned checkpoint container.

A checkpoint is an uncompressed zip archive with a fixed timestamp on every
member, so that identical contents produce identical bytes:

    manifest.json        version, entry names/shapes, step_count, optimizer
                         scalars, extra array names, free-form metadata
    params/<name>.f8     raw little-endian float64 data per entry
    adam/<opt>/m/<name>  first moments, same encoding
    adam/<opt>/v/<name>  second moments
    extra/<name>.f8      additional arrays (PopArt statistics, ...)
"""
from __future__ import annotations

import io
import json
import zipfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Union

import numpy as np

from ndgrad.errors import CheckpointError
from ndgrad.optim import AdamState
from ndgrad.params import ParamTree
from utils.io import atomic_write_bytes

CHECKPOINT_VERSION = 1
_FIXED_DATE = (2020, 1, 1, 0, 0, 0)
_DTYPE = "<f8"


@dataclass
class Checkpoint:
    params: ParamTree
    optimizers: Dict[str, AdamState] = field(default_factory=dict)
    extra: Dict[str, np.ndarray] = field(default_factory=dict)
    metadata: Dict[str, Any] = field(default_factory=dict)


def _encode(array: np.ndarray) -> bytes:
    return np.ascontiguousarray(array, dtype=_DTYPE).tobytes()


def _decode(raw: bytes, shape) -> np.ndarray:
    expected = int(np.prod(shape, dtype=np.int64)) * 8
    if len(raw) != expected:
        raise CheckpointError(f"Entry of shape {tuple(shape)} has {len(raw)} bytes, expected {expected}")
    return np.frombuffer(raw, dtype=_DTYPE).reshape(shape).astype(np.float64)


def _member(archive: zipfile.ZipFile, name: str, data: bytes) -> None:
    info = zipfile.ZipInfo(name, date_time=_FIXED_DATE)
    info.compress_type = zipfile.ZIP_STORED
    info.external_attr = 0o644 << 16
    archive.writestr(info, data)


def dumps(checkpoint: Checkpoint) -> bytes:
    params = checkpoint.params
    manifest = {
        "version": CHECKPOINT_VERSION,
        "step_count": params.step_count,
        "entries": [{"name": n, "shape": list(params.value(n).shape)} for n in params],
        "optimizers": {
            key: {
                "names": state.names,
                "lr": state.lr,
                "beta1": state.beta1,
                "beta2": state.beta2,
                "eps": state.eps,
                "weight_decay": state.weight_decay,
                "step": state.step,
            }
            for key, state in checkpoint.optimizers.items()
        },
        "extra": {k: list(np.shape(v)) for k, v in checkpoint.extra.items()},
        "metadata": checkpoint.metadata,
    }
    buffer = io.BytesIO()
    with zipfile.ZipFile(buffer, "w", zipfile.ZIP_STORED) as archive:
        _member(archive, "manifest.json", json.dumps(manifest, sort_keys=True, indent=2).encode("utf-8"))
        for name in params:
            _member(archive, f"params/{name}.f8", _encode(params.value(name)))
        for key, state in checkpoint.optimizers.items():
            for name in state.names:
                _member(archive, f"adam/{key}/m/{name}.f8", _encode(state.m[name]))
                _member(archive, f"adam/{key}/v/{name}.f8", _encode(state.v[name]))
        for key, array in checkpoint.extra.items():
            _member(archive, f"extra/{key}.f8", _encode(np.asarray(array)))
    return buffer.getvalue()


def save(path: Union[str, Path], checkpoint: Checkpoint) -> Path:
    """Writes ``checkpoint`` to ``path`` atomically and returns the path."""
    return atomic_write_bytes(Path(path), dumps(checkpoint))


def loads(data: bytes) -> Checkpoint:
    try:
        archive = zipfile.ZipFile(io.BytesIO(data))
    except zipfile.BadZipFile as e:
        raise CheckpointError(f"Not a checkpoint container: {e}") from e
    with archive:
        try:
            manifest = json.loads(archive.read("manifest.json").decode("utf-8"))
        except KeyError:
            raise CheckpointError("Checkpoint has no manifest.json") from None
        version = manifest.get("version")
        if version != CHECKPOINT_VERSION:
            raise CheckpointError(f"Unsupported checkpoint version {version!r}")

        def read(member: str, shape) -> np.ndarray:
            try:
                return _decode(archive.read(member), shape)
            except KeyError:
                raise CheckpointError(f"Checkpoint is missing '{member}'") from None

        params = ParamTree()
        shapes = {}
        for entry in manifest["entries"]:
            shapes[entry["name"]] = tuple(entry["shape"])
            params.add(entry["name"], read(f"params/{entry['name']}.f8", entry["shape"]))
        params.step_count = int(manifest["step_count"])

        optimizers = {}
        for key, spec in manifest["optimizers"].items():
            state = AdamState(
                names=list(spec["names"]),
                lr=spec["lr"],
                beta1=spec["beta1"],
                beta2=spec["beta2"],
                eps=spec["eps"],
                weight_decay=spec["weight_decay"],
                step=int(spec["step"]),
            )
            for name in state.names:
                state.m[name] = read(f"adam/{key}/m/{name}.f8", shapes[name])
                state.v[name] = read(f"adam/{key}/v/{name}.f8", shapes[name])
            optimizers[key] = state

        extra = {key: read(f"extra/{key}.f8", shape) for key, shape in manifest["extra"].items()}
    return Checkpoint(params, optimizers, extra, manifest.get("metadata", {}))


def load(path: Union[str, Path]) -> Checkpoint:
    path = Path(path)
    if not path.is_file():
        raise CheckpointError(f"Checkpoint file not found: {path}")
    return loads(path.read_bytes())

