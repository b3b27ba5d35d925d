"""Binary parameter checkpoints.

Layout: 8-byte little-endian header length, UTF-8 JSON header, then every
parameter as contiguous little-endian float64 values. The header lists
``{name, shape, offset, frozen}`` per parameter, with offsets counted in
bytes from the start of the payload.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import numpy as np
import structlog

from core.exceptions import CheckpointError
from core.interfaces import ParameterModule
from utils.helpers import atomic_write_bytes

logger = structlog.get_logger(__name__)

FORMAT_VERSION = 1
_LEN = struct.Struct("<Q")
_DTYPE = np.dtype("<f8")


@dataclass
class Checkpoint:
    parameters: dict[str, np.ndarray]
    config_fingerprint: str = ""
    frozen: set[str] = field(default_factory=set)
    metadata: dict[str, Any] = field(default_factory=dict)


def checkpoint_from_module(
    module: ParameterModule, config_fingerprint: str, metadata: Mapping[str, Any] | None = None
) -> Checkpoint:
    parameters: dict[str, np.ndarray] = {}
    frozen: set[str] = set()
    for params in module.parameter_sets():
        for name, tensor in params.named_parameters():
            parameters[name] = tensor.data.copy()
            if params.frozen:
                frozen.add(name)
    return Checkpoint(parameters, config_fingerprint, frozen, dict(metadata or {}))


def encode_checkpoint(ckpt: Checkpoint) -> bytes:
    entries = []
    chunks = []
    offset = 0
    for name, values in ckpt.parameters.items():
        data = np.ascontiguousarray(values, dtype=_DTYPE)
        entries.append(
            {"name": name, "shape": list(data.shape), "offset": offset, "frozen": name in ckpt.frozen}
        )
        chunks.append(data.tobytes())
        offset += data.nbytes
    header = {
        "format_version": FORMAT_VERSION,
        "config_fingerprint": ckpt.config_fingerprint,
        "metadata": ckpt.metadata,
        "parameters": entries,
        "payload_bytes": offset,
    }
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    return _LEN.pack(len(header_bytes)) + header_bytes + b"".join(chunks)


def decode_checkpoint(blob: bytes, source: str = "<bytes>") -> Checkpoint:
    if len(blob) < _LEN.size:
        raise CheckpointError(f"{source}: truncated checkpoint (no header length)")
    (header_len,) = _LEN.unpack_from(blob)
    start = _LEN.size + header_len
    if start > len(blob):
        raise CheckpointError(f"{source}: truncated checkpoint header")
    try:
        header = json.loads(blob[_LEN.size : start].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise CheckpointError(f"{source}: corrupt checkpoint header") from e
    if not isinstance(header, dict):
        raise CheckpointError(f"{source}: corrupt checkpoint header")

    version = header.get("format_version")
    if version != FORMAT_VERSION:
        raise CheckpointError(
            f"{source}: checkpoint format version {version!r}, expected {FORMAT_VERSION}"
        )
    payload = memoryview(blob)[start:]
    parameters: dict[str, np.ndarray] = {}
    frozen: set[str] = set()
    expected = 0
    try:
        for entry in header["parameters"]:
            name, shape, offset = entry["name"], tuple(entry["shape"]), int(entry["offset"])
            count = int(np.prod(shape, dtype=np.int64))
            end = offset + count * _DTYPE.itemsize
            if offset != expected or end > len(payload):
                raise CheckpointError(
                    f"{source}: payload does not match header at parameter {name} "
                    f"(offset {offset}, need {end} bytes, have {len(payload)})"
                )
            parameters[name] = np.frombuffer(payload[offset:end], dtype=_DTYPE).reshape(shape).astype(np.float64)
            if entry.get("frozen"):
                frozen.add(name)
            expected = end
    except (KeyError, TypeError, ValueError) as e:
        raise CheckpointError(f"{source}: corrupt parameter list ({e})") from e
    if expected != len(payload):
        raise CheckpointError(f"{source}: {len(payload) - expected} trailing payload bytes")
    return Checkpoint(
        parameters=parameters,
        config_fingerprint=str(header.get("config_fingerprint", "")),
        frozen=frozen,
        metadata=dict(header.get("metadata") or {}),
    )


def save_checkpoint(ckpt: Checkpoint, path: Path | str) -> Path:
    out = atomic_write_bytes(path, encode_checkpoint(ckpt))
    logger.info("checkpoint_saved", path=str(out), parameters=len(ckpt.parameters))
    return out


def load_checkpoint(path: Path | str, expected_fingerprint: str | None = None) -> tuple[Checkpoint, list[str]]:
    """Reads a checkpoint; returns it with any warnings worth recording in reports."""
    path = Path(path)
    if not path.is_file():
        raise CheckpointError(f"checkpoint not found: {path}")
    ckpt = decode_checkpoint(path.read_bytes(), str(path))
    warnings: list[str] = []
    if expected_fingerprint is not None and ckpt.config_fingerprint != expected_fingerprint:
        warnings.append(
            f"{path}: saved with config {ckpt.config_fingerprint[:12]}, "
            f"current config is {expected_fingerprint[:12]}"
        )
        logger.warning(
            "checkpoint_fingerprint_mismatch",
            path=str(path),
            saved=ckpt.config_fingerprint[:12],
            current=expected_fingerprint[:12],
        )
    return ckpt, warnings
