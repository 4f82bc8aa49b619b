"""
Checkpoint files.

Layout (little-endian):

    4 bytes   magic "CSRK"
    uint32    format version
    uint32    header length in bytes
    uint32    CRC32 of the header
    ...       JSON header (model config, parameter names/shapes, dtype, step, rng)
    uint32    CRC32 of the payload
    ...       float32 parameters concatenated in header order
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Optional, Union

import numpy as np
from pydantic import ValidationError

from src.core.errors import CheckpointError, ShapeError
from src.core.logging import get_logger
from src.models.network import SuperResolutionModel
from src.schemas.checkpoint import CheckpointHeader, ParameterSpec, SamplerState

logger = get_logger(__name__)

MAGIC = b"CSRK"
FORMAT_VERSION = 1
_PREAMBLE = struct.Struct("<4sIII")
_CRC = struct.Struct("<I")
_PAYLOAD_DTYPE = np.dtype("<f4")


@dataclass
class Checkpoint:
    header: CheckpointHeader
    state: Dict[str, np.ndarray]

    def to_bytes(self) -> bytes:
        header = self.header.model_dump_json().encode("utf-8")
        payload = b"".join(
            np.ascontiguousarray(self.state[spec.name], dtype=_PAYLOAD_DTYPE).tobytes()
            for spec in self.header.parameters
        )
        if len(payload) != self.header.payload_bytes:
            raise CheckpointError("parameter arrays do not match the header shapes")
        return b"".join(
            [
                _PREAMBLE.pack(MAGIC, FORMAT_VERSION, len(header), zlib.crc32(header)),
                header,
                _CRC.pack(zlib.crc32(payload)),
                payload,
            ]
        )

    @classmethod
    def from_bytes(cls, blob: bytes) -> "Checkpoint":
        if len(blob) < _PREAMBLE.size:
            raise CheckpointError("file too short to be a checkpoint")
        magic, version, header_len, header_crc = _PREAMBLE.unpack_from(blob, 0)
        if magic != MAGIC:
            raise CheckpointError(f"bad magic {magic!r}, expected {MAGIC!r}")
        if version != FORMAT_VERSION:
            raise CheckpointError(f"checkpoint format version {version} is not supported (expected {FORMAT_VERSION})")

        start = _PREAMBLE.size
        header_bytes = blob[start : start + header_len]
        if len(header_bytes) != header_len:
            raise CheckpointError("truncated header")
        if zlib.crc32(header_bytes) != header_crc:
            raise CheckpointError("header checksum mismatch")
        try:
            header = CheckpointHeader.model_validate_json(header_bytes)
        except ValidationError as exc:
            raise CheckpointError(f"malformed header: {exc}") from exc

        offset = start + header_len
        if len(blob) < offset + _CRC.size:
            raise CheckpointError("truncated payload")
        (payload_crc,) = _CRC.unpack_from(blob, offset)
        payload = blob[offset + _CRC.size :]
        if len(payload) != header.payload_bytes:
            raise CheckpointError(
                f"payload is {len(payload)} bytes, header describes {header.payload_bytes}"
            )
        if zlib.crc32(payload) != payload_crc:
            raise CheckpointError("payload checksum mismatch")

        flat = np.frombuffer(payload, dtype=_PAYLOAD_DTYPE)
        state: Dict[str, np.ndarray] = {}
        pos = 0
        for spec in header.parameters:
            state[spec.name] = flat[pos : pos + spec.numel].astype(np.float32).reshape(spec.shape)
            pos += spec.numel
        return cls(header=header, state=state)


def checkpoint_from_model(
    model: SuperResolutionModel,
    step: int = 0,
    rng: Optional[SamplerState] = None,
) -> Checkpoint:
    named = list(model.named_parameters())
    header = CheckpointHeader(
        model=model.cfg,
        parameters=[ParameterSpec(name=name, shape=list(p.shape)) for name, p in named],
        step=step,
        rng=rng or SamplerState(seed=model.seed),
    )
    return Checkpoint(header=header, state={name: p.data for name, p in named})


def write_checkpoint(path: Union[str, Path], checkpoint: Checkpoint) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(checkpoint.to_bytes())
    tmp.replace(path)
    logger.info(
        "Checkpoint written",
        path=str(path),
        step=checkpoint.header.step,
        parameters=checkpoint.header.parameter_count,
    )
    return path


def save_checkpoint(
    path: Union[str, Path],
    model: SuperResolutionModel,
    step: int = 0,
    rng: Optional[SamplerState] = None,
) -> Checkpoint:
    checkpoint = checkpoint_from_model(model, step, rng)
    write_checkpoint(path, checkpoint)
    return checkpoint


def load_checkpoint(path: Union[str, Path]) -> Checkpoint:
    path = Path(path)
    try:
        blob = path.read_bytes()
    except OSError as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc
    return Checkpoint.from_bytes(blob)


def build_model(checkpoint: Checkpoint) -> SuperResolutionModel:
    """Instantiate the network described by the header and load its weights."""
    model = SuperResolutionModel(checkpoint.header.model, seed=checkpoint.header.rng.seed)
    live = [(name, list(p.shape)) for name, p in model.named_parameters()]
    stored = [(spec.name, spec.shape) for spec in checkpoint.header.parameters]
    if live != stored:
        raise CheckpointError("checkpoint parameters do not match the model built from its config")
    try:
        model.load_state_dict(checkpoint.state)
    except ShapeError as exc:
        raise CheckpointError(str(exc)) from exc
    return model


def load_model(path: Union[str, Path]) -> SuperResolutionModel:
    return build_model(load_checkpoint(path))
