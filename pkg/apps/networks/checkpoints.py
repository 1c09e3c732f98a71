"""Versioned binary checkpoints.

Layout (little-endian)::

    b"RNIPCKPT"  u32 version
    u32 config length, config JSON (utf-8)
    u32 tensor count, then per tensor: u16 name length, name,
        u8 ndim, ndim x u32 dims
    float32 data of every tensor, in table order
"""

import json
import logging
import struct
from pathlib import Path
from typing import Union

import numpy as np
import torch

from apps.core.exceptions import CheckpointFormatError, MissingCheckpoint

from .configs import TrainingConfig
from .serializers import training_config_from_dict
from .training import build_model

logger = logging.getLogger(__name__)

MAGIC = b"RNIPCKPT"
VERSION = 1

_HEADER = struct.Struct("<8sI")
_U32 = struct.Struct("<I")
_U16 = struct.Struct("<H")
_U8 = struct.Struct("<B")


def save_checkpoint(
    path: Union[str, Path],
    model: torch.nn.Module,
    config: TrainingConfig,
    step: int = 0,
) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    state = model.state_dict()
    echo = json.dumps({"config": config.to_dict(), "step": step}, sort_keys=True)
    echo_bytes = echo.encode()

    parts = [_HEADER.pack(MAGIC, VERSION), _U32.pack(len(echo_bytes)), echo_bytes]
    parts.append(_U32.pack(len(state)))
    for name, tensor in state.items():
        encoded = name.encode()
        parts += [_U16.pack(len(encoded)), encoded, _U8.pack(tensor.dim())]
        parts += [_U32.pack(dim) for dim in tensor.shape]
    for tensor in state.values():
        array = tensor.detach().cpu().numpy()
        parts.append(np.ascontiguousarray(array, dtype="<f4").tobytes())
    path.write_bytes(b"".join(parts))
    logger.info("Saved checkpoint %s (%d tensors, step %d)", path, len(state), step)
    return path


class _Reader:
    def __init__(self, blob: bytes, path: Path):
        self.blob = blob
        self.pos = 0
        self.path = path

    def take(self, size: int) -> bytes:
        if self.pos + size > len(self.blob):
            raise CheckpointFormatError(f"{self.path}: truncated checkpoint")
        chunk = self.blob[self.pos : self.pos + size]
        self.pos += size
        return chunk

    def unpack(self, fmt: struct.Struct):
        return fmt.unpack(self.take(fmt.size))


def read_checkpoint(path: Union[str, Path]) -> tuple[TrainingConfig, int, dict]:
    """Return (config, step, state dict of float32 tensors)."""
    path = Path(path)
    if not path.is_file():
        raise MissingCheckpoint(f"no checkpoint at {path}")
    reader = _Reader(path.read_bytes(), path)
    magic, version = reader.unpack(_HEADER)
    if magic != MAGIC:
        raise CheckpointFormatError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise CheckpointFormatError(f"{path}: unsupported version {version}")
    (length,) = reader.unpack(_U32)
    try:
        echo = json.loads(reader.take(length).decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointFormatError(f"{path}: unreadable config: {exc}")
    config = training_config_from_dict(echo["config"])

    (count,) = reader.unpack(_U32)
    table = []
    for _ in range(count):
        (name_length,) = reader.unpack(_U16)
        name = reader.take(name_length).decode()
        (ndim,) = reader.unpack(_U8)
        shape = tuple(reader.unpack(_U32)[0] for _ in range(ndim))
        table.append((name, shape))
    state = {}
    for name, shape in table:
        size = int(np.prod(shape, dtype=np.int64)) * 4
        array = np.frombuffer(reader.take(size), dtype="<f4").reshape(shape)
        state[name] = torch.from_numpy(array.astype(np.float32))
    if reader.pos != len(reader.blob):
        raise CheckpointFormatError(f"{path}: trailing bytes after tensor data")
    return config, int(echo.get("step", 0)), state


def load_model(path: Union[str, Path]) -> tuple[torch.nn.Module, TrainingConfig]:
    """Rebuild the model a checkpoint was saved from."""
    config, step, state = read_checkpoint(path)
    model = build_model(config.model_config())
    try:
        model.load_state_dict(state)
    except RuntimeError as exc:
        raise CheckpointFormatError(f"{path}: parameters do not match config: {exc}")
    logger.info("Loaded %s (%s, step %d)", path, config.label, step)
    return model, config
