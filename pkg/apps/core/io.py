"""Portable mosaic ingestion: 16-bit binary PGM plus a key=value sidecar."""

import logging
from pathlib import Path
from typing import Union

import numpy as np

from .enums import CfaPattern
from .exceptions import MetaInvalid, ParseError
from .images import BayerMosaic, SensorMeta
from .mosaic import normalize_levels
from .validators import SensorMetaSerializer

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

PGM_MAGIC = b"P5"
SIDECAR_SUFFIX = ".meta"
SIDECAR_KEYS = ("cfa", "black_level", "white_level", "xyz_to_camrgb", "camera_id")


def sidecar_path(pgm_path: PathLike) -> Path:
    return Path(pgm_path).with_suffix(SIDECAR_SUFFIX)


def _header_tokens(blob: bytes, count: int) -> tuple[list[bytes], int]:
    """Read ``count`` whitespace-separated header tokens, skipping comments."""
    tokens: list[bytes] = []
    pos = 0
    while len(tokens) < count:
        while pos < len(blob) and blob[pos : pos + 1].isspace():
            pos += 1
        if pos >= len(blob):
            raise ParseError("truncated PGM header")
        if blob[pos : pos + 1] == b"#":
            end = blob.find(b"\n", pos)
            if end < 0:
                raise ParseError("truncated PGM header")
            pos = end + 1
            continue
        start = pos
        while pos < len(blob) and not blob[pos : pos + 1].isspace():
            pos += 1
        tokens.append(blob[start:pos])
    # exactly one whitespace byte separates the header from the raster
    return tokens, pos + 1


def read_pgm(path: PathLike) -> np.ndarray:
    """Read a binary (P5) PGM; 16-bit rasters are big-endian."""
    blob = Path(path).read_bytes()
    tokens, offset = _header_tokens(blob, 4)
    if tokens[0] != PGM_MAGIC:
        raise ParseError(f"{path}: not a binary PGM (magic {tokens[0]!r})")
    try:
        width, height, maxval = (int(token) for token in tokens[1:])
    except ValueError:
        raise ParseError(f"{path}: non-integer PGM header field")
    if width <= 0 or height <= 0 or not 0 < maxval < 65536:
        raise ParseError(f"{path}: invalid PGM header {width}x{height}/{maxval}")
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    expected = width * height * dtype.itemsize
    raster = blob[offset : offset + expected]
    if len(raster) != expected:
        raise ParseError(
            f"{path}: raster holds {len(raster)} bytes, expected {expected}"
        )
    return np.frombuffer(raster, dtype=dtype).reshape(height, width).astype(np.uint16)


def write_pgm(path: PathLike, raw: np.ndarray, maxval: int = 65535) -> None:
    """Write a 16-bit big-endian P5 PGM."""
    raw = np.asarray(raw)
    if raw.ndim != 2:
        raise ValueError(f"PGM raster must be 2-D, got {raw.shape}")
    height, width = raw.shape
    header = b"P5\n%d %d\n%d\n" % (width, height, maxval)
    Path(path).write_bytes(header + raw.astype(">u2").tobytes())


def parse_sidecar(text: str) -> dict[str, str]:
    """Parse key=value lines; blank lines and ``#`` comments are ignored."""
    fields: dict[str, str] = {}
    for number, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ParseError(f"expected key=value, got {line!r}", line_number=number)
        fields[key.strip()] = value.strip()
    return fields


def read_sidecar(path: PathLike) -> tuple[CfaPattern, SensorMeta]:
    """Read and validate a sidecar; errors name the offending key."""
    fields = parse_sidecar(Path(path).read_text())
    serializer = SensorMetaSerializer(data=fields)
    if not serializer.is_valid():
        problems = "; ".join(
            f"{key}: {' '.join(str(e) for e in errors)}"
            for key, errors in serializer.errors.items()
        )
        raise MetaInvalid(f"{path}: {problems}")
    return serializer.to_meta()


def format_sidecar(cfa: CfaPattern, meta: SensorMeta) -> str:
    values = {
        "cfa": CfaPattern(cfa).value,
        "black_level": " ".join(repr(float(v)) for v in meta.black_level),
        "white_level": repr(float(meta.white_level)),
        "xyz_to_camrgb": " ".join(repr(float(v)) for v in meta.xyz_to_camrgb.ravel()),
        "camera_id": meta.camera_id,
    }
    return "".join(f"{key}={values[key]}\n" for key in SIDECAR_KEYS)


def read_mosaic(pgm_path: PathLike) -> BayerMosaic:
    """Load a mosaic and its sidecar and normalize levels.

    The result keeps the sensor's native CFA phase; call crop_to_rggb
    before packing or demosaicing.
    """
    raw = read_pgm(pgm_path)
    cfa, meta = read_sidecar(sidecar_path(pgm_path))
    logger.debug(
        "Read %s: %dx%d %s camera=%s", pgm_path, *raw.shape, cfa, meta.camera_id
    )
    return normalize_levels(raw, meta, cfa)


def write_mosaic(
    pgm_path: PathLike, raw: np.ndarray, cfa: CfaPattern, meta: SensorMeta
) -> None:
    """Write raw counts and the matching sidecar."""
    write_pgm(pgm_path, raw)
    sidecar_path(pgm_path).write_text(format_sidecar(cfa, meta))
