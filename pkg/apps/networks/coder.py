"""Byte-oriented range coder for quantized latents.

A carry-propagating range coder with a 64-bit low register: bytes are
emitted from the top of ``low``; a run of pending 0xff bytes is tracked
in ``cnt`` and resolved when a carry (or its absence) becomes known.
Frequencies come from ``EntropyModel.quantized_cdf``.
"""

import logging
import struct
from bisect import bisect_right
from collections.abc import Sequence
from math import prod

import numpy as np

from apps.core.exceptions import ParseError, ShapeMismatch, SymbolOutOfRange

from .entropy import SYMBOL_MAX, SYMBOL_MIN, EntropyModel

logger = logging.getLogger(__name__)

MAX_RANGE = 1 << 64
MIN_RANGE = 1 << 56
MASK = MAX_RANGE - 1
SHIFT = 56
LOW_BYTES = 8

_COUNT_HEADER = struct.Struct(">I")


class RangeEncoder:
    def __init__(self):
        self.low = 0
        self.range = MAX_RANGE
        self.buff = 0
        self.cnt = 0
        self.out = bytearray()

    def _normalize(self):
        if self.low >= MAX_RANGE:
            # carry into the buffered byte; pending 0xff bytes become 0x00
            self.buff += 1
            self.low &= MASK
            if self.cnt > 0:
                self.out.append(self.buff)
                self.out.extend(b"\x00" * (self.cnt - 1))
                self.buff = 0
                self.cnt = 0
        while self.range < MIN_RANGE:
            if self.low < (0xFF << SHIFT):
                self.out.append(self.buff)
                self.out.extend(b"\xff" * self.cnt)
                self.buff = (self.low >> SHIFT) & 0xFF
                self.cnt = 0
            else:
                self.cnt += 1
            self.low = (self.low << 8) & MASK
            self.range <<= 8

    def encode(self, start: int, freq: int, total: int) -> None:
        """Narrow the interval to ``[start, start + freq) / total``."""
        temp = self.range // total
        self.low += start * temp
        self.range = freq * temp
        self._normalize()

    def finish(self) -> bytes:
        fill = 0xFF
        if self.low >= MAX_RANGE:
            self.buff += 1
            fill = 0
        self.out.append(self.buff)
        self.out.extend(bytes([fill]) * self.cnt)
        self.out.extend((self.low & MASK).to_bytes(LOW_BYTES, "big"))
        return bytes(self.out)


class RangeDecoder:
    def __init__(self, data: bytes, offset: int = 0):
        self.data = data
        # the first byte is the encoder's initial (always zero) buffer
        self.pos = offset + 1
        self.range = MAX_RANGE
        self.low = 0
        for _ in range(LOW_BYTES):
            self.low = (self.low << 8) + self._next_byte()

    def _next_byte(self) -> int:
        if self.pos < len(self.data):
            value = self.data[self.pos]
            self.pos += 1
            return value
        return 0

    def _normalize(self):
        while self.range < MIN_RANGE:
            self.range <<= 8
            self.low = ((self.low << 8) + self._next_byte()) & MASK

    def decode(self, cumulative: Sequence[int]) -> int:
        """Return the index ``i`` with ``cumulative[i] <= target < cumulative[i+1]``."""
        total = cumulative[-1]
        temp = self.range // total
        target = min(self.low // temp, total - 1)
        symbol = bisect_right(cumulative, target) - 1
        self.low -= temp * cumulative[symbol]
        self.range = temp * (cumulative[symbol + 1] - cumulative[symbol])
        self._normalize()
        return symbol


def _channel_indices(shape: Sequence[int], channels: int) -> np.ndarray:
    """Channel of every element of a C-ordered array with channel axis -3."""
    shape = tuple(shape)
    if len(shape) < 3:
        if channels != 1:
            raise ShapeMismatch(
                f"shape {shape} has no channel axis for a {channels}-channel model"
            )
        return np.zeros(prod(shape), dtype=np.int64)
    if shape[-3] != channels:
        raise ShapeMismatch(
            f"latent channels {shape[-3]} != entropy model channels {channels}"
        )
    index = np.arange(channels, dtype=np.int64).reshape(channels, 1, 1)
    return np.broadcast_to(index, shape).reshape(-1)


def range_encode(symbols: np.ndarray, model: EntropyModel) -> bytes:
    """Encode integer latents; the stream starts with a 4-byte symbol count."""
    symbols = np.asarray(symbols)
    flat = symbols.reshape(-1).astype(np.int64)
    if flat.size and (flat.min() < SYMBOL_MIN or flat.max() > SYMBOL_MAX):
        raise SymbolOutOfRange(
            f"symbols span [{flat.min()}, {flat.max()}], "
            f"representable range is [{SYMBOL_MIN}, {SYMBOL_MAX}]"
        )
    header = _COUNT_HEADER.pack(flat.size)
    if not flat.size:
        return header
    cdf = model.quantized_cdf()
    channels = _channel_indices(symbols.shape, model.channels)
    index = flat - SYMBOL_MIN
    starts = cdf[channels, index].tolist()
    freqs = (cdf[channels, index + 1] - cdf[channels, index]).tolist()
    total = int(cdf[0, -1])

    encoder = RangeEncoder()
    for start, freq in zip(starts, freqs):
        encoder.encode(start, freq, total)
    payload = encoder.finish()
    logger.debug("Encoded %d symbols into %d bytes", flat.size, len(payload))
    return header + payload


def range_decode(data: bytes, model: EntropyModel, shape: Sequence[int]) -> np.ndarray:
    """Decode ``prod(shape)`` symbols written by ``range_encode``."""
    if len(data) < _COUNT_HEADER.size:
        raise ParseError("bitstream shorter than its symbol-count header")
    (count,) = _COUNT_HEADER.unpack_from(data)
    if count != prod(shape):
        raise ShapeMismatch(f"bitstream holds {count} symbols, shape {tuple(shape)}")
    if not count:
        return np.zeros(tuple(shape), dtype=np.int64)
    tables = model.quantized_cdf().tolist()
    channels = _channel_indices(shape, model.channels).tolist()

    decoder = RangeDecoder(data, offset=_COUNT_HEADER.size)
    out = [decoder.decode(tables[channel]) for channel in channels]
    return (np.asarray(out, dtype=np.int64) + SYMBOL_MIN).reshape(tuple(shape))
