"""Seeded, splittable uniform random streams.

Every stream is identified by a ``(seed, stream_id)`` pair feeding a
counter-based Philox generator, so identical pairs reproduce identical
sequences and distinct pairs give statistically independent streams.
Child streams are derived by hashing, which keeps derivation stable
across processes and immune to creation order.
"""

from __future__ import annotations

import hashlib
import math

import numpy as np

_MASK64 = (1 << 64) - 1
_BUFFER = 8192


def derive_stream_id(seed: int, stream_id: int, tags: tuple) -> int:
    """Hash a parent stream identity plus tags into a new 64-bit stream id."""
    payload = repr((int(seed) & _MASK64, int(stream_id) & _MASK64, tags))
    digest = hashlib.sha256(payload.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


class RngStream:
    """Single-owner uniform source over the open interval (0, 1).

    Scalar draws are served from an internal buffer, so interleaving
    scalar and array requests is deterministic but the raw generator is
    consumed in blocks. One stream must not be shared across threads.
    """

    __slots__ = ("seed", "stream_id", "_gen", "_buf", "_pos")

    def __init__(self, seed: int, stream_id: int = 0):
        self.seed = int(seed) & _MASK64
        self.stream_id = int(stream_id) & _MASK64
        key = (self.seed << 64) | self.stream_id
        self._gen = np.random.Generator(np.random.Philox(key=key))
        self._buf = None
        self._pos = 0

    def child(self, *tags) -> "RngStream":
        """Derive an independent stream keyed by ``tags`` (ints or strings)."""
        return RngStream(self.seed, derive_stream_id(self.seed, self.stream_id, tags))

    def random(self) -> float:
        """One uniform draw from the open interval (0, 1)."""
        buf, pos = self._buf, self._pos
        while True:
            if buf is None or pos >= _BUFFER:
                buf = self._buf = self._gen.random(_BUFFER)
                pos = 0
            v = buf[pos]
            pos += 1
            if v > 0.0:
                self._pos = pos
                return float(v)

    def random_array(self, n: int) -> np.ndarray:
        """``n`` uniforms in (0, 1), consumed from the same logical stream."""
        out = np.empty(n, dtype=np.float64)
        filled = 0
        while filled < n:
            if self._buf is None or self._pos >= _BUFFER:
                self._buf = self._gen.random(_BUFFER)
                self._pos = 0
            take = min(n - filled, _BUFFER - self._pos)
            out[filled : filled + take] = self._buf[self._pos : self._pos + take]
            self._pos += take
            filled += take
        bad = out <= 0.0
        while bad.any():
            idx = np.flatnonzero(bad)
            for i in idx:
                out[i] = self.random()
            bad = out <= 0.0
        return out

    def exponential(self, rate: float) -> float:
        """Exponential variate with the given rate, by inverse transform."""
        return -math.log(self.random()) / rate

    def __repr__(self):
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id})"
