"""Seeded uniform streams.

Every consumer reads one stream strictly left to right.  Streams are built
from PCG64 seeded with ``SeedSequence([seed, worker])`` so that independent
workers (or fixed-size chunks of a CLI run) get independent, reproducible
streams.
"""

from __future__ import annotations

import numpy as np

__all__ = ["UniformStream", "as_stream"]


class UniformStream:
    """Buffered stream of Unif(0, 1) draws; exact zeros are discarded."""

    def __init__(self, seed: int = 0, worker: int = 0, chunk: int = 4096, generator=None):
        if generator is None:
            generator = np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), int(worker)])))
        self.rng = generator
        self.chunk = int(chunk)
        self._buf = np.empty(0)
        self._pos = 0
        self.consumed = 0

    def _refill(self, need: int) -> None:
        rest = self._buf[self._pos:]
        parts = [rest]
        have = rest.size
        while have < need:
            fresh = self.rng.random(max(self.chunk, need - have))
            fresh = fresh[fresh > 0.0]
            parts.append(fresh)
            have += fresh.size
        self._buf = np.concatenate(parts)
        self._pos = 0

    def next(self) -> float:
        if self._pos >= self._buf.size:
            self._refill(1)
        v = self._buf[self._pos]
        self._pos += 1
        self.consumed += 1
        return float(v)

    __call__ = next

    def take(self, n: int) -> np.ndarray:
        """The next ``n`` uniforms as an array (consumed in order)."""
        n = int(n)
        if self._buf.size - self._pos < n:
            self._refill(n)
        out = self._buf[self._pos:self._pos + n].copy()
        self._pos += n
        self.consumed += n
        return out


def as_stream(rng) -> UniformStream:
    """Accept a UniformStream, an integer seed or a numpy Generator."""
    if isinstance(rng, UniformStream):
        return rng
    if isinstance(rng, np.random.Generator):
        return UniformStream(generator=rng)
    if rng is None or isinstance(rng, (int, np.integer)):
        return UniformStream(0 if rng is None else int(rng))
    raise TypeError(f"cannot build a uniform stream from {type(rng).__name__}")
