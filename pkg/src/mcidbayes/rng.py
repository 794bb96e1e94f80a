"""Reproducible random streams.

Every stochastic routine in this package draws from a ``numpy.random.Generator``
backed by the PCG64 engine, keyed by a :class:`RngStream`.  A stream is
identified by a 64-bit seed plus a path of integer stream ids; the path is
fed to ``numpy.random.SeedSequence`` as the spawn key, which makes the
generator splittable: the same ``(seed, path)`` pair produces the identical
draw sequence on every platform and regardless of thread/process scheduling,
and distinct paths give statistically independent streams.

Nested experiments derive their streams hierarchically, e.g. replicate ``r``
of a simulation uses ``RngStream(seed).child(r)``, bootstrap chain ``b`` inside
calibration iteration ``t`` uses ``...child(t).child(b)``.  Streams with
different paths are statistically independent.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["RngStream", "as_generator"]


@dataclass(frozen=True)
class RngStream:
    """A deterministic, splittable random stream keyed by (seed, path)."""

    seed: int
    path: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if not all(isinstance(p, (int, np.integer)) and p >= 0 for p in self.path):
            raise ValueError(f"stream path must be nonnegative integers, got {self.path}")

    def child(self, *ids: int) -> "RngStream":
        """Derive a sub-stream by extending the path."""
        return RngStream(self.seed, self.path + tuple(int(i) for i in ids))

    def generator(self) -> np.random.Generator:
        """Materialize a fresh generator positioned at the start of the stream."""
        ss = np.random.SeedSequence(self.seed, spawn_key=self.path)
        return np.random.Generator(np.random.PCG64(ss))


def as_generator(rng: "RngStream | np.random.Generator") -> np.random.Generator:
    """Accept either a stream (fresh generator) or an already-threaded generator."""
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    raise TypeError(f"expected RngStream or numpy Generator, got {type(rng).__name__}")
