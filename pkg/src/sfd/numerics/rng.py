"""Counter-based random streams.

Draw ``i`` of the stream keyed by ``seed`` is ``splitmix64(seed + i * golden)``,
so the full state is the pair ``(seed, counter)`` and any stream can be
re-entered or forked without replaying earlier draws. Normals are Box-Muller
pairs over consecutive uniforms.
"""
from __future__ import annotations

import numpy as np

from .. import kernels

_MASK64 = (1 << 64) - 1


class Rng:
    __slots__ = ("seed", "counter")

    def __init__(self, seed: int, counter: int = 0):
        if not 0 <= int(seed) <= _MASK64:
            raise ValueError(f"seed must fit in 64 bits, got {seed}")
        self.seed = int(seed)
        self.counter = int(counter)

    def __repr__(self) -> str:
        return f"Rng(seed={self.seed}, counter={self.counter})"

    def state(self) -> tuple[int, int]:
        return self.seed, self.counter

    @classmethod
    def from_state(cls, state: tuple[int, int]) -> "Rng":
        return cls(*state)

    def fork(self, *keys: int) -> "Rng":
        """Independent child stream derived from this seed and ``keys``.

        Does not advance the parent; the same keys always give the same child.
        """
        s = kernels.mix64(self.seed ^ 0x5851F42D4C957F2D)
        for k in keys:
            s = kernels.mix64((s + kernels.mix64((int(k) + 0x632BE59BD9B4E019) & _MASK64)) & _MASK64)
        return Rng(s)

    def _take(self, n: int) -> int:
        start = self.counter
        self.counter += n
        if self.counter > _MASK64:
            raise OverflowError("random stream exhausted")
        return start

    def uniform(self, shape=(), low: float = 0.0, high: float = 1.0) -> np.ndarray | float:
        n = int(np.prod(shape, dtype=np.int64))
        u = kernels.uniform(self.seed, self._take(n), n)
        if low != 0.0 or high != 1.0:
            u = low + (high - low) * u
        return float(u[0]) if shape == () else u.reshape(shape)

    def normal(self, shape=()) -> np.ndarray | float:
        n = int(np.prod(shape, dtype=np.int64))
        pairs = (n + 1) // 2
        z = kernels.normal(self.seed, self._take(2 * pairs), n)
        return float(z[0]) if shape == () else z.reshape(shape)

    def integers(self, high: int, shape=()) -> np.ndarray | int:
        """Uniform integers in ``[0, high)``."""
        u = self.uniform(shape)
        k = np.minimum(np.floor(np.asarray(u) * high).astype(np.int64), high - 1)
        return int(k) if shape == () else k

    def permutation(self, n: int) -> np.ndarray:
        keys = self.uniform((n,))
        return np.argsort(keys, kind="stable")
