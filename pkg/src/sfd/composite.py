"""Frozen feature extractor, identity texture channel, and composite latents."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError
from .numerics import Rng


@dataclass(frozen=True)
class FoundationEncoder:
    """Fixed random tanh feature map ``x -> tanh(x @ W + b)``.

    Stands in for a frozen pretrained vision encoder: deterministic, never
    trained, and deliberately wider than the data so that compressing it is a
    real task.
    """

    weight: np.ndarray  # (D, C_in)
    bias: np.ndarray  # (C_in,)
    seed: int

    @classmethod
    def create(cls, data_dim: int, width: int = 64, seed: int = 1234, scale: float = 0.6) -> "FoundationEncoder":
        rng = Rng(seed)
        w = np.asarray(rng.normal((data_dim, width))) * (scale / math.sqrt(data_dim))
        b = np.asarray(rng.uniform((width,), -1.0, 1.0))
        w.setflags(write=False)
        b.setflags(write=False)
        return cls(w, b, seed)

    @property
    def data_dim(self) -> int:
        return self.weight.shape[0]

    @property
    def width(self) -> int:
        return self.weight.shape[1]

    def lipschitz_bound(self) -> float:
        return float(np.linalg.norm(self.weight, 2))


def foundation_features(enc: FoundationEncoder, x1) -> np.ndarray:
    x1 = np.asarray(x1, dtype=np.float64)
    if x1.shape[-1] != enc.data_dim:
        raise DimensionError(f"foundation encoder expects width {enc.data_dim}, got {x1.shape[-1]}")
    return np.tanh(x1 @ enc.weight + enc.bias)


def texture_encode(x1) -> np.ndarray:
    """The texture channel is the data point itself (C_z = D)."""
    return np.array(x1, dtype=np.float64, copy=True)


def texture_decode(z1) -> np.ndarray:
    return np.array(z1, dtype=np.float64, copy=True)


@dataclass(frozen=True)
class CompositeLatent:
    s: np.ndarray
    z: np.ndarray

    @property
    def split(self) -> int:
        return self.s.shape[-1]

    @property
    def width(self) -> int:
        return self.s.shape[-1] + self.z.shape[-1]

    @property
    def data(self) -> np.ndarray:
        return np.concatenate([self.s, self.z], axis=-1)


def make_composite(s1, z1) -> CompositeLatent:
    s1 = np.asarray(s1, dtype=np.float64)
    z1 = np.asarray(z1, dtype=np.float64)
    if s1.shape[:-1] != z1.shape[:-1]:
        raise DimensionError(f"semantic and texture blocks disagree on leading shape: {s1.shape} vs {z1.shape}")
    return CompositeLatent(s1, z1)


def split_composite(c, split: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Inverse of :func:`make_composite`; ``split`` is needed for raw arrays."""
    if isinstance(c, CompositeLatent):
        return c.s, c.z
    c = np.asarray(c, dtype=np.float64)
    if split is None or not 0 <= split <= c.shape[-1]:
        raise DimensionError(f"invalid split {split} for width {c.shape[-1]}")
    return c[..., :split].copy(), c[..., split:].copy()
