"""Toy mixture dataset and its text file format.

Component ``k`` sits at angle ``2*pi*k/K`` on a circle of radius ``R``. Points
spread along the radial direction, with a narrow tangential spread plus a
sinusoidal tangential wiggle of the radial offset: the component is the coarse
"semantic" content, the wiggle the fine "texture".
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ContractError, DependencyError
from .numerics import Rng

HEADER_TAG = "sfd-dataset"


@dataclass(frozen=True)
class DataConfig:
    dim: int = 2
    components: int = 8
    radius: float = 4.0
    radial_std: float = 0.5
    tangent_std: float = 0.05
    texture_amplitude: float = 0.1
    texture_period: float = 0.5
    extra_std: float = 0.1
    n_train: int = 10000
    n_test: int = 2000

    def __post_init__(self):
        if self.dim < 2 or self.components < 1:
            raise ContractError("need dim >= 2 and components >= 1")
        if self.n_train < 1 or self.n_test < 0:
            raise ContractError("n_train must be positive and n_test non-negative")
        if min(self.radius, self.radial_std, self.tangent_std, self.extra_std, self.texture_amplitude) < 0:
            raise ContractError("radius, spreads and amplitude must be non-negative")
        if self.texture_period <= 0:
            raise ContractError("texture_period must be positive")


@dataclass
class ToyDataset:
    dim: int
    components: int
    x_train: np.ndarray
    y_train: np.ndarray
    x_test: np.ndarray
    y_test: np.ndarray

    @property
    def n_train(self) -> int:
        return len(self.x_train)

    @property
    def n_test(self) -> int:
        return len(self.x_test)


def component_means(cfg: DataConfig) -> np.ndarray:
    ang = 2.0 * math.pi * np.arange(cfg.components) / cfg.components
    means = np.zeros((cfg.components, cfg.dim))
    means[:, 0] = cfg.radius * np.cos(ang)
    means[:, 1] = cfg.radius * np.sin(ang)
    return means


def sample_mixture(cfg: DataConfig, n: int, rng: Rng) -> tuple[np.ndarray, np.ndarray]:
    if cfg.dim < 2:
        raise ContractError("toy data needs at least 2 dimensions")
    labels = np.asarray(rng.integers(cfg.components, (n,)))
    noise = np.asarray(rng.normal((n, cfg.dim)))
    ang = 2.0 * math.pi * labels / cfg.components
    normal_dir = np.stack([np.cos(ang), np.sin(ang)], axis=1)
    tangent_dir = np.stack([-np.sin(ang), np.cos(ang)], axis=1)
    r = cfg.radial_std * noise[:, 0]
    u = cfg.tangent_std * noise[:, 1] + cfg.texture_amplitude * np.sin(2.0 * math.pi * r / cfg.texture_period)
    x = np.zeros((n, cfg.dim))
    x[:, :2] = (cfg.radius + r)[:, None] * normal_dir + u[:, None] * tangent_dir
    if cfg.dim > 2:
        # per-component anisotropy in the extra dims: component k stretches dim 2 + (k mod (D-2))
        scale = np.full((n, cfg.dim - 2), cfg.extra_std)
        scale[np.arange(n), labels % (cfg.dim - 2)] *= 3.0
        x[:, 2:] = scale * noise[:, 2:]
    return x, labels


def generate(cfg: DataConfig, seed: int) -> ToyDataset:
    rng = Rng(seed).fork(0xDA7A)
    x, y = sample_mixture(cfg, cfg.n_train + cfg.n_test, rng)
    n = cfg.n_train
    return ToyDataset(cfg.dim, cfg.components, x[:n], y[:n], x[n:], y[n:])


def nearest_mean_accuracy(cfg: DataConfig, x: np.ndarray, y: np.ndarray) -> float:
    means = component_means(cfg)
    d = ((x[:, None, :] - means[None]) ** 2).sum(-1)
    return float((d.argmin(axis=1) == y).mean())


def save_dataset(ds: ToyDataset, path: str | Path) -> None:
    """One header line, then ``x_1,...,x_D,label`` per row (train rows first).

    Floats are written with ``repr`` so the file round-trips exactly.
    """
    lines = [f"{HEADER_TAG} D={ds.dim} K={ds.components} N={ds.n_train + ds.n_test} N_train={ds.n_train}"]
    for x, y in ((ds.x_train, ds.y_train), (ds.x_test, ds.y_test)):
        for row, lab in zip(x.tolist(), y.tolist()):
            lines.append(",".join(repr(v) for v in row) + f",{int(lab)}")
    Path(path).write_text("\n".join(lines) + "\n")


def load_dataset(path: str | Path) -> ToyDataset:
    path = Path(path)
    if not path.exists():
        raise DependencyError(f"dataset file not found: {path}")
    with path.open() as fh:
        header = fh.readline().split()
        if not header or header[0] != HEADER_TAG:
            raise ContractError(f"{path} is not a dataset file")
        meta = dict(tok.split("=", 1) for tok in header[1:])
        d, k, n, n_train = (int(meta[key]) for key in ("D", "K", "N", "N_train"))
        rows = np.loadtxt(fh, delimiter=",", ndmin=2) if n else np.zeros((0, d + 1))
    if rows.shape != (n, d + 1):
        raise ContractError(f"{path}: expected {n} rows of {d + 1} columns, got {rows.shape}")
    x, y = rows[:, :d], rows[:, d].astype(np.int64)
    return ToyDataset(d, k, x[:n_train], y[:n_train], x[n_train:], y[n_train:])
