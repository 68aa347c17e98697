"""Dual-timestep velocity network with REPA hidden-state tap.

The backbone is a conditional residual MLP: the composite latent is projected
to width ``H``; each block applies a shift/scale modulation of a
layer-normalized state, driven by the dual time embedding plus the class
embedding, followed by a two-layer update. Separate zero-initialized heads read
out the semantic and texture velocities.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ContractError, DimensionError
from .nn import init_linear, linear
from .numerics import Rng, Tensor, as_tensor, concat, layer_norm, no_grad, take_rows
from .semvae import cosine_rows

REPA_LOSS_TYPES = ("cosine", "mse", "cosine+mse")


@dataclass(frozen=True)
class DenoiserConfig:
    c_s: int = 16
    c_z: int = 2
    c_in: int = 64
    hidden: int = 128
    blocks: int = 4
    num_classes: int = 8
    repa_depth: int = 2
    time_frequencies: int = 32


def sinusoidal_encoding(t, frequencies: int = 32) -> np.ndarray:
    """``[cos(1000 t w_k), sin(1000 t w_k)]`` with ``w_k = 1e4^(-k/frequencies)``.

    Periods run geometrically from ``2*pi`` to ``2*pi*1e4`` in units of
    ``1000 t``, so both the coarse and the fine structure of the unit interval
    are resolved.
    """
    t = np.atleast_1d(np.asarray(t, dtype=np.float64))
    freqs = np.exp(-math.log(1e4) * np.arange(frequencies) / frequencies)
    ang = 1000.0 * t[:, None] * freqs[None, :]
    return np.concatenate([np.cos(ang), np.sin(ang)], axis=1)


class Denoiser:
    def __init__(self, cfg: DenoiserConfig, rng: Rng):
        if cfg.hidden % 2:
            raise ContractError("hidden width must be even (two H/2 time embedders)")
        if not 1 <= cfg.repa_depth <= cfg.blocks:
            raise ContractError(f"repa_depth must be in [1, {cfg.blocks}]")
        self.cfg = cfg
        h, half = cfg.hidden, cfg.hidden // 2
        p: dict[str, Tensor] = {}
        init_linear(p, "in", rng, cfg.c_s + cfg.c_z, h)
        for which in ("tau_s", "tau_z"):
            init_linear(p, f"{which}.fc1", rng, 2 * cfg.time_frequencies, half)
            init_linear(p, f"{which}.fc2", rng, half, half)
        p["class_table"] = Tensor(np.asarray(rng.normal((cfg.num_classes + 1, h))) * 0.1, requires_grad=True,
                                  name="class_table")
        for i in range(cfg.blocks):
            init_linear(p, f"block{i}.ada", rng, h, 2 * h, gain=0.1)
            init_linear(p, f"block{i}.fc1", rng, h, h)
            init_linear(p, f"block{i}.fc2", rng, h, h, gain=0.5)
        init_linear(p, "final.ada", rng, h, 2 * h, gain=0.1)
        init_linear(p, "head_s", rng, h, cfg.c_s, zero=True)
        init_linear(p, "head_z", rng, h, cfg.c_z, zero=True)
        init_linear(p, "repa.fc1", rng, h, h)
        init_linear(p, "repa.fc2", rng, h, cfg.c_in)
        self.params = p

    @property
    def null_label(self) -> int:
        return self.cfg.num_classes

    def __call__(self, s, z, t_s, t_z, labels) -> tuple[np.ndarray, np.ndarray]:
        """Velocity field for samplers: arrays in, arrays out, no graph."""
        with no_grad():
            v_s, v_z, _ = forward(self, s, z, t_s, t_z, labels)
        return v_s.data, v_z.data


def _check_times(t) -> np.ndarray:
    t = np.asarray(t, dtype=np.float64)
    if np.any(t < 0.0) or np.any(t > 1.0) or not np.all(np.isfinite(t)):
        raise ContractError("timesteps must lie in [0, 1]")
    return t


def _time_embedder(model: Denoiser, which: str, t) -> Tensor:
    enc = Tensor(sinusoidal_encoding(t, model.cfg.time_frequencies))
    return linear(model.params, f"{which}.fc2", linear(model.params, f"{which}.fc1", enc).silu())


def embed_times(model: Denoiser, t_s, t_z) -> Tensor:
    """``[tau_s(t_s), tau_z(t_z)]``, width ``H``; one row per time pair."""
    t_s, t_z = _check_times(t_s), _check_times(t_z)
    return concat([_time_embedder(model, "tau_s", t_s), _time_embedder(model, "tau_z", t_z)], axis=-1)


def _labels(model: Denoiser, labels, batch: int) -> np.ndarray:
    lab = np.broadcast_to(np.asarray(labels, dtype=np.int64), (batch,))
    if np.any(lab < 0) or np.any(lab > model.cfg.num_classes):
        raise ContractError(f"labels must be in [0, {model.cfg.num_classes}] (last is the null label)")
    return lab


def _modulate(x: Tensor, mod: Tensor, h: int) -> Tensor:
    """``LN(x) * (1 + scale) + shift`` with ``mod = [shift, scale]``."""
    return layer_norm(x) * (mod[:, h:] + 1.0) + mod[:, :h]


def forward(model: Denoiser, s, z, t_s, t_z, labels) -> tuple[Tensor, Tensor, Tensor]:
    """``(v_s, v_z, h_tap)`` for a batch of noisy composite latents.

    ``t_s``/``t_z`` are scalars or per-row arrays; ``h_tap`` is the state after
    block ``repa_depth``.
    """
    cfg = model.cfg
    s, z = as_tensor(s), as_tensor(z)
    if s.ndim != 2 or z.ndim != 2 or s.shape[1] != cfg.c_s or z.shape[1] != cfg.c_z or s.shape[0] != z.shape[0]:
        raise DimensionError(f"expected (B, {cfg.c_s}) and (B, {cfg.c_z}) latents, got {s.shape} and {z.shape}")
    b, h = s.shape[0], cfg.hidden
    p = model.params
    t_s = np.broadcast_to(np.asarray(t_s, dtype=np.float64), (b,))
    t_z = np.broadcast_to(np.asarray(t_z, dtype=np.float64), (b,))
    cond = embed_times(model, t_s, t_z) + take_rows(p["class_table"], _labels(model, labels, b))
    c = cond.silu()

    x = linear(p, "in", concat([s, z], axis=-1))
    tap = None
    for i in range(cfg.blocks):
        u = _modulate(x, linear(p, f"block{i}.ada", c), h)
        u = linear(p, f"block{i}.fc2", linear(p, f"block{i}.fc1", u).silu())
        x = x + u
        if i + 1 == cfg.repa_depth:
            tap = x
    u = _modulate(x, linear(p, "final.ada", c), h)
    return linear(p, "head_s", u), linear(p, "head_z", u), tap


def repa_project(model: Denoiser, h_tap: Tensor) -> Tensor:
    p = model.params
    return linear(p, "repa.fc2", linear(p, "repa.fc1", h_tap).silu())


def repa_dissimilarity(proj: Tensor, y_star, loss_type: str = "cosine+mse") -> Tensor:
    """Per-batch mean of ``1 - cos`` and/or the squared error summed over features."""
    if loss_type not in REPA_LOSS_TYPES:
        raise ContractError(f"unknown REPA loss type {loss_type!r}; choose from {REPA_LOSS_TYPES}")
    y_star = as_tensor(y_star)
    if proj.shape != y_star.shape:
        raise DimensionError(f"projection {proj.shape} vs target {y_star.shape}")
    loss = None
    if "cosine" in loss_type:
        loss = 1.0 - cosine_rows(proj, y_star).mean()
    if "mse" in loss_type:
        diff = proj - y_star
        mse = (diff * diff).sum(axis=-1).mean()
        loss = mse if loss is None else loss + mse
    return loss


def repa_align(model: Denoiser, h_tap: Tensor, y_star, loss_type: str = "cosine+mse") -> Tensor:
    return repa_dissimilarity(repa_project(model, h_tap), y_star, loss_type)
