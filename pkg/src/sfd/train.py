"""SFD training: dual-velocity regression plus representation alignment.

Per sample, the semantic latent ``s1`` comes from the frozen compressor, the
texture latent ``z1`` is the data point, each block is noised at its own
timestep, and the loss is

    ||v_z - (z1 - z0)||^2 + beta ||v_s - (s1 - s0)||^2 + lambda * L_repa.

Every iteration draws from ``Rng(seed).fork(1, iteration)``, so a run resumed
from a checkpoint continues bit-identically.
"""
from __future__ import annotations

import csv
import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import checkpoint as ckpt
from .composite import FoundationEncoder, foundation_features, texture_encode
from .data import ToyDataset
from .denoiser import REPA_LOSS_TYPES, Denoiser, DenoiserConfig, forward, repa_align
from .errors import ContractError, DivergenceError
from .flow import interpolate, velocity_loss
from .numerics import AdamWState, Rng, Tensor, adamw_step, backward, no_grad
from .scheduler import sample_training_times
from .semvae import PcaCompressor, SemVAE, encode

log = logging.getLogger(__name__)

LOG_COLUMNS = ("iteration", "total", "loss_z", "loss_s", "loss_repa", "wall_ms")


@dataclass(frozen=True)
class TrainConfig:
    delta_t: float = 0.3
    beta: float = 2.0
    lambda_repa: float = 1.0
    lambda_kl: float = 1e-7
    lr: float = 1e-3
    weight_decay: float = 0.0
    batch_size: int = 128
    iterations: int = 5000
    time_sampler: str = "uniform"
    logit_loc: float = 0.0
    logit_scale: float = 1.0
    repa_loss: str = "cosine+mse"
    conditional: bool = True
    label_dropout: float = 0.1
    seed: int = 0
    checkpoint_every: int = 0
    log_every: int = 1

    def __post_init__(self):
        if not 0.0 <= self.delta_t <= 1.0:
            raise ContractError("delta_t must lie in [0, 1]")
        if self.beta < 0 or self.lambda_repa < 0:
            raise ContractError("beta and lambda_repa must be >= 0")
        if self.batch_size < 1 or self.iterations < 0:
            raise ContractError("batch_size must be >= 1 and iterations >= 0")
        if self.repa_loss not in REPA_LOSS_TYPES:
            raise ContractError(f"unknown REPA loss type {self.repa_loss!r}")
        if self.time_sampler not in ("uniform", "logit_normal"):
            raise ContractError(f"unknown time sampler {self.time_sampler!r}")
        if not 0.0 <= self.label_dropout <= 1.0:
            raise ContractError("label_dropout must lie in [0, 1]")


class SemanticSource:
    """Frozen compressor and foundation encoder, evaluated once over the training set.

    ``s1`` for a batch is ``standardize(mu + sigma * eps)`` for the SemVAE and
    the standardized projection for PCA; ``y_star`` are the foundation features.
    """

    def __init__(self, compressor: SemVAE | PcaCompressor, encoder: FoundationEncoder, x: np.ndarray):
        self.compressor = compressor
        self.encoder = encoder
        self.y_star = foundation_features(encoder, x)
        if isinstance(compressor, SemVAE):
            with no_grad():
                post = encode(compressor, self.y_star)
            self.mu = post.mu.data.copy()
            self.sigma = np.exp(0.5 * post.log_var.data)
        else:
            self.mu = compressor.latent(self.y_star)
            self.sigma = None

    @property
    def c_s(self) -> int:
        return self.mu.shape[1]

    def semantic(self, idx: np.ndarray, rng: Rng) -> np.ndarray:
        if self.sigma is None:
            return self.mu[idx]
        s = self.mu[idx] + self.sigma[idx] * np.asarray(rng.normal((len(idx), self.c_s)))
        stats = self.compressor.stats
        return stats.apply(s) if stats is not None else s


@dataclass
class LossParts:
    total: Tensor
    loss_z: Tensor
    loss_s: Tensor
    loss_repa: Tensor
    t_s: np.ndarray
    t_z: np.ndarray


def sfd_loss(model: Denoiser, s1, z1, y_star, labels, cfg: TrainConfig, rng: Rng) -> LossParts:
    """Loss on one batch of clean latents. ``rng`` supplies noise and timesteps."""
    s1 = np.asarray(s1, dtype=np.float64)
    z1 = np.asarray(z1, dtype=np.float64)
    b = s1.shape[0]
    s0 = np.asarray(rng.fork(0).normal(s1.shape))
    z0 = np.asarray(rng.fork(1).normal(z1.shape))
    t_s, t_z = sample_training_times(rng.fork(2), cfg.delta_t, (b,), cfg.time_sampler,
                                     cfg.logit_loc, cfg.logit_scale)
    v_s, v_z, tap = forward(model, interpolate(s0, s1, t_s[:, None]), interpolate(z0, z1, t_z[:, None]),
                            t_s, t_z, labels)
    loss_z = velocity_loss(v_z, z1 - z0)
    loss_s = velocity_loss(v_s, s1 - s0)
    loss_repa = repa_align(model, tap, y_star, cfg.repa_loss)
    total = loss_z + loss_s * cfg.beta + loss_repa * cfg.lambda_repa
    return LossParts(total, loss_z, loss_s, loss_repa, t_s, t_z)


def draw_batch(cfg: TrainConfig, n: int, labels: np.ndarray, null_label: int, rng: Rng):
    """Row indices and (possibly dropped) conditioning labels for one iteration."""
    idx = np.asarray(rng.integers(n, (cfg.batch_size,)))
    if not cfg.conditional:
        return idx, np.full(cfg.batch_size, null_label, dtype=np.int64)
    lab = labels[idx].astype(np.int64)
    if cfg.label_dropout > 0:
        drop = np.asarray(rng.uniform((cfg.batch_size,))) < cfg.label_dropout
        lab = np.where(drop, null_label, lab)
    return idx, lab


@dataclass
class TrainState:
    model: Denoiser
    opt: AdamWState
    iteration: int
    cfg: TrainConfig
    losses: list[tuple[float, float, float, float]] = field(default_factory=list)
    max_offsets: list[float] = field(default_factory=list)

    def entries(self, config_text: str = "") -> dict[str, np.ndarray]:
        out: dict[str, np.ndarray] = {}
        out.update(ckpt.with_prefix("model.", {k: p.data for k, p in self.model.params.items()}))
        out.update(ckpt.with_prefix("opt.m.", self.opt.m))
        out.update(ckpt.with_prefix("opt.v.", self.opt.v))
        out["opt.step"] = np.array([float(self.opt.step)])
        out["meta.iteration"] = np.array([float(self.iteration)])
        out["meta.rng"] = ckpt.pack_u64(self.cfg.seed, self.iteration)
        out["meta.model"] = model_config_array(self.model.cfg)
        out["meta.delta_t"] = np.array([self.cfg.delta_t])
        out["meta.config"] = ckpt.pack_text(config_text)
        return out


def model_config_array(cfg: DenoiserConfig) -> np.ndarray:
    return np.array([cfg.c_s, cfg.c_z, cfg.c_in, cfg.hidden, cfg.blocks, cfg.num_classes,
                     cfg.repa_depth, cfg.time_frequencies], dtype=np.float64)


def model_from_entries(entries: dict[str, np.ndarray]) -> Denoiser:
    """Rebuild a denoiser from checkpoint entries."""
    if "meta.model" not in entries:
        raise ckpt.CheckpointError("checkpoint has no model description")
    vals = [int(v) for v in entries["meta.model"]]
    cfg = DenoiserConfig(*vals)
    model = Denoiser(cfg, Rng(0))
    for name, p in model.params.items():
        key = f"model.{name}"
        if key not in entries or entries[key].shape != p.data.shape:
            raise ckpt.CheckpointError(f"checkpoint entry {key} missing or mis-shaped")
        p.data = entries[key].copy()
    return model


def _restore(state: TrainState, entries: dict[str, np.ndarray]) -> None:
    for name, p in state.model.params.items():
        p.data = entries[f"model.{name}"].copy()
        state.opt.m[name] = entries[f"opt.m.{name}"].copy()
        state.opt.v[name] = entries[f"opt.v.{name}"].copy()
    state.opt.step = int(entries["opt.step"][0])
    state.iteration = int(entries["meta.iteration"][0])
    seed, counter = ckpt.unpack_u64(entries["meta.rng"])
    if seed != state.cfg.seed & 0xFFFFFFFFFFFFFFFF or counter != state.iteration:
        raise ckpt.CheckpointError("checkpoint rng state does not match this run's seed")


def train_sfd(cfg: TrainConfig, dataset: ToyDataset, compressor: SemVAE | PcaCompressor,
              encoder: FoundationEncoder, model_cfg: DenoiserConfig | None = None, *,
              log_path: str | Path | None = None, checkpoint_path: str | Path | None = None,
              resume: dict[str, np.ndarray] | None = None, config_text: str = "",
              stop_at: int | None = None) -> TrainState:
    """Run (or continue) the training loop up to ``cfg.iterations`` (or ``stop_at``).

    ``checkpoint_path`` receives periodic checkpoints every ``checkpoint_every``
    iterations and the final one; ``resume`` restores a previous state.
    """
    src = SemanticSource(compressor, encoder, dataset.x_train)
    z_all = texture_encode(dataset.x_train)
    if model_cfg is None:
        model_cfg = DenoiserConfig(c_s=src.c_s, c_z=dataset.dim, c_in=encoder.width, num_classes=dataset.components)
    if (model_cfg.c_s, model_cfg.c_z, model_cfg.c_in) != (src.c_s, z_all.shape[1], encoder.width):
        raise ContractError("model widths do not match the compressor, data and encoder")
    base = Rng(cfg.seed)
    model = Denoiser(model_cfg, base.fork(0))
    state = TrainState(model, AdamWState(lr=cfg.lr, weight_decay=cfg.weight_decay).init(model.params), 0, cfg)
    if resume is not None:
        _restore(state, resume)
    end = cfg.iterations if stop_at is None else min(stop_at, cfg.iterations)
    n = z_all.shape[0]

    fh = writer = None
    if log_path is not None:
        log_path = Path(log_path)
        fresh = state.iteration == 0 or not log_path.exists()
        fh = log_path.open("w" if fresh else "a", newline="")
        writer = csv.writer(fh, lineterminator="\n")
        if fresh:
            writer.writerow(LOG_COLUMNS)
    try:
        t_start = time.perf_counter()
        while state.iteration < end:
            it = state.iteration
            r = base.fork(1, it)
            idx, labels = draw_batch(cfg, n, dataset.y_train, model.null_label, r.fork(0))
            parts = sfd_loss(model, src.semantic(idx, r.fork(1)), z_all[idx], src.y_star[idx], labels, cfg, r.fork(2))
            row = (parts.total.item(), parts.loss_z.item(), parts.loss_s.item(), parts.loss_repa.item())
            if not all(math.isfinite(v) for v in row):
                raise DivergenceError(f"SFD loss became non-finite at iteration {it}")
            grads = backward(parts.total)
            adamw_step(state.opt, model.params, {k: grads.get(p) for k, p in model.params.items()})
            for p in model.params.values():
                p.grad = None
            state.losses.append(row)
            state.max_offsets.append(float(np.max(parts.t_s - parts.t_z)))
            state.iteration = it + 1
            if writer is not None and (it % cfg.log_every == 0 or state.iteration == end):
                wall = (time.perf_counter() - t_start) * 1e3
                writer.writerow([it, *(repr(v) for v in row), f"{wall:.1f}"])
            if checkpoint_path is not None and cfg.checkpoint_every and state.iteration % cfg.checkpoint_every == 0:
                ckpt.save(checkpoint_path, state.entries(config_text))
    finally:
        if fh is not None:
            fh.close()
    if checkpoint_path is not None:
        ckpt.save(checkpoint_path, state.entries(config_text))
    return state


def smoothed(values, window: int = 100) -> np.ndarray:
    """Trailing moving average; entry ``i`` averages ``values[max(0, i-window+1) : i+1]``."""
    v = np.asarray(values, dtype=np.float64)
    c = np.concatenate([[0.0], np.cumsum(v)])
    i = np.arange(len(v))
    lo = np.maximum(0, i - window + 1)
    return (c[i + 1] - c[lo]) / (i + 1 - lo)
