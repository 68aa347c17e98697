"""Semantic VAE over frozen foundation features, and the PCA baseline.

Both compressors expose the same downstream surface: ``latent(features, rng)``
returns standardized semantic latents of width ``c_s`` (per-channel mean and
scale fitted once on the training features after the compressor is frozen).
"""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError, DimensionError, DivergenceError
from .nn import freeze, init_linear, init_residual_block, linear, residual_block
from .numerics import AdamWState, Rng, Tensor, adamw_step, as_tensor, backward, layer_norm, no_grad, sym_eig

log = logging.getLogger(__name__)

LOG_VAR_MIN = -30.0
LOG_VAR_MAX = 20.0
COS_EPS = 1e-8


@dataclass
class SemVaeConfig:
    c_in: int = 64
    c_s: int = 16
    hidden: int = 128
    blocks: int = 4
    lambda_kl: float = 1e-7
    lr: float = 1e-3
    batch_size: int = 128
    iterations: int = 2000
    jitter: float = 0.01


@dataclass
class GaussianPosterior:
    mu: Tensor
    log_var: Tensor

    @property
    def var(self) -> np.ndarray:
        return np.exp(self.log_var.data)


@dataclass
class LatentStats:
    """Per-channel affine standardization of semantic latents."""

    mean: np.ndarray
    std: np.ndarray

    def apply(self, s: np.ndarray) -> np.ndarray:
        return (s - self.mean) / self.std

    def invert(self, s: np.ndarray) -> np.ndarray:
        return s * self.std + self.mean

    @classmethod
    def fit(cls, s: np.ndarray) -> "LatentStats":
        std = s.std(axis=0)
        return cls(s.mean(axis=0), np.where(std > 1e-12, std, 1.0))


class SemVAE:
    """Encoder ``E_s`` and decoder ``D_s`` as residual MLP stacks over per-token features."""

    kind = "vae"

    def __init__(self, cfg: SemVaeConfig, rng: Rng):
        self.cfg = cfg
        self.params: dict[str, Tensor] = {}
        self.frozen = False
        self.stats: LatentStats | None = None
        p, h = self.params, cfg.hidden
        init_linear(p, "enc.in", rng, cfg.c_in, h)
        for i in range(cfg.blocks):
            init_residual_block(p, f"enc.block{i}", rng, h)
        # zero output projection: the untrained posterior is exactly N(0, I)
        init_linear(p, "enc.out", rng, h, 2 * cfg.c_s, zero=True)
        init_linear(p, "dec.in", rng, cfg.c_s, h)
        for i in range(cfg.blocks):
            init_residual_block(p, f"dec.block{i}", rng, h)
        init_linear(p, "dec.out", rng, h, cfg.c_in)

    @property
    def c_s(self) -> int:
        return self.cfg.c_s

    def freeze(self, features: np.ndarray | None = None) -> None:
        """Mark parameters non-trainable and fit latent standardization on ``features``."""
        freeze(self.params)
        self.frozen = True
        if features is not None:
            # fit on reparameterized draws: that is what the denoiser sees
            with no_grad():
                s = reparameterize(encode(self, features), Rng(0x57A7)).data
            self.stats = LatentStats.fit(s)

    def latent(self, features, rng: Rng) -> np.ndarray:
        """Standardized ``s_1 = mu + sigma * eps`` for downstream diffusion."""
        with no_grad():
            s = reparameterize(encode(self, features), rng).data
        return self.stats.apply(s) if self.stats is not None else s


def encode(model: SemVAE, f_s) -> GaussianPosterior:
    f_s = as_tensor(f_s)
    if f_s.shape[-1] != model.cfg.c_in:
        raise DimensionError(f"SemVAE expects feature width {model.cfg.c_in}, got {f_s.shape[-1]}")
    p = model.params
    h = linear(p, "enc.in", f_s)
    for i in range(model.cfg.blocks):
        h = residual_block(p, f"enc.block{i}", h)
    h = linear(p, "enc.out", layer_norm(h))
    c = model.cfg.c_s
    return GaussianPosterior(mu=h[:, :c], log_var=h[:, c:].clip(LOG_VAR_MIN, LOG_VAR_MAX))


def reparameterize(post: GaussianPosterior, rng: Rng) -> Tensor:
    eps = np.asarray(rng.normal(post.mu.shape))
    sigma = (post.log_var * 0.5).exp()
    return post.mu + sigma * eps


def decode(model: SemVAE, s1) -> Tensor:
    s1 = as_tensor(s1)
    if s1.shape[-1] != model.cfg.c_s:
        raise DimensionError(f"SemVAE decoder expects width {model.cfg.c_s}, got {s1.shape[-1]}")
    p = model.params
    h = linear(p, "dec.in", s1)
    for i in range(model.cfg.blocks):
        h = residual_block(p, f"dec.block{i}", h)
    return linear(p, "dec.out", layer_norm(h))


def cosine_rows(a: Tensor, b) -> Tensor:
    """Row-wise cosine similarity with ``COS_EPS`` added to the denominator."""
    b = as_tensor(b)
    dot = (a * b).sum(axis=-1)
    na = ((a * a).sum(axis=-1)).sqrt()
    nb = ((b * b).sum(axis=-1)).sqrt()
    return dot / (na * nb + COS_EPS)


def kl_standard_normal(post: GaussianPosterior) -> Tensor:
    """``0.5 * sum(mu^2 + sigma^2 - log sigma^2 - 1)`` per row, averaged over rows."""
    mu, lv = post.mu, post.log_var
    per = (mu * mu + lv.exp() - lv - 1.0) * 0.5
    return per.sum(axis=-1).mean()


def semvae_loss(f_hat: Tensor, f_s, post: GaussianPosterior, lambda_kl: float):
    """Returns ``(total, mse, cos, kl)`` with ``total = mse + cos + lambda_kl * kl``.

    ``mse`` is the squared error summed over features and averaged over rows;
    ``cos`` is ``1 - cosine`` averaged over rows.
    """
    f_s = as_tensor(f_s)
    if f_hat.shape != f_s.shape:
        raise DimensionError(f"reconstruction shape {f_hat.shape} != target shape {f_s.shape}")
    diff = f_hat - f_s
    mse = (diff * diff).sum(axis=-1).mean()
    cos = 1.0 - cosine_rows(f_hat, f_s).mean()
    kl = kl_standard_normal(post)
    total = mse + cos + kl * lambda_kl
    return total, mse, cos, kl


@dataclass
class SemVaeTrainResult:
    model: SemVAE
    losses: list[float] = field(default_factory=list)


def train_semvae(cfg: SemVaeConfig, features: np.ndarray, rng: Rng) -> SemVaeTrainResult:
    """Fit the SemVAE on ``features`` (N x C_in), then freeze it.

    Each iteration draws its minibatch, jitter and reparameterization noise
    from ``rng.fork(1, iteration)`` so runs are reproducible per seed.
    """
    features = np.asarray(features, dtype=np.float64)
    model = SemVAE(cfg, rng.fork(0))
    opt = AdamWState(lr=cfg.lr).init(model.params)
    losses: list[float] = []
    n = features.shape[0]
    for it in range(cfg.iterations):
        r = rng.fork(1, it)
        idx = np.asarray(r.integers(n, (cfg.batch_size,)))
        batch = features[idx]
        if cfg.jitter:
            batch = batch + cfg.jitter * np.asarray(r.normal(batch.shape))
        post = encode(model, batch)
        s1 = reparameterize(post, r)
        total, _, _, _ = semvae_loss(decode(model, s1), batch, post, cfg.lambda_kl)
        value = total.item()
        if not math.isfinite(value):
            raise DivergenceError(f"SemVAE loss became non-finite at iteration {it}")
        grads = backward(total)
        adamw_step(opt, model.params, {k: grads.get(p) for k, p in model.params.items()})
        for p in model.params.values():
            p.grad = None
        losses.append(value)
        if it % 500 == 0:
            log.debug("semvae it=%d loss=%.5f", it, value)
    model.freeze(features)
    return SemVaeTrainResult(model, losses)


def reconstruction_cosine(model: SemVAE, features: np.ndarray) -> float:
    """Mean row cosine between features and their reconstruction through the posterior mean."""
    with no_grad():
        f_hat = decode(model, encode(model, features).mu)
        return float(cosine_rows(f_hat, features).data.mean())


@dataclass
class PcaCompressor:
    mean: np.ndarray  # (C_in,)
    directions: np.ndarray  # (C_in, C_s), orthonormal columns
    explained: np.ndarray  # full eigen-spectrum, descending
    stats: LatentStats | None = None

    kind = "pca"

    @property
    def c_s(self) -> int:
        return self.directions.shape[1]

    def latent(self, features, rng: Rng | None = None) -> np.ndarray:
        s = pca_project(self, features)
        return self.stats.apply(s) if self.stats is not None else s


def fit_pca(features, c_s: int, fit_stats: bool = True) -> PcaCompressor:
    """Top-``c_s`` principal directions of the (1/N-normalized) feature covariance."""
    x = np.asarray(features, dtype=np.float64)
    n, c_in = x.shape
    if n <= c_s:
        raise ContractError(f"PCA needs more rows than components ({n} <= {c_s})")
    if c_s > c_in:
        raise DimensionError(f"cannot keep {c_s} components of width-{c_in} features")
    mean = x.mean(axis=0)
    xc = x - mean
    cov = xc.T @ xc / n
    w, v = sym_eig(0.5 * (cov + cov.T))
    if c_s > 0 and w[c_s - 1] <= 1e-12 * max(w[0], 1.0):
        warnings.warn(f"feature covariance has rank < {c_s}; trailing directions are an arbitrary orthonormal completion",
                      RuntimeWarning, stacklevel=2)
    pca = PcaCompressor(mean, v[:, :c_s].copy(), w)
    if fit_stats:
        pca.stats = LatentStats.fit(pca_project(pca, x))
    return pca


def pca_project(pca: PcaCompressor, features) -> np.ndarray:
    return (np.asarray(features, dtype=np.float64) - pca.mean) @ pca.directions


def pca_reconstruct(pca: PcaCompressor, coords) -> np.ndarray:
    return np.asarray(coords, dtype=np.float64) @ pca.directions.T + pca.mean
