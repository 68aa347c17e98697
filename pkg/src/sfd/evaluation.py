"""Sample-quality metrics, class-balanced generation and the delta_t sweep.

Both metrics compare generated texture samples (the data-space block) with
held-out data. The Fréchet distance fits Gaussian moments in data space: it is
a moment-matching analogue of FID, not FID itself.
"""
from __future__ import annotations

import csv
import logging
import math
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import kernels
from .composite import FoundationEncoder, foundation_features, texture_decode
from .data import ToyDataset
from .errors import ContractError, DimensionError, DivergenceError, NotPSDError
from .numerics import Rng, sqrtm_psd
from .scheduler import SamplerConfig, VelocityModel, integrate
from .semvae import PcaCompressor, SemVAE, SemVaeConfig, fit_pca, train_semvae

log = logging.getLogger(__name__)

COV_REG = 1e-6
METRICS = ("mmd", "frechet")


@dataclass(frozen=True)
class MetricReport:
    metric: str
    value: float
    n_a: int
    n_b: int
    parameter: float  # RBF bandwidth for MMD, covariance regularizer for Fréchet
    seed: int | None = None

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise DivergenceError(f"{self.metric} is not finite")


def _as_samples(a, name: str) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2:
        raise DimensionError(f"{name} must be an (N, D) array, got shape {a.shape}")
    if a.shape[0] == 0:
        raise ContractError(f"{name} is empty")
    return a


def median_bandwidth(a: np.ndarray, b: np.ndarray, max_points: int = 1000) -> float:
    """Median pairwise distance of the pooled sample (first ``max_points`` rows of each)."""
    pooled = np.concatenate([a[:max_points], b[:max_points]])
    d2 = kernels.sq_dists(pooled, pooled)
    iu = np.triu_indices(len(pooled), k=1)
    med = float(np.median(np.sqrt(d2[iu])))
    return med if med > 0 else 1.0


def mmd_rbf(a, b, bandwidth: float | None = None) -> float:
    """Biased (V-statistic) squared MMD with ``k(x, y) = exp(-|x - y|^2 / (2 h^2))``.

    ``h`` defaults to the median pairwise distance of the pooled samples.
    """
    a, b = _as_samples(a, "a"), _as_samples(b, "b")
    if a.shape[1] != b.shape[1]:
        raise DimensionError(f"sample widths differ: {a.shape[1]} vs {b.shape[1]}")
    if a.shape[0] < 2 or b.shape[0] < 2:
        raise ContractError("MMD needs at least two samples per set")
    h = median_bandwidth(a, b) if bandwidth is None else float(bandwidth)
    if not h > 0:
        raise ContractError("bandwidth must be positive")
    gamma = 1.0 / (2.0 * h * h)
    val = kernels.rbf_mean(a, a, gamma) + kernels.rbf_mean(b, b, gamma) - 2.0 * kernels.rbf_mean(a, b, gamma)
    return max(val, 0.0)


def fit_moments(a, reg: float = COV_REG) -> tuple[np.ndarray, np.ndarray]:
    a = _as_samples(a, "samples")
    n, d = a.shape
    if n <= d:
        raise ContractError(f"need more samples than dimensions ({n} <= {d})")
    mu = a.mean(axis=0)
    xc = a - mu
    cov = xc.T @ xc / (n - 1)
    return mu, 0.5 * (cov + cov.T) + reg * np.eye(d)


def frechet_from_moments(mu_a, cov_a, mu_b, cov_b) -> float:
    """``|mu_a - mu_b|^2 + tr(cov_a + cov_b - 2 (sqrt(cov_a) cov_b sqrt(cov_a))^(1/2))``."""
    mu_a, mu_b = np.asarray(mu_a, dtype=np.float64), np.asarray(mu_b, dtype=np.float64)
    cov_a, cov_b = np.asarray(cov_a, dtype=np.float64), np.asarray(cov_b, dtype=np.float64)
    try:
        ra = sqrtm_psd(cov_a)
        inner = ra @ cov_b @ ra
        cross = sqrtm_psd(0.5 * (inner + inner.T))
    except NotPSDError as exc:
        raise NotPSDError(f"degenerate covariance: {exc}") from None
    diff = mu_a - mu_b
    val = float(diff @ diff + np.trace(cov_a) + np.trace(cov_b) - 2.0 * np.trace(cross))
    if not math.isfinite(val):
        raise NotPSDError("Fréchet distance is not finite")
    return max(val, 0.0)


def frechet_gaussian(a, b, reg: float = COV_REG) -> float:
    a, b = _as_samples(a, "a"), _as_samples(b, "b")
    if a.shape[1] != b.shape[1]:
        raise DimensionError(f"sample widths differ: {a.shape[1]} vs {b.shape[1]}")
    return frechet_from_moments(*fit_moments(a, reg), *fit_moments(b, reg))


def evaluate(samples, reference, seed: int | None = None, bandwidth: float | None = None) -> list[MetricReport]:
    samples, reference = _as_samples(samples, "samples"), _as_samples(reference, "reference")
    h = median_bandwidth(samples, reference) if bandwidth is None else bandwidth
    n, m = len(samples), len(reference)
    return [MetricReport("mmd", mmd_rbf(samples, reference, h), n, m, h, seed),
            MetricReport("frechet", frechet_gaussian(samples, reference), n, m, COV_REG, seed)]


# -- generation ---------------------------------------------------------------

@dataclass
class GeneratedSet:
    s: np.ndarray
    z: np.ndarray
    labels: np.ndarray

    @property
    def x(self) -> np.ndarray:
        return texture_decode(self.z)


def initial_noise(seed: int, label: int, index: int, c_s: int, c_z: int) -> tuple[np.ndarray, np.ndarray]:
    """Starting point of sample ``index`` of class ``label``: its own stream, ``s0`` first."""
    r = Rng(seed).fork(label, index)
    return np.asarray(r.normal((c_s,))), np.asarray(r.normal((c_z,)))


def generate_class(model: VelocityModel, cfg: SamplerConfig, label: int, n: int, seed: int, c_s: int, c_z: int,
                   weak: VelocityModel | None = None) -> tuple[np.ndarray, np.ndarray]:
    noise = [initial_noise(seed, label, i, c_s, c_z) for i in range(n)]
    s0 = np.stack([a for a, _ in noise]).reshape(n, c_s)
    z0 = np.stack([b for _, b in noise]).reshape(n, c_z)
    return integrate(model, s0, z0, label, cfg, weak)


def class_balanced_generate(model, cfg: SamplerConfig, per_class: int, seed: int = 0,
                            num_classes: int | None = None, class_order=None,
                            weak: VelocityModel | None = None) -> GeneratedSet:
    """Exactly ``per_class`` samples for every class, returned in ascending label order.

    Each class is integrated as one batch and every sample has its own noise
    stream, so the result does not depend on ``class_order``.
    """
    if per_class < 1:
        raise ContractError("per_class must be >= 1")
    mc = model.cfg
    k = mc.num_classes if num_classes is None else num_classes
    order = list(range(k)) if class_order is None else [int(c) for c in class_order]
    if sorted(order) != list(range(k)):
        raise ContractError("class_order must be a permutation of the class labels")
    out: dict[int, tuple[np.ndarray, np.ndarray]] = {}
    for c in order:
        out[c] = generate_class(model, cfg, c, per_class, seed, mc.c_s, mc.c_z, weak)
    s = np.concatenate([out[c][0] for c in range(k)])
    z = np.concatenate([out[c][1] for c in range(k)])
    labels = np.repeat(np.arange(k), per_class)
    return GeneratedSet(s, z, labels)


def unconditional_generate(model, cfg: SamplerConfig, n: int, seed: int = 0,
                           weak: VelocityModel | None = None) -> GeneratedSet:
    mc = model.cfg
    s, z = generate_class(model, cfg, model.null_label, n, seed, mc.c_s, mc.c_z, weak)
    return GeneratedSet(s, z, np.full(n, model.null_label))


# -- sweep --------------------------------------------------------------------

@dataclass(frozen=True)
class SweepSpec:
    """Everything a sweep cell needs besides ``delta_t`` and ``seed``."""

    train: "object"  # train.TrainConfig
    semvae: SemVaeConfig
    sampler: SamplerConfig
    compressor: str = "vae"
    foundation_seed: int = 1234
    model_hidden: int = 128
    model_blocks: int = 4
    repa_depth: int = 2
    time_frequencies: int = 32
    per_class: int | None = None
    bandwidth: float | None = None


def build_compressor(spec: SweepSpec, dataset: ToyDataset, seed: int):
    enc = FoundationEncoder.create(dataset.dim, spec.semvae.c_in, spec.foundation_seed)
    feats = foundation_features(enc, dataset.x_train)
    if spec.compressor == "pca":
        return enc, fit_pca(feats, spec.semvae.c_s)
    if spec.compressor != "vae":
        raise ContractError(f"unknown compressor {spec.compressor!r}")
    return enc, train_semvae(spec.semvae, feats, Rng(seed).fork(0x5E)).model


def run_cell(spec: SweepSpec, dataset: ToyDataset, delta_t: float, seed: int,
             compressor: SemVAE | PcaCompressor | None = None,
             encoder: FoundationEncoder | None = None) -> list[MetricReport]:
    """Train at ``delta_t`` with ``seed``, sample class-balanced, score against held-out data."""
    from .denoiser import DenoiserConfig
    from .train import train_sfd

    if compressor is None or encoder is None:
        encoder, compressor = build_compressor(spec, dataset, seed)
    tcfg = replace(spec.train, delta_t=delta_t, seed=seed)
    mcfg = DenoiserConfig(c_s=compressor.c_s, c_z=dataset.dim, c_in=encoder.width, hidden=spec.model_hidden,
                          blocks=spec.model_blocks, num_classes=dataset.components, repa_depth=spec.repa_depth,
                          time_frequencies=spec.time_frequencies)
    state = train_sfd(tcfg, dataset, compressor, encoder, mcfg)
    per_class = spec.per_class or max(1, dataset.n_test // dataset.components)
    scfg = replace(spec.sampler, delta_t=delta_t)
    sample_seed = kernels.mix64(seed + 0x5A)
    if tcfg.conditional:
        gen = class_balanced_generate(state.model, scfg, per_class, seed=sample_seed)
    else:
        gen = unconditional_generate(state.model, scfg, per_class * dataset.components, seed=sample_seed)
    return evaluate(gen.x, dataset.x_test, seed, spec.bandwidth)


def _cell_job(args):
    spec, dataset, delta_t, seed, compressor, encoder = args
    try:
        return delta_t, seed, run_cell(spec, dataset, delta_t, seed, compressor, encoder), None
    except (DivergenceError, ArithmeticError) as exc:
        return delta_t, seed, None, f"{type(exc).__name__}: {exc}"


def _compressor_job(args):
    spec, dataset, seed = args
    return seed, build_compressor(spec, dataset, seed)


def _map(fn, jobs: list, workers: int):
    if workers <= 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, jobs))


@dataclass
class SweepResult:
    rows: list[tuple[float, int, str, float]]
    failures: list[tuple[float, int, str]]

    def medians(self) -> dict[tuple[float, str], float]:
        groups: dict[tuple[float, str], list[float]] = {}
        for d, _, m, v in self.rows:
            groups.setdefault((d, m), []).append(v)
        return {k: statistics.median(v) for k, v in groups.items()}


def delta_t_sweep(spec: SweepSpec, deltas, seeds, dataset: ToyDataset, jobs: int = 1) -> SweepResult:
    """One training per (delta_t, seed) with identical budgets.

    The compressor is trained once per seed and shared by that seed's cells.
    A diverged cell is recorded in ``failures`` and left out of ``rows``.
    """
    deltas = [float(d) for d in deltas]
    seeds = [int(s) for s in seeds]
    if any(not 0.0 <= d <= 1.0 for d in deltas):
        raise ContractError("sweep offsets must lie in [0, 1]")
    comps = dict(_map(_compressor_job, [(spec, dataset, s) for s in seeds], jobs))
    cells = [(spec, dataset, d, s, comps[s][1], comps[s][0]) for d in deltas for s in seeds]
    rows, failures = [], []
    for d, s, reports, err in _map(_cell_job, cells, jobs):
        if reports is None:
            log.warning("sweep cell delta_t=%s seed=%s failed: %s", d, s, err)
            failures.append((d, s, err))
            continue
        rows.extend((d, s, r.metric, r.value) for r in reports)
    rows.sort(key=lambda r: (r[0], r[1], METRICS.index(r[2])))
    return SweepResult(rows, failures)


def write_sweep_csv(result: SweepResult, path: str | Path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("delta_t", "seed", "metric", "value"))
        for d, s, m, v in result.rows:
            w.writerow((repr(d), s, m, repr(v)))


def read_sweep_csv(path: str | Path) -> SweepResult:
    with Path(path).open(newline="") as fh:
        rows = [(float(r["delta_t"]), int(r["seed"]), r["metric"], float(r["value"])) for r in csv.DictReader(fh)]
    return SweepResult(rows, [])


def gnuplot_script(csv_path: str | Path, out_png: str = "delta_t_sweep.png") -> str:
    """Gnuplot script plotting every cell and the per-offset mean for both metrics."""
    return f"""# delta_t sweep: generated texture samples vs held-out data
set datafile separator ','
set terminal pngcairo size 900,400
set output '{out_png}'
set multiplot layout 1,2
set xlabel 'delta_t'
set key top left
do for [m in "mmd frechet"] {{
    set title m
    set ylabel m
    plot '{csv_path}' every ::1 using 1:(strcol(3) eq m ? $4 : 1/0) with points pt 7 title 'per seed', \\
         '' every ::1 using 1:(strcol(3) eq m ? $4 : 1/0) smooth unique with linespoints lw 2 title 'mean'
}}
unset multiplot
"""
