"""Checkpoint entries for the frozen encoder/compressor pair and sample files."""
from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from . import checkpoint as ckpt
from .composite import FoundationEncoder
from .errors import CheckpointError, ContractError, DependencyError
from .numerics import Rng
from .semvae import LatentStats, PcaCompressor, SemVAE, SemVaeConfig

_KINDS = {"vae": 0.0, "pca": 1.0}


def compressor_entries(encoder: FoundationEncoder, comp: SemVAE | PcaCompressor) -> dict[str, np.ndarray]:
    out = {
        "meta.kind": np.array([_KINDS[comp.kind]]),
        "foundation.weight": np.asarray(encoder.weight),
        "foundation.bias": np.asarray(encoder.bias),
        "foundation.seed": ckpt.pack_u64(encoder.seed),
    }
    if comp.stats is not None:
        out["stats.mean"] = comp.stats.mean
        out["stats.std"] = comp.stats.std
    if isinstance(comp, SemVAE):
        c = comp.cfg
        out["meta.semvae"] = np.array([c.c_in, c.c_s, c.hidden, c.blocks, c.lambda_kl, c.lr, c.batch_size,
                                       c.iterations, c.jitter])
        out.update(ckpt.with_prefix("semvae.", {k: p.data for k, p in comp.params.items()}))
    else:
        out["pca.mean"] = comp.mean
        out["pca.directions"] = comp.directions
        out["pca.explained"] = comp.explained
    return out


def compressor_from_entries(e: dict[str, np.ndarray]) -> tuple[FoundationEncoder, SemVAE | PcaCompressor]:
    try:
        w, b = e["foundation.weight"].copy(), e["foundation.bias"].copy()
        w.setflags(write=False)
        b.setflags(write=False)
        encoder = FoundationEncoder(w, b, ckpt.unpack_u64(e["foundation.seed"])[0])
        stats = LatentStats(e["stats.mean"].copy(), e["stats.std"].copy()) if "stats.mean" in e else None
        if e["meta.kind"][0] == _KINDS["pca"]:
            comp = PcaCompressor(e["pca.mean"].copy(), e["pca.directions"].copy(), e["pca.explained"].copy(), stats)
            return encoder, comp
        m = e["meta.semvae"]
        cfg = SemVaeConfig(int(m[0]), int(m[1]), int(m[2]), int(m[3]), float(m[4]), float(m[5]), int(m[6]),
                           int(m[7]), float(m[8]))
    except KeyError as exc:
        raise CheckpointError(f"compressor checkpoint lacks entry {exc}") from None
    model = SemVAE(cfg, Rng(0))
    for name, p in model.params.items():
        key = f"semvae.{name}"
        if key not in e or e[key].shape != p.data.shape:
            raise CheckpointError(f"compressor checkpoint entry {key} missing or mis-shaped")
        p.data = e[key].copy()
    model.freeze()
    model.stats = stats
    return encoder, model


def save_samples(path: str | Path, labels: np.ndarray, x: np.ndarray) -> None:
    """``label,x_0,...,x_{D-1}`` per row; the null label is written as ``null``."""
    x = np.asarray(x, dtype=np.float64)
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["label", *(f"x_{i}" for i in range(x.shape[1]))])
        for lab, row in zip(labels, x.tolist()):
            w.writerow([lab, *(repr(v) for v in row)])


def load_samples(path: str | Path) -> tuple[list[str], np.ndarray]:
    path = Path(path)
    if not path.exists():
        raise DependencyError(f"sample file not found: {path}")
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0][0] != "label":
        raise ContractError(f"{path} is not a sample file")
    labels = [r[0] for r in rows[1:]]
    x = np.array([[float(v) for v in r[1:]] for r in rows[1:]], dtype=np.float64).reshape(len(labels), -1)
    return labels, x
