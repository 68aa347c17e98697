"""Compare the compiled and pure-Python kernel backends.

Usage: python benchmarks/bench_kernels.py [--repeat N] [--quick]

Prints one row per kernel: best-of-N wall time for each backend and the
speedup. Both backends produce identical results (see tests/test_kernels.py).
"""
from __future__ import annotations

import argparse
import sys
import timeit

import numpy as np

from sfd import kernels


def cases(quick: bool):
    r = np.random.default_rng(0)
    n = 100_000 if quick else 1_000_000
    pts = 500 if quick else 1500
    a, b = r.normal(size=(pts, 2)), r.normal(size=(pts, 2))
    sym = r.normal(size=(16, 16))
    sym = sym @ sym.T
    size = 330_000
    p, g = r.normal(size=size), r.normal(size=size)
    m, v = np.zeros(size), np.zeros(size)
    return {
        f"uniform ({n:,} draws)": lambda k: k.uniform(7, 0, n),
        f"normal ({n:,} draws)": lambda k: k.normal(7, 0, n),
        f"rbf_mean ({pts}x{pts})": lambda k: k.rbf_mean(a, b, 0.5),
        f"sq_dists ({pts}x{pts})": lambda k: k.sq_dists(a, b),
        "jacobi_eigh (16x16)": lambda k: k.jacobi_eigh(sym),
        f"adamw_update ({size:,} params)": lambda k: k.adamw_update(p, g, m, v, 1e-3, 0.9, 0.999, 1e-8, 0.01, 0.1, 0.001),
    }


def end_to_end(quick: bool):
    """One short training run per backend: the kernels in their real context."""
    from sfd.composite import FoundationEncoder, foundation_features
    from sfd.data import DataConfig, generate
    from sfd.semvae import fit_pca
    from sfd.train import TrainConfig, train_sfd

    ds = generate(DataConfig(n_train=2000, n_test=200), 0)
    enc = FoundationEncoder.create(2)
    comp = fit_pca(foundation_features(enc, ds.x_train), 16)
    its = 20 if quick else 100
    return f"train_sfd ({its} iterations)", lambda: train_sfd(TrainConfig(iterations=its), ds, comp, enc)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--quick", action="store_true", help="smaller inputs")
    args = ap.parse_args(argv)
    backends = kernels.available_backends()
    if "compiled" not in backends:
        print("compiled extension not built; run `python setup.py build_ext --inplace`", file=sys.stderr)
        return 1
    print(f"{'kernel':34s} {'compiled ms':>12s} {'python ms':>12s} {'speedup':>8s}")
    for name, fn in cases(args.quick).items():
        t = {}
        for be in ("compiled", "python"):
            mod = kernels.get_backend(be)
            t[be] = min(timeit.repeat(lambda: fn(mod), number=1, repeat=args.repeat)) * 1e3
        print(f"{name:34s} {t['compiled']:12.3f} {t['python']:12.3f} {t['python'] / t['compiled']:7.1f}x")
    name, fn = end_to_end(args.quick)
    t = {}
    for be in ("compiled", "python"):
        kernels.use_backend(be)
        t[be] = min(timeit.repeat(fn, number=1, repeat=max(1, args.repeat // 2))) * 1e3
    kernels.use_backend("compiled")
    print(f"{name:34s} {t['compiled']:12.3f} {t['python']:12.3f} {t['python'] / t['compiled']:7.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
