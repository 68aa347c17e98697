"""Pure numpy implementations of the hot kernels.

These define the reference semantics; ``_kernels.pyx`` must agree with them
(bitwise for the integer hash, to rounding for everything else).
"""
from __future__ import annotations

import math

import numpy as np

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_TWO_POW_53 = 2.0**-53


def _mix(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def mix64(x: int) -> int:
    """SplitMix64 finalizer on a single 64-bit integer."""
    return int(_mix(np.array([x & 0xFFFFFFFFFFFFFFFF], dtype=np.uint64))[0])


def uniform(seed: int, counter: int, n: int) -> np.ndarray:
    """Draws ``counter .. counter+n-1`` of the stream keyed by ``seed``, in [0, 1)."""
    idx = np.arange(1, n + 1, dtype=np.uint64) + np.uint64(counter)
    z = _mix(np.uint64(seed) + idx * GOLDEN)
    return (z >> np.uint64(11)).astype(np.float64) * _TWO_POW_53


def normal(seed: int, counter: int, n: int) -> np.ndarray:
    """Box-Muller normals; consumes ``2 * ceil(n / 2)`` uniforms."""
    pairs = (n + 1) // 2
    u = uniform(seed, counter, 2 * pairs)
    u1 = 1.0 - u[0::2]  # (0, 1]
    u2 = u[1::2]
    # libm through ``math`` (not numpy's SIMD ufuncs) so both backends agree bitwise
    r = np.sqrt(-2.0 * np.array([math.log(x) for x in u1.tolist()]))
    theta = (2.0 * math.pi * u2).tolist()
    out = np.empty(2 * pairs)
    out[0::2] = r * np.array([math.cos(x) for x in theta])
    out[1::2] = r * np.array([math.sin(x) for x in theta])
    return out[:n]


def _off_norm(a: np.ndarray) -> float:
    off = a - np.diag(np.diag(a))
    return math.sqrt(float(np.sum(off * off)))


def jacobi_eigh(a: np.ndarray, tol: float = 1e-12, max_sweeps: int = 100):
    """Cyclic Jacobi eigendecomposition of a symmetric matrix.

    Returns ``(w, v, sweeps)`` with eigenvalues unsorted and eigenvectors in the
    columns of ``v``. Iterates until the off-diagonal Frobenius norm drops below
    ``tol``.
    """
    a = np.array(a, dtype=np.float64, copy=True)
    n = a.shape[0]
    v = np.eye(n)
    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        off = _off_norm(a)
        if off < tol:
            return np.diag(a).copy(), v, sweeps - 1
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                app, aqq = a[p, p], a[q, q]
                theta = (aqq - app) / (2.0 * apq)
                t = (1.0 if theta >= 0 else -1.0) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                ap = a[:, p].copy()
                aq = a[:, q].copy()
                a[:, p] = c * ap - s * aq
                a[:, q] = s * ap + c * aq
                rp = a[p, :].copy()
                rq = a[q, :].copy()
                a[p, :] = c * rp - s * rq
                a[q, :] = s * rp + c * rq
                a[p, q] = a[q, p] = 0.0
                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    off = _off_norm(a)
    if off >= tol:
        raise ArithmeticError(f"Jacobi did not converge: off-diagonal norm {off:.3e}")
    return np.diag(a).copy(), v, sweeps


def sq_dists(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pairwise squared Euclidean distances, computed by explicit differences."""
    diff = a[:, None, :] - b[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def rbf_mean(a: np.ndarray, b: np.ndarray, gamma: float) -> float:
    """Mean of ``exp(-gamma * |a_i - b_j|^2)`` over all pairs."""
    total = 0.0
    for start in range(0, a.shape[0], 256):
        total += float(np.exp(-gamma * sq_dists(a[start:start + 256], b)).sum())
    return total / (a.shape[0] * b.shape[0])


def adamw_update(p, g, m, v, lr, beta1, beta2, eps, weight_decay, c1, c2) -> None:
    """Fused in-place AdamW update of one parameter array.

    ``c1``/``c2`` are the bias corrections ``1 - beta**step``. The operation
    order is mirrored exactly by the compiled kernel.
    """
    m *= beta1
    m += (1.0 - beta1) * g
    v *= beta2
    v += (1.0 - beta2) * (g * g)
    if weight_decay != 0.0:
        p *= 1.0 - lr * weight_decay
    p -= lr * (m / c1) / (np.sqrt(v / c2) + eps)
