"""Symmetric eigendecomposition and PSD square root via cyclic Jacobi."""
from __future__ import annotations

import numpy as np

from .. import kernels
from ..errors import ContractError, DimensionError, NotPSDError


def _as_array(m) -> np.ndarray:
    return np.asarray(getattr(m, "data", m), dtype=np.float64)


def sym_eig(m, sym_tol: float = 1e-9) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (descending) and orthonormal eigenvector columns of ``m``.

    Each eigenvector's largest-magnitude entry is made positive so the output is
    fully determined by ``m``.
    """
    a = _as_array(m)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError(f"sym_eig needs a square matrix, got shape {a.shape}")
    if a.size and np.max(np.abs(a - a.T)) > sym_tol:
        raise ContractError("sym_eig input is not symmetric")
    a = 0.5 * (a + a.T)
    w, v, _ = kernels.jacobi_eigh(a, 1e-12, 100)
    order = np.argsort(-w, kind="stable")
    w, v = w[order], v[:, order]
    pivot = np.argmax(np.abs(v), axis=0)
    signs = np.sign(v[pivot, np.arange(v.shape[1])])
    signs[signs == 0] = 1.0
    return w, v * signs


def sqrtm_psd(m, clamp_tol: float = 1e-10, neg_tol: float = 1e-8) -> np.ndarray:
    """Symmetric PSD square root.

    Eigenvalues in ``[-neg_tol, clamp_tol)`` are treated as zero; anything more
    negative raises :class:`NotPSDError`.
    """
    w, v = sym_eig(m)
    if w.size and w.min() < -neg_tol:
        raise NotPSDError(f"matrix has eigenvalue {w.min():.3e} < -{neg_tol:g}")
    w = np.where(w < clamp_tol, 0.0, w)
    s = (v * np.sqrt(w)) @ v.T
    return 0.5 * (s + s.T)
