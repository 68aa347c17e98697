"""Backend selection for the hot kernels.

The compiled extension is used when it imports; otherwise the numpy versions
in ``_kernels_py`` are used. ``use_backend`` switches at runtime (benchmarks and
cross-backend tests rely on it).
"""
from __future__ import annotations

from types import ModuleType

from . import _kernels_py

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

_BACKENDS: dict[str, ModuleType] = {"python": _kernels_py}
if _compiled is not None:
    _BACKENDS["compiled"] = _compiled

_active: ModuleType = _compiled if _compiled is not None else _kernels_py


def available_backends() -> list[str]:
    return sorted(_BACKENDS)


def backend_name() -> str:
    return "compiled" if _active is _compiled and _compiled is not None else "python"


def use_backend(name: str) -> None:
    global _active
    if name not in _BACKENDS:
        raise ValueError(f"unknown or unavailable kernel backend {name!r}; have {available_backends()}")
    _active = _BACKENDS[name]


def get_backend(name: str) -> ModuleType:
    return _BACKENDS[name]


def mix64(x: int) -> int:
    return _active.mix64(x)


def uniform(seed: int, counter: int, n: int):
    return _active.uniform(seed, counter, n)


def normal(seed: int, counter: int, n: int):
    return _active.normal(seed, counter, n)


def jacobi_eigh(a, tol: float = 1e-12, max_sweeps: int = 100):
    return _active.jacobi_eigh(a, tol, max_sweeps)


def sq_dists(a, b):
    return _active.sq_dists(a, b)


def rbf_mean(a, b, gamma: float) -> float:
    return _active.rbf_mean(a, b, gamma)


def adamw_update(p, g, m, v, lr, beta1, beta2, eps, weight_decay, c1, c2) -> None:
    _active.adamw_update(p, g, m, v, lr, beta1, beta2, eps, weight_decay, c1, c2)
