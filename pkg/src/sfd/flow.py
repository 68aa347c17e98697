"""Linear-path flow matching: interpolant, velocity target, regression loss,
and training-time timestep distributions."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractError, DimensionError
from .numerics import Rng, Tensor, as_tensor
from .numerics.tensor import _sigmoid


@dataclass(frozen=True)
class FlowSample:
    x0: np.ndarray
    x1: np.ndarray
    t: float
    xt: np.ndarray
    v_target: np.ndarray

    @classmethod
    def build(cls, x0, x1, t: float) -> "FlowSample":
        x0 = np.asarray(x0, dtype=np.float64)
        x1 = np.asarray(x1, dtype=np.float64)
        return cls(x0, x1, t, interpolate(x0, x1, t), velocity_target(x0, x1))


def _check_same_shape(a, b) -> None:
    if np.shape(getattr(a, "data", a)) != np.shape(getattr(b, "data", b)):
        raise DimensionError(f"shape mismatch: {np.shape(getattr(a, 'data', a))} vs {np.shape(getattr(b, 'data', b))}")


def interpolate(x0, x1, t):
    """``t * x1 + (1 - t) * x0``.

    ``t`` may be a scalar or a per-row column (shape ``(B, 1)``); works on both
    arrays and tensors.
    """
    _check_same_shape(x0, x1)
    t_arr = np.asarray(getattr(t, "data", t), dtype=np.float64)
    if np.any(t_arr < 0.0) or np.any(t_arr > 1.0) or not np.all(np.isfinite(t_arr)):
        raise ContractError("interpolation time must lie in [0, 1]")
    if isinstance(x0, Tensor) or isinstance(x1, Tensor) or isinstance(t, Tensor):
        return as_tensor(t) * as_tensor(x1) + (1.0 - as_tensor(t)) * as_tensor(x0)
    return t_arr * np.asarray(x1) + (1.0 - t_arr) * np.asarray(x0)


def velocity_target(x0, x1):
    _check_same_shape(x0, x1)
    if isinstance(x0, Tensor) or isinstance(x1, Tensor):
        return as_tensor(x1) - as_tensor(x0)
    return np.asarray(x1, dtype=np.float64) - np.asarray(x0, dtype=np.float64)


def velocity_loss(pred: Tensor, target) -> Tensor:
    """Squared error summed over features, averaged over the leading batch axis."""
    pred = as_tensor(pred)
    target = as_tensor(target)
    _check_same_shape(pred, target)
    diff = pred - target
    sq = diff * diff
    if sq.ndim <= 1:
        return sq.sum()
    return sq.reshape(sq.shape[0], -1).sum(axis=1).mean()


def sample_time_logit_normal(rng: Rng, loc: float = 0.0, scale: float = 1.0, shape=()):
    """``sigmoid(loc + scale * n)`` with standard normal ``n``; lies in (0, 1).

    Extremely large ``|loc + scale * n|`` would round to 0 or 1, so the result is
    nudged one ulp inside the open interval.
    """
    if scale <= 0:
        raise ContractError("logit-normal scale must be positive")
    n = np.asarray(rng.normal(shape))
    x = loc + scale * n
    u = _sigmoid(np.atleast_1d(np.asarray(x, dtype=np.float64))).reshape(np.shape(x))
    u = np.clip(u, np.nextafter(0.0, 1.0), np.nextafter(1.0, 0.0))
    return float(u) if shape == () else u


def sample_time_uniform(rng: Rng, shape=()):
    return rng.uniform(shape)
