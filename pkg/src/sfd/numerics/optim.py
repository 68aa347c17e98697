"""AdamW with decoupled weight decay."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import kernels
from ..errors import DivergenceError
from .tensor import Tensor


@dataclass
class AdamWState:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.0
    step: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)

    def init(self, params: dict[str, Tensor]) -> "AdamWState":
        for name, p in params.items():
            self.m.setdefault(name, np.zeros_like(p.data))
            self.v.setdefault(name, np.zeros_like(p.data))
        return self


def adamw_step(state: AdamWState, params: dict[str, Tensor], grads: dict[str, np.ndarray | None]) -> None:
    """One in-place AdamW update of ``params``.

    Missing gradients count as zero. Raises :class:`DivergenceError` on a
    non-finite gradient before touching any parameter.
    """
    for name, g in grads.items():
        if g is not None and not np.all(np.isfinite(g)):
            raise DivergenceError(f"non-finite gradient for {name!r} at step {state.step + 1}")
    state.init(params)
    state.step += 1
    c1 = 1.0 - state.beta1**state.step
    c2 = 1.0 - state.beta2**state.step
    for name, p in params.items():
        g = grads.get(name)
        if g is None:
            g = np.zeros_like(p.data)
        if not p.data.flags.c_contiguous:
            p.data = np.ascontiguousarray(p.data)
        kernels.adamw_update(p.data, g, state.m[name], state.v[name], state.lr, state.beta1, state.beta2,
                             state.eps, state.weight_decay, c1, c2)
