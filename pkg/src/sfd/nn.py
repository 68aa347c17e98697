"""Small building blocks shared by the SemVAE and the denoiser."""
from __future__ import annotations

import math

import numpy as np

from .numerics import Rng, Tensor, affine, layer_norm, parameter


def init_linear(params: dict[str, Tensor], prefix: str, rng: Rng, fan_in: int, fan_out: int,
                zero: bool = False, gain: float = 1.0) -> None:
    """Register ``{prefix}.w`` (fan_in x fan_out) and ``{prefix}.b``."""
    if zero:
        w = np.zeros((fan_in, fan_out))
    else:
        w = np.asarray(rng.normal((fan_in, fan_out))) * (gain / math.sqrt(fan_in))
    params[f"{prefix}.w"] = parameter(w, f"{prefix}.w")
    params[f"{prefix}.b"] = parameter(np.zeros(fan_out), f"{prefix}.b")


def linear(params: dict[str, Tensor], prefix: str, x: Tensor) -> Tensor:
    return affine(x, params[f"{prefix}.w"], params[f"{prefix}.b"])


def init_residual_block(params: dict[str, Tensor], prefix: str, rng: Rng, width: int) -> None:
    init_linear(params, f"{prefix}.fc1", rng, width, width)
    init_linear(params, f"{prefix}.fc2", rng, width, width, gain=0.5)


def residual_block(params: dict[str, Tensor], prefix: str, h: Tensor) -> Tensor:
    """``h + fc2(silu(fc1(layer_norm(h))))``."""
    u = linear(params, f"{prefix}.fc1", layer_norm(h)).silu()
    return h + linear(params, f"{prefix}.fc2", u)


def freeze(params: dict[str, Tensor]) -> None:
    for p in params.values():
        p.requires_grad = False
        p.grad = None


def param_digest(params: dict[str, Tensor]) -> str:
    """Hash of names and raw bytes; used to prove frozen weights never moved."""
    import hashlib

    h = hashlib.sha256()
    for name in sorted(params):
        h.update(name.encode())
        h.update(np.ascontiguousarray(params[name].data).tobytes())
    return h.hexdigest()
