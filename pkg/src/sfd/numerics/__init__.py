"""Tensors with reverse-mode autodiff, random streams, AdamW and Jacobi kernels."""
from .linalg import sqrtm_psd, sym_eig
from .optim import AdamWState, adamw_step
from .rng import Rng
from .tensor import Tensor, affine, as_tensor, backward, concat, layer_norm, matmul, no_grad, parameter, take_rows, zero_grad
from .gradcheck import finite_difference_grad, relative_error

__all__ = [
    "affine",
    "AdamWState",
    "Rng",
    "Tensor",
    "adamw_step",
    "as_tensor",
    "backward",
    "concat",
    "finite_difference_grad",
    "layer_norm",
    "matmul",
    "no_grad",
    "parameter",
    "relative_error",
    "sqrtm_psd",
    "sym_eig",
    "take_rows",
    "zero_grad",
]
