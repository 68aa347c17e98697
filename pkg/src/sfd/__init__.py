"""Semantic-first dual-timestep flow matching on a toy composite latent.

A frozen random-feature encoder plus a small VAE give a semantic latent; a
flow model denoises it ahead of the texture latent by a fixed time offset.
Hot kernels come from a compiled extension when built, else from numpy
(see :mod:`sfd.kernels`).
"""
from .checkpoint import load as load_checkpoint, save as save_checkpoint
from .config import Config
from .data import DataConfig, ToyDataset, generate
from .denoiser import Denoiser, DenoiserConfig
from .errors import (CheckpointError, ConfigError, ContractError, DependencyError, DimensionError, DivergenceError,
                     ScheduleError, SfdError)
from .evaluation import class_balanced_generate, delta_t_sweep, evaluate, frechet_gaussian, mmd_rbf
from .kernels import backend_name
from .scheduler import DualTime, PhaseMask, SamplerConfig, integrate, phase_mask
from .semvae import SemVAE, SemVaeConfig, fit_pca, train_semvae
from .train import TrainConfig, sfd_loss, train_sfd

__version__ = "0.1.0"

__all__ = [
    "CheckpointError", "Config", "ConfigError", "ContractError", "DataConfig", "Denoiser", "DenoiserConfig",
    "DependencyError", "DimensionError", "DivergenceError", "DualTime", "PhaseMask", "SamplerConfig",
    "ScheduleError", "SemVAE", "SemVaeConfig", "SfdError", "ToyDataset", "TrainConfig", "backend_name",
    "class_balanced_generate", "delta_t_sweep", "evaluate", "fit_pca", "frechet_gaussian", "generate",
    "integrate", "load_checkpoint", "mmd_rbf", "phase_mask", "save_checkpoint", "sfd_loss", "train_sfd",
    "train_semvae",
]
