"""Miniature configurations shared by several test modules."""
import numpy as np

from sfd.composite import FoundationEncoder, foundation_features
from sfd.data import DataConfig, generate
from sfd.denoiser import DenoiserConfig
from sfd.numerics import Rng
from sfd.semvae import SemVaeConfig, fit_pca, train_semvae

MINI_DATA = DataConfig(n_train=200, n_test=80)
MINI_SEMVAE = SemVaeConfig(c_in=6, c_s=3, hidden=8, blocks=1, iterations=20, batch_size=16)
MINI_MODEL = DenoiserConfig(c_s=3, c_z=2, c_in=6, hidden=8, blocks=2, num_classes=8, repa_depth=1, time_frequencies=4)


def mini_setup(compressor="pca", seed=0):
    ds = generate(MINI_DATA, seed)
    enc = FoundationEncoder.create(ds.dim, MINI_SEMVAE.c_in)
    feats = foundation_features(enc, ds.x_train)
    if compressor == "pca":
        comp = fit_pca(feats, MINI_SEMVAE.c_s)
    else:
        comp = train_semvae(MINI_SEMVAE, feats, Rng(seed)).model
    return ds, enc, comp


def perturb(params, seed=0, scale=0.1):
    for i, p in enumerate(params.values()):
        p.data = p.data + scale * np.asarray(Rng(seed).fork(i).normal(p.data.shape))
