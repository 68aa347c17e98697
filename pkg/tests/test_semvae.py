import warnings

import numpy as np
import pytest

from sfd.composite import FoundationEncoder, foundation_features
from sfd.data import DataConfig, generate
from sfd.errors import DimensionError
from sfd.numerics import Rng, Tensor, backward, finite_difference_grad, no_grad, relative_error
from sfd.semvae import (GaussianPosterior, LatentStats, SemVAE, SemVaeConfig, cosine_rows, decode, encode, fit_pca,
                        kl_standard_normal, pca_project, pca_reconstruct, reparameterize, semvae_loss, train_semvae)

SMALL = SemVaeConfig(c_in=6, c_s=3, hidden=8, blocks=2, iterations=40, batch_size=16)


def test_kl_identities_exact():
    d = 7
    zero = GaussianPosterior(Tensor(np.zeros((3, d))), Tensor(np.zeros((3, d))))
    assert kl_standard_normal(zero).item() == 0.0
    shifted = GaussianPosterior(Tensor(np.ones((3, d))), Tensor(np.zeros((3, d))))
    assert kl_standard_normal(shifted).item() == 0.5 * d


def test_kl_matches_closed_form():
    mu, lv = np.array([[0.3, -1.0]]), np.array([[0.5, -0.7]])
    ref = 0.5 * np.sum(mu**2 + np.exp(lv) - lv - 1)
    assert kl_standard_normal(GaussianPosterior(Tensor(mu), Tensor(lv))).item() == pytest.approx(ref, rel=1e-15)


def test_untrained_posterior_is_standard_normal():
    m = SemVAE(SMALL, Rng(0))
    post = encode(m, Rng(1).normal((5, 6)))
    assert np.all(post.mu.data == 0) and np.all(post.log_var.data == 0)


def test_reparameterization_statistics():
    mu, lv = np.full((200_000, 1), 2.0), np.full((200_000, 1), np.log(0.25))
    s = reparameterize(GaussianPosterior(Tensor(mu), Tensor(lv)), Rng(3)).data
    assert abs(s.mean() - 2.0) < 0.005 and abs(s.std() - 0.5) < 0.005


def test_loss_components_and_gradients():
    m = SemVAE(SMALL, Rng(0))
    for p in m.params.values():
        p.data = p.data + 0.1 * Rng(9).normal(p.data.shape)
    f = Rng(1).normal((4, 6))

    def total():
        post = encode(m, f)
        s = reparameterize(post, Rng(5))
        return semvae_loss(decode(m, s), f, post, 0.1)

    t, mse, cos, kl = total()
    assert t.item() == pytest.approx(mse.item() + cos.item() + 0.1 * kl.item(), rel=1e-14)
    backward(t)
    for name in ("enc.in.w", "enc.out.w", "dec.block1.fc2.w", "dec.out.b"):
        p = m.params[name]
        fd = finite_difference_grad(lambda: total()[0].item(), p)
        assert relative_error(p.grad, fd) < 1e-5, name


def test_cosine_rows():
    a = Tensor(np.array([[1.0, 0.0], [1.0, 1.0]]))
    c = cosine_rows(a, np.array([[2.0, 0.0], [-1.0, -1.0]])).data
    np.testing.assert_allclose(c, [1.0, -1.0], atol=1e-8)


def test_training_reduces_loss_and_freezes():
    enc = FoundationEncoder.create(2, 6)
    feats = foundation_features(enc, generate(DataConfig(n_train=500, n_test=0), 0).x_train)
    res = train_semvae(SMALL, feats, Rng(0))
    assert np.mean(res.losses[-10:]) < np.mean(res.losses[:10])
    assert res.model.frozen and all(not p.requires_grad for p in res.model.params.values())
    z = res.model.latent(feats, Rng(1))
    assert abs(z.mean()) < 0.2 and abs(z.std() - 1) < 0.2
    again = train_semvae(SMALL, feats, Rng(0))
    assert again.losses == res.losses


def test_width_checks():
    m = SemVAE(SMALL, Rng(0))
    with pytest.raises(DimensionError):
        encode(m, np.ones((2, 5)))
    with pytest.raises(DimensionError):
        decode(m, np.ones((2, 4)))


def test_pca_recovers_principal_axes():
    r = Rng(0)
    x = r.normal((5000, 3)) * np.array([3.0, 1.0, 0.1])
    pca = fit_pca(x, 2, fit_stats=False)
    np.testing.assert_allclose(np.abs(pca.directions[:, 0]), [1, 0, 0], atol=0.02)
    np.testing.assert_allclose(np.abs(pca.directions[:, 1]), [0, 1, 0], atol=0.02)
    rec = pca_reconstruct(pca, pca_project(pca, x))
    assert np.mean((rec - x) ** 2) < 0.02
    full = fit_pca(x, 3, fit_stats=False)
    np.testing.assert_allclose(pca_reconstruct(full, pca_project(full, x)), x, atol=1e-9)


def test_pca_rank_warning():
    x = np.zeros((10, 3))
    x[:, 0] = np.arange(10.0)
    with warnings.catch_warnings(record=True) as w:
        warnings.simplefilter("always")
        fit_pca(x, 2)
    assert any("rank" in str(m.message) for m in w)


def test_latent_stats_round_trip():
    s = Rng(0).normal((100, 3)) * 4 + 1
    st = LatentStats.fit(s)
    np.testing.assert_allclose(st.invert(st.apply(s)), s)
    np.testing.assert_allclose(st.apply(s).std(axis=0), 1.0)
