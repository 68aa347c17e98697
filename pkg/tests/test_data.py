import numpy as np
import pytest

from sfd.data import DataConfig, component_means, generate, load_dataset, nearest_mean_accuracy, sample_mixture, save_dataset
from sfd.errors import ContractError, DependencyError
from sfd.numerics import Rng


def test_default_components_are_recoverable():
    cfg = DataConfig()
    ds = generate(cfg, 0)
    assert nearest_mean_accuracy(cfg, ds.x_test, ds.y_test) > 0.95
    assert ds.x_train.shape == (10000, 2) and ds.x_test.shape == (2000, 2)


def test_component_proportions_uniform():
    cfg = DataConfig(n_train=100_000, n_test=0)
    ds = generate(cfg, 0)
    freq = np.bincount(ds.y_train, minlength=8) / 100_000
    assert np.all(np.abs(freq - 1 / 8) < 0.02)


def test_means_on_circle():
    m = component_means(DataConfig())
    np.testing.assert_allclose(np.linalg.norm(m, axis=1), 4.0)
    x, y = sample_mixture(DataConfig(), 20_000, Rng(1))
    for k in range(8):
        np.testing.assert_allclose(x[y == k].mean(axis=0), m[k], atol=0.05)


def test_extra_dimensions_are_anisotropic():
    cfg = DataConfig(dim=4)
    x, y = sample_mixture(cfg, 20_000, Rng(2))
    assert x.shape == (20_000, 4)
    std = x[y == 0, 2:].std(axis=0)  # component 0 stretches dim 2
    assert std[0] == pytest.approx(0.3, rel=0.05) and std[1] == pytest.approx(0.1, rel=0.05)
    with pytest.raises(ContractError):
        sample_mixture(DataConfig(dim=1), 5, Rng(0))


def test_file_round_trip_and_determinism(tmp_path):
    cfg = DataConfig(n_train=50, n_test=10)
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    save_dataset(generate(cfg, 3), a)
    save_dataset(generate(cfg, 3), b)
    assert a.read_bytes() == b.read_bytes()
    ds = load_dataset(a)
    ref = generate(cfg, 3)
    assert np.array_equal(ds.x_train, ref.x_train) and np.array_equal(ds.y_test, ref.y_test)
    assert a.read_text().splitlines()[0] == "sfd-dataset D=2 K=8 N=60 N_train=50"


def test_load_errors(tmp_path):
    with pytest.raises(DependencyError):
        load_dataset(tmp_path / "missing.csv")
    bad = tmp_path / "bad.csv"
    bad.write_text("hello\n")
    with pytest.raises(ContractError):
        load_dataset(bad)
