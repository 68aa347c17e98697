import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from sfd import kernels
from sfd.numerics import Rng

# published splitmix64 outputs for seed 0
SPLITMIX_SEED0 = [0xE220A8397B1DCDAF, 0x6E789E6AA1B965F4, 0x06C45D188009454F]


def test_uniform_matches_published_splitmix64():
    u = Rng(0).uniform((3,))
    expected = [(v >> 11) * 2.0**-53 for v in SPLITMIX_SEED0]
    assert u.tolist() == expected


def test_mix64_is_the_splitmix_finalizer():
    assert kernels.mix64(0x9E3779B97F4A7C15) == SPLITMIX_SEED0[0]


def test_normal_is_box_muller_over_the_same_stream():
    z = Rng(0).normal((2,))
    u1 = 1.0 - (SPLITMIX_SEED0[0] >> 11) * 2.0**-53
    u2 = (SPLITMIX_SEED0[1] >> 11) * 2.0**-53
    r = math.sqrt(-2.0 * math.log(u1))
    assert z[0] == pytest.approx(r * math.cos(2 * math.pi * u2), rel=1e-15)
    assert z[1] == pytest.approx(r * math.sin(2 * math.pi * u2), rel=1e-15)


@given(st.integers(0, 2**64 - 1), st.integers(0, 50), st.integers(0, 50))
def test_split_draws_equal_one_draw(seed, a, b):
    whole = Rng(seed).uniform((a + b,))
    r = Rng(seed)
    parts = np.concatenate([r.uniform((a,)), r.uniform((b,))])
    assert np.array_equal(whole, parts)
    assert r.state() == (seed, a + b)


@given(st.integers(0, 2**64 - 1), st.integers(0, 1000))
def test_state_reentry(seed, skip):
    r = Rng(seed)
    r.uniform((skip,))
    resumed = Rng.from_state(r.state())
    assert np.array_equal(r.normal((7,)), resumed.normal((7,)))


def test_fork_is_deterministic_and_does_not_advance_parent():
    r = Rng(42)
    a = r.fork(1, 2).uniform((5,))
    assert r.state() == (42, 0)
    assert np.array_equal(a, Rng(42).fork(1, 2).uniform((5,)))
    assert not np.array_equal(a, r.fork(2, 1).uniform((5,)))
    assert not np.array_equal(a, r.fork(1).uniform((5,)))


def test_uniform_range_and_moments():
    u = Rng(3).uniform((200_000,))
    assert u.min() >= 0.0 and u.max() < 1.0
    assert abs(u.mean() - 0.5) < 0.005
    assert abs(u.var() - 1 / 12) < 0.002


def test_normal_moments():
    z = Rng(4).normal((200_000,))
    assert abs(z.mean()) < 0.01
    assert abs(z.std() - 1.0) < 0.01
    assert np.all(np.isfinite(z))


def test_integers_and_permutation():
    k = Rng(5).integers(7, (70_000,))
    assert k.min() == 0 and k.max() == 6
    counts = np.bincount(k, minlength=7)
    assert np.all(np.abs(counts / 70_000 - 1 / 7) < 0.01)
    p = Rng(5).permutation(50)
    assert sorted(p.tolist()) == list(range(50))


def test_scalar_shapes_return_floats():
    r = Rng(1)
    assert isinstance(r.uniform(), float)
    assert isinstance(r.normal(), float)
    assert isinstance(r.integers(3), int)


def test_seed_range_checked():
    with pytest.raises(ValueError):
        Rng(-1)
    with pytest.raises(ValueError):
        Rng(2**64)
