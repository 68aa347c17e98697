import numpy as np
import pytest
from hypothesis import given, strategies as st

from sfd.composite import (CompositeLatent, FoundationEncoder, foundation_features, make_composite, split_composite,
                           texture_decode, texture_encode)
from sfd.errors import DimensionError
from sfd.numerics import Rng


def test_encoder_is_deterministic_and_read_only():
    a, b = FoundationEncoder.create(2), FoundationEncoder.create(2)
    assert np.array_equal(a.weight, b.weight) and np.array_equal(a.bias, b.bias)
    assert (a.data_dim, a.width) == (2, 64)
    with pytest.raises(ValueError):
        a.weight[0, 0] = 1.0
    assert not np.array_equal(a.weight, FoundationEncoder.create(2, seed=99).weight)


def test_features_bounded_and_lipschitz():
    enc = FoundationEncoder.create(2)
    x = Rng(0).normal((200, 2)) * 4
    y = Rng(1).normal((200, 2)) * 4
    fx, fy = foundation_features(enc, x), foundation_features(enc, y)
    assert fx.shape == (200, 64) and np.all(np.abs(fx) < 1)
    ratio = np.linalg.norm(fx - fy, axis=1) / np.linalg.norm(x - y, axis=1)
    assert ratio.max() <= enc.lipschitz_bound() + 1e-12
    with pytest.raises(DimensionError):
        foundation_features(enc, np.ones((3, 5)))


def test_texture_channel_is_identity_copy():
    x = np.arange(6.0).reshape(3, 2)
    z = texture_encode(x)
    assert np.array_equal(z, x) and z is not x
    assert np.array_equal(texture_decode(z), x)


@given(st.integers(1, 5), st.integers(0, 6), st.integers(0, 4))
def test_composite_round_trip(n, cs, cz):
    r = Rng(n)
    s, z = r.normal((n, cs)), r.normal((n, cz))
    c = make_composite(s, z)
    assert c.width == cs + cz and c.split == cs
    s2, z2 = split_composite(c.data, cs)
    assert np.array_equal(s2, s) and np.array_equal(z2, z)
    assert split_composite(c)[0] is c.s


def test_composite_contracts():
    with pytest.raises(DimensionError):
        make_composite(np.ones((2, 3)), np.ones((3, 2)))
    with pytest.raises(DimensionError):
        split_composite(np.ones((2, 3)), 4)
    assert isinstance(make_composite(np.ones((1, 1)), np.ones((1, 1))), CompositeLatent)
