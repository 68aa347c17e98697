import numpy as np
import pytest
from hypothesis import given, strategies as st

from sfd.errors import ContractError, DimensionError
from sfd.numerics import (Tensor, affine, backward, concat, finite_difference_grad, layer_norm, no_grad,
                          parameter, relative_error, take_rows)


def _check(build, *shapes, seed=0, tol=1e-6, positive=False):
    rng = np.random.default_rng(seed)
    params = []
    for s in shapes:
        d = rng.normal(size=s)
        params.append(parameter(np.abs(d) + 0.5 if positive else d))
    loss = build(*params)
    backward(loss)
    for p in params:
        fd = finite_difference_grad(lambda: build(*params).item(), p)
        assert relative_error(p.grad, fd) < tol


OPS = {
    "add_broadcast": (lambda a, b: ((a + b) * (a + b)).sum(), (3, 4), (4,)),
    "sub_mul": (lambda a, b: ((a - b) * a).sum(), (3, 4), (3, 1)),
    "div": (lambda a, b: (a / b).sum(), (2, 3), (2, 3)),
    "pow": (lambda a: (a**3).mean(), (5,)),
    "matmul": (lambda a, b: ((a @ b) ** 2).sum(), (3, 4), (4, 2)),
    "affine": (lambda x, w, b: (affine(x, w, b) ** 2).sum(), (3, 4), (4, 2), (2,)),
    "tanh": (lambda a: a.tanh().sum(), (4, 3)),
    "exp": (lambda a: a.exp().sum(), (4,)),
    "sigmoid": (lambda a: (a.sigmoid() * a).sum(), (6,)),
    "silu": (lambda a: (a.silu() ** 2).sum(), (3, 5)),
    "getitem": (lambda a: (a[:, 1:3] ** 2).sum() + a[0, 0], (3, 4)),
    "reshape_T": (lambda a: (a.reshape(2, 6).T ** 2).sum(axis=0).sum(), (3, 4)),
    "concat": (lambda a, b: (concat([a, b], axis=-1) ** 2).sum(), (2, 3), (2, 2)),
    "layer_norm": (lambda a, b: (layer_norm(a) * b).sum(), (3, 5), (3, 5)),
    "mean_axis": (lambda a: (a.mean(axis=1) ** 2).sum(), (3, 4)),
}


@pytest.mark.parametrize("name", sorted(OPS))
def test_op_gradients(name):
    build, *shapes = OPS[name]
    _check(build, *shapes)


def test_log_sqrt_gradients():
    _check(lambda a: (a.log() + a.sqrt()).sum(), (5,), positive=True)


def test_take_rows_scatter_adds_repeats():
    table = parameter(np.arange(6.0).reshape(3, 2))
    out = take_rows(table, np.array([0, 2, 0]))
    backward(out.sum())
    assert table.grad.tolist() == [[2.0, 2.0], [0.0, 0.0], [1.0, 1.0]]


def test_clip_gradient_is_zero_outside():
    a = parameter(np.array([-2.0, 0.5, 3.0]))
    backward(a.clip(-1.0, 1.0).sum())
    assert a.grad.tolist() == [0.0, 1.0, 0.0]


@given(st.integers(1, 4), st.integers(1, 4), st.integers(1, 4))
def test_matmul_gradient_closed_form(n, k, m):
    rng = np.random.default_rng(n * 16 + k * 4 + m)
    a, b = parameter(rng.normal(size=(n, k))), parameter(rng.normal(size=(k, m)))
    backward((a @ b).sum())
    np.testing.assert_allclose(a.grad, np.ones((n, m)) @ b.data.T)
    np.testing.assert_allclose(b.grad, a.data.T @ np.ones((n, m)))


def test_gradients_accumulate_and_reuse():
    a = parameter(np.array([2.0]))
    y = a * a + a  # a used twice
    backward(y.sum())
    assert a.grad.tolist() == [5.0]
    backward((a * 3.0).sum())
    assert a.grad.tolist() == [8.0]


def test_backward_needs_scalar():
    a = parameter(np.ones(3))
    with pytest.raises(ContractError):
        backward(a * 2.0)


def test_no_grad_records_nothing():
    a = parameter(np.ones(3))
    with no_grad():
        y = (a * 2.0).sum()
    assert not y.requires_grad
    assert backward(y) == {}


def test_constants_get_no_gradient():
    a = parameter(np.ones(2))
    c = Tensor(np.full(2, 3.0))
    backward((a * c).sum())
    assert c.grad is None and a.grad.tolist() == [3.0, 3.0]


def test_matmul_rank_checked():
    with pytest.raises(DimensionError):
        Tensor(np.ones(3)) @ Tensor(np.ones((3, 2)))
    with pytest.raises(DimensionError):
        Tensor(np.ones((2, 3))) @ Tensor(np.ones((2, 2)))


def test_deep_graph_does_not_recurse():
    a = parameter(np.array([1.0]))
    y = a
    for _ in range(5000):
        y = y * 1.0 + 0.0
    backward(y.sum())
    assert a.grad.tolist() == [1.0]
