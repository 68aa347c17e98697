import numpy as np
import pytest

from sfd.errors import DivergenceError
from sfd.numerics import AdamWState, adamw_step, parameter


def _reference(p, grads, lr, b1, b2, eps, wd):
    """Textbook AdamW with decoupled decay, one array, plain Python floats."""
    m = v = 0.0
    for t, g in enumerate(grads, 1):
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        p = p * (1 - lr * wd)
        p = p - lr * (m / (1 - b1**t)) / ((v / (1 - b2**t)) ** 0.5 + eps)
    return p


@pytest.mark.parametrize("wd", [0.0, 0.1])
def test_matches_textbook_update(wd):
    grads = [0.3, -1.2, 0.7, 2.0, -0.1]
    p = parameter(np.array([1.5]))
    st = AdamWState(lr=0.05, weight_decay=wd)
    for g in grads:
        adamw_step(st, {"p": p}, {"p": np.array([g])})
    assert p.data[0] == pytest.approx(_reference(1.5, grads, 0.05, 0.9, 0.999, 1e-8, wd), rel=1e-14)
    assert st.step == len(grads)


def test_first_step_moves_by_lr_times_sign():
    p = parameter(np.array([0.0, 0.0]))
    adamw_step(AdamWState(lr=0.01), {"p": p}, {"p": np.array([3.0, -0.002])})
    np.testing.assert_allclose(p.data, [-0.01, 0.01], rtol=1e-5)


def test_missing_gradient_counts_as_zero():
    p = parameter(np.array([1.0]))
    adamw_step(AdamWState(lr=0.1), {"p": p}, {})
    assert p.data[0] == 1.0


def test_non_finite_gradient_aborts_before_update():
    p, q = parameter(np.array([1.0])), parameter(np.array([2.0]))
    st = AdamWState()
    with pytest.raises(DivergenceError):
        adamw_step(st, {"p": p, "q": q}, {"p": np.array([1.0]), "q": np.array([np.nan])})
    assert p.data[0] == 1.0 and st.step == 0


def test_minimizes_quadratic():
    p = parameter(np.array([5.0, -3.0]))
    st = AdamWState(lr=0.1)
    for _ in range(500):
        adamw_step(st, {"p": p}, {"p": 2.0 * p.data})
    assert np.all(np.abs(p.data) < 1e-2)
