from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from sfd.errors import ContractError, DimensionError, ScheduleError, StiffnessError
from sfd.numerics import Rng
from sfd.scheduler import (DualTime, PhaseMask, SamplerConfig, clock_grid, clock_steps, clock_to_times,
                           effective_times, guided_velocity, integrate, integrate_adaptive, integrate_euler,
                           masked_velocity, phase_mask, sample_training_times, schedule_trace, times_from_raw)

DELTAS = [k / 10 for k in range(11)]


def linear_field(s, z, t_s, t_z, labels):
    return -s, -z


def test_phase_table():
    assert phase_mask(DualTime(0.1, 0.0, 0.3)) == PhaseMask(1, 0)
    assert phase_mask(DualTime(0.3, 0.0, 0.3)) == PhaseMask(1, 1)
    assert phase_mask(DualTime(0.8, 0.5, 0.3)) == PhaseMask(1, 1)
    assert phase_mask(DualTime(1.0, 0.7, 0.3)) == PhaseMask(0, 1)
    assert phase_mask(DualTime(1.0, 1.0, 0.3)) == PhaseMask(0, 1)
    assert [PhaseMask(1, 0).stage, PhaseMask(1, 1).stage, PhaseMask(0, 1).stage] == [1, 2, 3]
    with pytest.raises(ScheduleError):
        phase_mask(DualTime(0.1, 0.05, 0.3))  # t_z > 0 before t_s reaches delta_t


def test_dual_time_invariants():
    DualTime(0.5, 0.2, 0.3).check()
    with pytest.raises(ScheduleError):
        DualTime(0.2, 0.5, 0.3).check()
    with pytest.raises(ScheduleError):
        DualTime(0.9, 0.1, 0.3).check()
    with pytest.raises(ScheduleError):
        DualTime(0.5, 0.3, 0.3).check()  # offset must equal delta_t once t_s >= delta_t


@given(st.floats(0.0, 1.3), st.sampled_from([0.0, 0.3, 1.0]))
def test_clock_points_are_on_schedule(frac, dt):
    tau = frac / 1.3 * (1 + dt)
    t = clock_to_times(tau, dt)
    t.check()
    assert phase_mask(t).stage in (1, 2, 3)


@pytest.mark.parametrize("dt", DELTAS)
@pytest.mark.parametrize("n", [1, 2, 7, 100])
def test_grid_exhaustive(dt, n):
    grid = clock_grid(n, dt)
    assert grid[0] == 0 and grid[-1] == 1 + Fraction(dt)
    assert Fraction(dt) in grid and Fraction(1) in grid
    assert all(b > a for a, b in zip(grid, grid[1:]))
    for _, _, t, m in clock_steps(n, dt):
        t.check(tol=0)
        assert m == phase_mask(t)
    assert effective_times(n, dt) == (1, 1)


def test_schedule_trace_extremes():
    sync = schedule_trace(SamplerConfig(num_steps=10, delta_t=0.0))
    assert all(ts == tz and (ms, mz) == (1, 1) for _, ts, tz, ms, mz in sync)
    seq = schedule_trace(SamplerConfig(num_steps=10, delta_t=1.0))
    masks = [(ms, mz) for *_, ms, mz in seq]
    # teacher forcing: the semantic phase fully precedes the texture phase
    first_texture = masks.index((0, 1))
    assert set(masks[:first_texture]) == {(1, 0)} and set(masks[first_texture:]) == {(0, 1)}


def test_training_time_clamping():
    t_s, t_z = times_from_raw(np.array([0.0, 0.2, 0.3, 1.0, 1.3]), 0.3)
    np.testing.assert_allclose(t_s, [0, 0.2, 0.3, 1.0, 1.0])
    np.testing.assert_allclose(t_z, [0, 0, 0, 0.7, 1.0])


def test_training_time_probabilities():
    t_s, t_z = sample_training_times(Rng(0), 0.3, (200_000,))
    p = 0.3 / 1.3
    assert abs(np.mean(t_z == 0) - p) < 0.005
    assert abs(np.mean(t_s == 1) - p) < 0.005
    assert np.all(t_s - t_z <= 0.3 + 1e-12)
    t = sample_training_times(Rng(1), 0.3)
    assert isinstance(t, DualTime)
    l_s, _ = sample_training_times(Rng(0), 0.3, (1000,), "logit_normal")
    assert l_s.min() > 0
    with pytest.raises(ContractError):
        sample_training_times(Rng(0), 0.3, (2,), "beta")


def test_zero_offset_is_synchronous():
    t_s, t_z = sample_training_times(Rng(0), 0.0, (1000,))
    assert np.array_equal(t_s, t_z)


def test_masked_and_guided_velocity():
    v_s, v_z = masked_velocity(np.ones((2, 3)), np.ones((2, 1)), PhaseMask(0, 1))
    assert np.all(v_s == 0) and np.all(v_z == 1)
    with pytest.raises(DimensionError):
        masked_velocity(np.ones((2, 3)), np.ones((3, 1)), PhaseMask(1, 1))
    np.testing.assert_allclose(guided_velocity(np.array([2.0]), np.array([1.0]), 3.0), [4.0])
    np.testing.assert_allclose(guided_velocity(np.array([2.0]), np.array([1.0]), 1.0), [2.0])
    with pytest.raises(ContractError):
        guided_velocity(np.array([2.0]), np.array([1.0]), -1.0)


@pytest.mark.parametrize("dt", [0.0, 0.3, 1.0])
def test_constant_field_moves_each_block_one_unit(dt):
    def const(s, z, *_):
        return np.full_like(s, 2.0), np.full_like(z, 3.0)

    for method, n in (("euler", 7), ("adaptive", 1)):
        s, z = integrate(const, np.zeros((1, 2)), np.zeros((1, 1)), 0, SamplerConfig(num_steps=n, method=method, delta_t=dt))
        np.testing.assert_allclose(s, 2.0, rtol=1e-12)
        np.testing.assert_allclose(z, 3.0, rtol=1e-12)


def test_stage_one_holds_texture_noise():
    seen = []

    def field(s, z, t_s, t_z, labels):
        seen.append((t_s, t_z, z.copy()))
        return -s, -z

    z0 = np.array([[5.0]])
    integrate_euler(field, np.ones((1, 1)), z0, 0, SamplerConfig(num_steps=10, delta_t=0.5))
    assert all(np.array_equal(z, z0) for t_s, t_z, z in seen if t_z == 0.0)


@pytest.mark.parametrize("dt", [0.0, 0.3, 1.0])
def test_euler_first_order(dt):
    errs = []
    for n in (32, 64, 128, 256, 512, 1024):
        s, _ = integrate_euler(linear_field, np.ones((1, 1)), np.ones((1, 1)), 0, SamplerConfig(num_steps=n, delta_t=dt))
        errs.append(abs(s[0, 0] - np.exp(-1)))
    ratios = [a / b for a, b in zip(errs, errs[1:])]
    assert all(1.8 <= r <= 2.2 for r in ratios), ratios


@pytest.mark.parametrize("dt", [0.0, 0.3, 1.0])
def test_adaptive_meets_tolerance(dt):
    y0 = np.array([[1.0, -2.0, 0.5]])
    stats = {}
    cfg = SamplerConfig(method="adaptive", atol=1e-6, rtol=1e-3, delta_t=dt)
    s, z = integrate_adaptive(linear_field, y0, y0[:, :2], 0, cfg, stats=stats)
    exact = y0 * np.exp(-1)
    assert np.all(np.abs(s - exact) <= 1e-6 + 1e-3 * np.abs(exact))
    assert stats["accepted"] >= 1 and stats["evaluations"] >= 7


def test_adaptive_tightens_with_tolerance():
    y0 = np.ones((1, 1))
    loose = integrate_adaptive(linear_field, y0, y0, 0, SamplerConfig(method="adaptive", rtol=1e-3))[0]
    tight = integrate_adaptive(linear_field, y0, y0, 0, SamplerConfig(method="adaptive", atol=1e-10, rtol=1e-9))[0]
    assert abs(tight[0, 0] - np.exp(-1)) < 1e-9 < abs(loose[0, 0] - np.exp(-1))


def test_adaptive_reports_stiffness():
    def stiff(s, z, t_s, t_z, labels):
        return -1e12 * s, -1e12 * z

    with pytest.raises(StiffnessError):
        integrate_adaptive(stiff, np.ones((1, 1)), np.ones((1, 1)), 0, SamplerConfig(method="adaptive"))


def test_sampler_config_validation():
    with pytest.raises(ContractError):
        SamplerConfig(num_steps=0)
    with pytest.raises(ContractError):
        SamplerConfig(method="heun")
    with pytest.raises(ContractError):
        SamplerConfig(delta_t=1.5)


def test_worked_examples():
    t_s, t_z = times_from_raw(np.array([1.2, 0.1]), 0.3)
    np.testing.assert_allclose(t_s, [1.0, 0.1])
    np.testing.assert_allclose(t_z, [0.9, 0.0], atol=1e-15)
    cases = {0.2: ((0.2, 0.0), (1, 0)), 0.5: ((0.5, 0.2), (1, 1)), 1.1: ((1.0, 0.8), (0, 1))}
    for tau, ((ts, tz), mask) in cases.items():
        t = clock_to_times(tau, 0.3)
        assert t.t_s == pytest.approx(ts) and t.t_z == pytest.approx(tz)
        assert (phase_mask(t).m_s, phase_mask(t).m_z) == mask
    with pytest.raises(ContractError):
        clock_to_times(1.5, 0.3)
