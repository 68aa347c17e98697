"""Asynchronous semantic/texture timesteps and the three-phase samplers.

A single clock ``tau`` runs over ``[0, 1 + delta_t]``. The semantic block sees
``t_s = min(tau, 1)`` and the texture block ``t_z = max(0, tau - delta_t)``;
each block only moves while its phase mask is on, so each integrates exactly one
unit of its own time.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Protocol

import numpy as np

from .errors import ContractError, DimensionError, DivergenceError, ScheduleError, StiffnessError
from .numerics import Rng

# Dormand-Prince 5(4)
_DP_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_DP_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_DP_B5 = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0)
_DP_B4 = (5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40)


class VelocityModel(Protocol):
    def __call__(self, s: np.ndarray, z: np.ndarray, t_s, t_z, labels) -> tuple[np.ndarray, np.ndarray]: ...


@dataclass(frozen=True)
class DualTime:
    t_s: float
    t_z: float
    delta_t: float

    def check(self, tol: float = 1e-12) -> None:
        if not (0.0 <= self.t_z <= self.t_s <= 1.0):
            raise ScheduleError(f"need 0 <= t_z <= t_s <= 1, got ({self.t_s}, {self.t_z})")
        gap = self.t_s - self.t_z
        if gap > self.delta_t + tol:
            raise ScheduleError(f"offset {gap} exceeds delta_t {self.delta_t}")
        # once t_s is clamped at 1 the texture catches up, so equality holds only below 1
        if self.delta_t <= self.t_s < 1 and abs(gap - self.delta_t) > tol:
            raise ScheduleError(f"offset {gap} must equal delta_t {self.delta_t} while delta_t <= t_s < 1")


@dataclass(frozen=True)
class PhaseMask:
    m_s: int
    m_z: int

    @property
    def stage(self) -> int:
        return {(1, 0): 1, (1, 1): 2, (0, 1): 3}[(self.m_s, self.m_z)]


@dataclass(frozen=True)
class SamplerConfig:
    num_steps: int = 100
    method: str = "euler"
    atol: float = 1e-6
    rtol: float = 1e-3
    guidance_scale: float = 1.0
    delta_t: float = 0.3

    def __post_init__(self):
        if self.num_steps < 1:
            raise ContractError("num_steps must be >= 1")
        if self.atol <= 0 or self.rtol <= 0:
            raise ContractError("atol and rtol must be positive")
        if self.method not in ("euler", "adaptive", "adaptive_rk45"):
            raise ContractError(f"unknown sampler method {self.method!r}")
        if not 0.0 <= self.delta_t <= 1.0:
            raise ContractError("delta_t must lie in [0, 1]")
        if self.guidance_scale < 0:
            raise ContractError("guidance_scale must be >= 0")


def _check_delta(delta_t: float) -> None:
    if not 0.0 <= delta_t <= 1.0:
        raise ContractError(f"delta_t must lie in [0, 1], got {delta_t}")


def times_from_raw(u, delta_t: float):
    """Apply ``t_z = max(0, u - dt)`` then ``t_s = min(u, 1)`` to raw draws ``u``."""
    u = np.asarray(u, dtype=np.float64)
    return np.minimum(u, 1.0), np.maximum(0.0, u - delta_t)


def sample_training_times(rng: Rng, delta_t: float, shape=(), sampler: str = "uniform",
                          loc: float = 0.0, scale: float = 1.0):
    """Draw ``(t_s, t_z)`` with ``t_s ~ U(0, 1 + delta_t)`` before clamping.

    With ``sampler="logit_normal"`` the raw draw is ``(1 + delta_t) * sigmoid(loc + scale * n)``
    instead. Scalar ``shape`` returns a :class:`DualTime`; otherwise two arrays.
    """
    _check_delta(delta_t)
    if sampler == "uniform":
        u = np.asarray(rng.uniform(shape)) * (1.0 + delta_t)
    elif sampler == "logit_normal":
        from .flow import sample_time_logit_normal

        u = np.asarray(sample_time_logit_normal(rng, loc, scale, shape)) * (1.0 + delta_t)
    else:
        raise ContractError(f"unknown time sampler {sampler!r}")
    t_s, t_z = times_from_raw(u, delta_t)
    if shape == ():
        return DualTime(float(t_s), float(t_z), delta_t)
    return t_s, t_z


def clock_to_times(tau: float, delta_t: float) -> DualTime:
    _check_delta(delta_t)
    if not 0.0 <= tau <= 1.0 + delta_t + 1e-12:
        raise ContractError(f"clock {tau} outside [0, {1.0 + delta_t}]")
    d = Fraction(delta_t) if isinstance(tau, Fraction) else delta_t  # stay exact on the Fraction grid
    return DualTime(min(tau, 1), min(1, max(0, tau - d)), delta_t)


def phase_mask(t: DualTime, delta_t: float | None = None) -> PhaseMask:
    """The three-case table: ``[1,0]`` semantic-only, ``[1,1]`` joint, ``[0,1]`` texture-only."""
    dt = t.delta_t if delta_t is None else delta_t
    t_s, t_z = t.t_s, t.t_z
    # integer literals keep Fraction inputs exact
    if 0 <= t_s < dt and t_z == 0:
        return PhaseMask(1, 0)
    if dt <= t_s <= 1 and 0 <= t_z < 1 - dt:
        return PhaseMask(1, 1)
    if t_s == 1 and 1 - dt <= t_z <= 1:
        return PhaseMask(0, 1)
    raise ScheduleError(f"(t_s={t_s}, t_z={t_z}) matches no phase for delta_t={dt}")


def masked_velocity(v_s, v_z, mask: PhaseMask) -> tuple[np.ndarray, np.ndarray]:
    v_s = np.asarray(v_s, dtype=np.float64)
    v_z = np.asarray(v_z, dtype=np.float64)
    if v_s.shape[:-1] != v_z.shape[:-1]:
        raise DimensionError(f"velocity blocks disagree on leading shape: {v_s.shape} vs {v_z.shape}")
    return v_s * mask.m_s, v_z * mask.m_z


def guided_velocity(v_strong, v_weak, g: float):
    """``v_weak + g * (v_strong - v_weak)``."""
    v_strong = np.asarray(v_strong, dtype=np.float64)
    v_weak = np.asarray(v_weak, dtype=np.float64)
    if v_strong.shape != v_weak.shape:
        raise DimensionError(f"guidance shapes differ: {v_strong.shape} vs {v_weak.shape}")
    if g < 0:
        raise ContractError("guidance scale must be >= 0")
    return v_weak + g * (v_strong - v_weak)


def clock_grid(num_steps: int, delta_t: float) -> list[Fraction]:
    """Uniform clock grid ``k (1 + dt) / N`` merged with the phase boundaries ``dt`` and ``1``.

    Built in exact rational arithmetic on the binary value of ``delta_t`` so
    boundary membership and per-block durations are exact.
    """
    if num_steps < 1:
        raise ContractError("num_steps must be >= 1")
    _check_delta(delta_t)
    dt = Fraction(delta_t)
    end = 1 + dt
    pts = {end * k / num_steps for k in range(num_steps + 1)} | {dt, Fraction(1)}
    return sorted(pts)


def clock_steps(num_steps: int, delta_t: float) -> list[tuple[Fraction, Fraction, DualTime, PhaseMask]]:
    """``(tau_a, tau_b, times at tau_a, mask at tau_a)`` for every step, exactly."""
    grid = clock_grid(num_steps, delta_t)
    dt = Fraction(delta_t)
    out = []
    for a, b in zip(grid[:-1], grid[1:]):
        t = DualTime(min(a, Fraction(1)), max(Fraction(0), a - dt), dt)
        out.append((a, b, t, phase_mask(t)))
    return out


def effective_times(num_steps: int, delta_t: float) -> tuple[Fraction, Fraction]:
    """Exact total clock time during which each block's mask is on."""
    eff_s = eff_z = Fraction(0)
    for a, b, _, m in clock_steps(num_steps, delta_t):
        eff_s += (b - a) * m.m_s
        eff_z += (b - a) * m.m_z
    return eff_s, eff_z


def _field(model: VelocityModel, labels, delta_t: float, weak: VelocityModel | None, g: float):
    def f(t: "DualTime | float", s: np.ndarray, z: np.ndarray, mask: PhaseMask) -> tuple[np.ndarray, np.ndarray]:
        if not isinstance(t, DualTime):
            t = clock_to_times(t, delta_t)
        t_s, t_z = float(t.t_s), float(t.t_z)
        v_s, v_z = model(s, z, t_s, t_z, labels)
        if weak is not None:
            w_s, w_z = weak(s, z, t_s, t_z, labels)
            v_s, v_z = guided_velocity(v_s, w_s, g), guided_velocity(v_z, w_z, g)
        return masked_velocity(v_s, v_z, mask)

    return f


def _finite(*arrays) -> None:
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise DivergenceError("sampler state became non-finite")


def integrate_euler(model: VelocityModel, s0, z0, labels, cfg: SamplerConfig,
                    weak: VelocityModel | None = None, trace: list | None = None):
    """Fixed-step Euler over the snapped clock grid. Returns ``(s1, z1)``.

    The mask for a step is the one at its left clock point; masked-off blocks
    hold their value (noise in Stage I for z, the finished s in Stage III).
    """
    s = np.array(s0, dtype=np.float64, copy=True)
    z = np.array(z0, dtype=np.float64, copy=True)
    f = _field(model, labels, cfg.delta_t, weak, cfg.guidance_scale)
    for a, b, t, mask in clock_steps(cfg.num_steps, cfg.delta_t):
        if trace is not None:
            trace.append((float(a), float(t.t_s), float(t.t_z), mask.m_s, mask.m_z))
        v_s, v_z = f(t, s, z, mask)
        h = float(b - a)
        s = s + h * v_s
        z = z + h * v_z
        _finite(s, z)
    return s, z


def _segments(delta_t: float) -> list[tuple[float, float, PhaseMask]]:
    segs = []
    for lo, hi in ((0.0, delta_t), (delta_t, 1.0), (1.0, 1.0 + delta_t)):
        if hi > lo:
            segs.append((lo, hi, phase_mask(clock_to_times(lo, delta_t))))
    return segs


def integrate_adaptive(model: VelocityModel, s0, z0, labels, cfg: SamplerConfig,
                       weak: VelocityModel | None = None, stats: dict | None = None,
                       safety: float = 0.9, grow_min: float = 0.2, grow_max: float = 5.0, h_min: float = 1e-10):
    """Dormand-Prince 5(4) with proportional step control, run separately on
    each of the three clock segments so the masked field is smooth inside each.

    The error norm is the max over all entries of
    ``|err| / (atol + rtol * max(|y|, |y_new|))``.
    """
    s = np.array(s0, dtype=np.float64, copy=True)
    z = np.array(z0, dtype=np.float64, copy=True)
    split = s.shape[-1]
    f = _field(model, labels, cfg.delta_t, weak, cfg.guidance_scale)
    n_eval = n_accept = n_reject = 0

    for lo, hi, mask in _segments(cfg.delta_t):
        def rhs(tau, y):
            v_s, v_z = f(tau, y[..., :split], y[..., split:], mask)
            return np.concatenate([v_s, v_z], axis=-1)

        y = np.concatenate([s, z], axis=-1)
        tau = lo
        h = (hi - lo) / 10.0
        k1 = rhs(tau, y)
        n_eval += 1
        while tau < hi:
            h = min(h, hi - tau)
            if h < h_min:
                raise StiffnessError(f"step size underflow ({h:.3e}) at clock {tau:.6f}")
            ks = [k1]
            for i in range(1, 7):
                yi = y + h * sum(a * k for a, k in zip(_DP_A[i], ks) if a)
                ks.append(rhs(tau + _DP_C[i] * h, yi))
            n_eval += 6
            y5 = y + h * sum(b * k for b, k in zip(_DP_B5, ks) if b)
            y4 = y + h * sum(b * k for b, k in zip(_DP_B4, ks) if b)
            _finite(y5)
            scale = cfg.atol + cfg.rtol * np.maximum(np.abs(y), np.abs(y5))
            err = float(np.max(np.abs(y5 - y4) / scale)) if y.size else 0.0
            if err <= 1.0:
                tau = hi if hi - (tau + h) < 1e-14 else tau + h
                y = y5
                k1 = ks[6]  # first-same-as-last
                n_accept += 1
            else:
                n_reject += 1
            factor = grow_max if err == 0.0 else min(grow_max, max(grow_min, safety * err ** -0.2))
            h *= factor
        s, z = y[..., :split].copy(), y[..., split:].copy()
    if stats is not None:
        stats.update(evaluations=n_eval, accepted=n_accept, rejected=n_reject)
    return s, z


def draw_initial_noise(rng: Rng, n: int, c_s: int, c_z: int) -> tuple[np.ndarray, np.ndarray]:
    s0 = np.asarray(rng.normal((n, c_s)))
    z0 = np.asarray(rng.normal((n, c_z)))
    return s0, z0


def sample_euler(model: VelocityModel, label, rng: Rng, cfg: SamplerConfig, c_s: int, c_z: int, n: int = 1,
                 weak: VelocityModel | None = None):
    s0, z0 = draw_initial_noise(rng, n, c_s, c_z)
    return integrate_euler(model, s0, z0, label, cfg, weak)


def sample_adaptive(model: VelocityModel, label, rng: Rng, cfg: SamplerConfig, c_s: int, c_z: int, n: int = 1,
                    weak: VelocityModel | None = None):
    s0, z0 = draw_initial_noise(rng, n, c_s, c_z)
    return integrate_adaptive(model, s0, z0, label, cfg, weak)


def integrate(model: VelocityModel, s0, z0, labels, cfg: SamplerConfig, weak: VelocityModel | None = None):
    if cfg.method == "euler":
        return integrate_euler(model, s0, z0, labels, cfg, weak)
    return integrate_adaptive(model, s0, z0, labels, cfg, weak)


def schedule_trace(cfg: SamplerConfig) -> list[tuple[float, float, float, int, int]]:
    """``(tau, t_s, t_z, m_s, m_z)`` at the left end of every Euler step."""
    return [(float(a), float(t.t_s), float(t.t_z), m.m_s, m.m_z)
            for a, _, t, m in clock_steps(cfg.num_steps, cfg.delta_t)]
