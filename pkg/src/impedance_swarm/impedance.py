"""Virtual impedance links: mass-spring-damper integration and obstacle deflection."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

R_IMP = 0.65
K_IMPF = 0.45


@dataclass(frozen=True)
class LinkState:
    delta_x: np.ndarray  # position error against the link setpoint (m)
    delta_v: np.ndarray  # velocity error (m/s)

    @classmethod
    def of(cls, delta_x: Sequence[float], delta_v: Sequence[float] = (0.0, 0.0)) -> LinkState:
        return cls(np.asarray(delta_x, dtype=float), np.asarray(delta_v, dtype=float))


@dataclass(frozen=True)
class DeflectionConstants:
    r_imp: float = R_IMP
    k_impF: float = K_IMPF

    def __post_init__(self):
        if not (self.r_imp > 0 and self.k_impF > 0):
            raise ValueError("deflection radius and gain must be positive")

    @property
    def magnitude(self) -> float:
        return self.k_impF * self.r_imp


def link_accel(dx: float, dv: float, f: float, m: float, k: float, d: float) -> float:
    return (f - d * dv - k * dx) / m


def step_link(state: LinkState, profile, f_ext: Sequence[float], dt: float) -> LinkState:
    """One semi-implicit Euler step of ``m*a + d*v + k*x = F`` per axis."""
    if not 0.0 < dt <= 0.1:
        raise ValueError(f"dt must lie in (0, 0.1], got {dt}")
    f = np.asarray(f_ext, dtype=float)
    if not (np.all(np.isfinite(f)) and np.all(np.isfinite(state.delta_x)) and np.all(np.isfinite(state.delta_v))):
        raise ValueError("non-finite link input")
    a = (f - profile.d * state.delta_v - profile.k * state.delta_x) / profile.m
    dv = state.delta_v + a * dt
    return LinkState(state.delta_x + dv * dt, dv)


def simulate_link(profile, f_ext, x0, v0, dt: float, t_end: float) -> tuple[np.ndarray, np.ndarray]:
    """Repeated :func:`step_link`; returns sample times and displacements."""
    n = int(round(t_end / dt))
    state = LinkState.of(x0, v0)
    xs = np.empty((n + 1, 2))
    xs[0] = state.delta_x
    for i in range(n):
        state = step_link(state, profile, f_ext, dt)
        xs[i + 1] = state.delta_x
    return np.arange(n + 1) * dt, xs


def _closed_form_1d(m, k, d, f, x0, v0, t):
    # shift to the static equilibrium f/k, then solve the homogeneous system
    y0 = x0 - f / k
    disc = d * d - 4.0 * m * k
    alpha = d / (2.0 * m)
    if abs(disc) <= 1e-12:
        return f / k + (y0 + (v0 + alpha * y0) * t) * np.exp(-alpha * t)
    if disc < 0:
        w = math.sqrt(-disc) / (2.0 * m)
        return f / k + np.exp(-alpha * t) * (y0 * np.cos(w * t) + (v0 + alpha * y0) / w * np.sin(w * t))
    s = math.sqrt(disc) / (2.0 * m)
    r1, r2 = -alpha + s, -alpha - s
    c1 = (v0 - r2 * y0) / (r1 - r2)
    c2 = y0 - c1
    return f / k + c1 * np.exp(r1 * t) + c2 * np.exp(r2 * t)


def closed_form_response(profile, f_const, x0, v0, t):
    """Exact displacement of the linear link under a constant force.

    ``t`` may be a scalar or an array; the result has shape ``(..., 2)``.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("t must be non-negative")
    cols = [
        _closed_form_1d(profile.m, profile.k, profile.d, float(f_const[i]), float(x0[i]), float(v0[i]), t)
        for i in range(2)
    ]
    return np.stack(cols, axis=-1)


def deflection_xy(px: float, py: float, ox: float, oy: float, r_imp: float, magnitude: float) -> tuple[float, float, bool]:
    """Scalar core of :func:`obstacle_deflection`; the flag marks the coincident fallback."""
    dx, dy = px - ox, py - oy
    dist = math.hypot(dx, dy)
    if dist >= r_imp:
        return 0.0, 0.0, False
    if dist == 0.0:
        return magnitude, 0.0, True
    return magnitude * dx / dist, magnitude * dy / dist, False


def obstacle_deflection(drone_pos, obstacle_pos, consts: DeflectionConstants = DeflectionConstants()) -> np.ndarray:
    """Setpoint offset pushing a drone radially away from a nearby obstacle.

    Zero outside ``r_imp``; otherwise of fixed length ``k_impF * r_imp``.
    A drone sitting exactly on the obstacle center is pushed along +x.
    """
    p = np.asarray(drone_pos, dtype=float)
    o = np.asarray(obstacle_pos, dtype=float)
    if not (np.all(np.isfinite(p)) and np.all(np.isfinite(o))):
        raise ValueError("positions must be finite")
    x, y, _ = deflection_xy(p[0], p[1], o[0], o[1], consts.r_imp, consts.magnitude)
    return np.array([x, y])


def clamp_norm(x: float, y: float, limit: float) -> tuple[float, float]:
    n = math.hypot(x, y)
    if n > limit:
        s = limit / n
        return x * s, y * s
    return x, y


def combined_deflection(drone_pos, obstacle_positions, consts: DeflectionConstants = DeflectionConstants()) -> np.ndarray:
    """Vector sum of the per-obstacle offsets, clamped to the single-link magnitude."""
    sx = sy = 0.0
    for o in obstacle_positions:
        x, y, _ = deflection_xy(drone_pos[0], drone_pos[1], o[0], o[1], consts.r_imp, consts.magnitude)
        sx += x
        sy += y
    return np.array(clamp_norm(sx, sy, consts.magnitude))
