"""Artificial potential field guidance for the leader drone.

Quadratic attraction to the goal and Khatib-style inverse-distance
repulsion from obstacle surfaces. Obstacles are capsules: a segment plus a
radius, so discs (zero-length segments) and gate posts share one code path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np


class PenetrationError(ValueError):
    def __init__(self, obstacle_id: int, depth: float):
        super().__init__(f"position lies inside obstacle {obstacle_id} (surface distance {depth:.4f} m)")
        self.obstacle_id = obstacle_id


@dataclass(frozen=True)
class Body:
    ax: float
    ay: float
    bx: float
    by: float
    radius: float
    id: int = -1

    @classmethod
    def disc(cls, center: Sequence[float], radius: float, id: int = -1) -> Body:
        return cls(center[0], center[1], center[0], center[1], radius, id)

    def closest_point(self, px: float, py: float) -> tuple[float, float]:
        ex, ey = self.bx - self.ax, self.by - self.ay
        ll = ex * ex + ey * ey
        if ll == 0.0:
            return self.ax, self.ay
        s = ((px - self.ax) * ex + (py - self.ay) * ey) / ll
        s = 0.0 if s < 0.0 else 1.0 if s > 1.0 else s
        return self.ax + s * ex, self.ay + s * ey

    def surface_distance(self, px: float, py: float) -> float:
        cx, cy = self.closest_point(px, py)
        return math.hypot(px - cx, py - cy) - self.radius


@dataclass(frozen=True)
class ApfConfig:
    k_att: float = 1.0
    k_rep: float = 0.02
    rho0: float = 0.4
    force_cap: float = 5.0
    margin: float = 0.0  # obstacles are inflated by this much before repelling

    def __post_init__(self):
        if min(self.k_att, self.k_rep, self.rho0, self.force_cap) <= 0:
            raise ValueError("APF gains, influence distance and cap must be positive")
        if self.margin < 0:
            raise ValueError("margin must be non-negative")


MIN_RHO = 1e-3


def _rho(b: Body, dist: float, cfg: ApfConfig) -> float:
    surface = dist - b.radius
    if surface <= 0:
        raise PenetrationError(b.id, surface)
    # inside the inflated margin but outside the body: saturate, the cap takes over
    return max(surface - cfg.margin, MIN_RHO)


def attractive_potential(pos, goal, cfg: ApfConfig) -> float:
    diff = np.asarray(pos, dtype=float) - np.asarray(goal, dtype=float)
    return 0.5 * cfg.k_att * float(diff @ diff)


def attractive_force(pos, goal, cfg: ApfConfig) -> np.ndarray:
    return cfg.k_att * (np.asarray(goal, dtype=float) - np.asarray(pos, dtype=float))


def repulsive_potential(pos, bodies: Sequence[Body], cfg: ApfConfig) -> float:
    u = 0.0
    for b in bodies:
        cx, cy = b.closest_point(pos[0], pos[1])
        rho = _rho(b, math.hypot(pos[0] - cx, pos[1] - cy), cfg)
        if rho <= cfg.rho0:
            u += 0.5 * cfg.k_rep * (1.0 / rho - 1.0 / cfg.rho0) ** 2
    return u


def repulsion_xy(px: float, py: float, bodies: Sequence[Body], cfg: ApfConfig) -> tuple[float, float]:
    fx = fy = 0.0
    for b in bodies:
        cx, cy = b.closest_point(px, py)
        dx, dy = px - cx, py - cy
        dist = math.hypot(dx, dy)
        rho = _rho(b, dist, cfg)
        if rho <= cfg.rho0:
            mag = cfg.k_rep * (1.0 / rho - 1.0 / cfg.rho0) / (rho * rho)
            fx += mag * dx / dist
            fy += mag * dy / dist
    n = math.hypot(fx, fy)
    if n > cfg.force_cap:
        fx, fy = fx * cfg.force_cap / n, fy * cfg.force_cap / n
    return fx, fy


def repulsive_force(pos, bodies: Sequence[Body], cfg: ApfConfig) -> np.ndarray:
    """Summed surface repulsion, zero beyond ``rho0``, clamped to ``force_cap``."""
    return np.array(repulsion_xy(float(pos[0]), float(pos[1]), bodies, cfg))


def velocity_xy(px, py, gx, gy, bodies, cfg: ApfConfig, v_max: float) -> tuple[float, float]:
    rx, ry = repulsion_xy(px, py, bodies, cfg)
    vx = cfg.k_att * (gx - px) + rx
    vy = cfg.k_att * (gy - py) + ry
    n = math.hypot(vx, vy)
    if n > v_max:
        vx, vy = vx * v_max / n, vy * v_max / n
    return vx, vy


def leader_velocity(pos, goal, bodies: Sequence[Body], cfg: ApfConfig, v_max: float) -> np.ndarray:
    if not v_max > 0:
        raise ValueError("v_max must be positive")
    return np.array(velocity_xy(float(pos[0]), float(pos[1]), float(goal[0]), float(goal[1]), bodies, cfg, v_max))
