from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from impedance_swarm.planner import (
    ApfConfig,
    Body,
    PenetrationError,
    attractive_force,
    attractive_potential,
    leader_velocity,
    repulsive_force,
    repulsive_potential,
)

CFG = ApfConfig()
H = 1e-5


def grad(f, p):
    p = np.asarray(p, dtype=float)
    g = np.zeros(2)
    for i in range(2):
        e = np.zeros(2)
        e[i] = H
        g[i] = (f(p + e) - f(p - e)) / (2 * H)
    return g


def test_attractive_unit_case_and_at_goal():
    assert attractive_force((0, 0), (1, 0), CFG) == pytest.approx((1, 0))
    assert attractive_force((2, 3), (2, 3), CFG).tolist() == [0.0, 0.0]


@given(st.floats(-5, 5), st.floats(-5, 5), st.floats(-5, 5), st.floats(-5, 5))
def test_attractive_matches_finite_difference(px, py, gx, gy):
    g = grad(lambda p: attractive_potential(p, (gx, gy), CFG), (px, py))
    f = attractive_force((px, py), (gx, gy), CFG)
    assert np.allclose(f, -g, rtol=1e-6, atol=1e-8)


def test_repulsion_zero_beyond_influence():
    b = [Body.disc((0, 0), 0.1)]
    assert repulsive_force((0.1 + 2 * CFG.rho0, 0), b, CFG).tolist() == [0.0, 0.0]


def test_repulsion_monotone_toward_surface():
    b = [Body.disc((0, 0), 0.1)]
    mags = [np.linalg.norm(repulsive_force((0.1 + rho, 0), b, ApfConfig(force_cap=1e9))) for rho in np.linspace(0.39, 0.01, 40)]
    assert all(b > a for a, b in zip(mags, mags[1:]))


def test_penetration_error_carries_id():
    with pytest.raises(PenetrationError) as e:
        repulsive_force((0.05, 0), [Body.disc((0, 0), 0.1, id=7)], CFG)
    assert e.value.obstacle_id == 7


def test_repulsion_matches_finite_difference_at_random_points():
    rng = np.random.default_rng(3)
    checked = 0
    while checked < 200:
        bodies = [Body.disc(rng.uniform(-1, 1, 2), rng.uniform(0.05, 0.2), i) for i in range(3)]
        bodies.append(Body(*rng.uniform(-1, 1, 4), 0.02, 3))
        p = rng.uniform(-1.3, 1.3, 2)
        surf = min(b.surface_distance(*p) for b in bodies)
        # stay clear of the bodies, the influence boundary and the cap
        if surf < 0.05 or any(abs(b.surface_distance(*p) - CFG.rho0) < 1e-3 for b in bodies):
            continue
        f = repulsive_force(p, bodies, ApfConfig(force_cap=1e9))
        if np.linalg.norm(f) >= CFG.force_cap:
            continue
        g = grad(lambda q: repulsive_potential(q, bodies, CFG), p)
        scale = max(np.linalg.norm(g), 1e-9)
        assert np.linalg.norm(f + g) / scale < 1e-5 or np.linalg.norm(f + g) < 1e-9
        checked += 1


def test_force_cap():
    f = repulsive_force((0.101, 0), [Body.disc((0, 0), 0.1)], CFG)
    assert np.linalg.norm(f) == pytest.approx(CFG.force_cap)


def test_leader_speed_saturates_far_away_and_stops_at_goal():
    v = leader_velocity((0, 0), (10, 0), [], CFG, 1.4)
    assert np.linalg.norm(v) == pytest.approx(1.4, abs=1e-12)
    assert leader_velocity((1, 1), (1, 1), [], CFG, 1.4).tolist() == [0.0, 0.0]
    with pytest.raises(ValueError):
        leader_velocity((0, 0), (1, 0), [], CFG, 0.0)


@given(
    st.tuples(st.floats(-2, 2), st.floats(-2, 2)),
    st.tuples(st.floats(-2, 2), st.floats(-2, 2)),
    st.floats(0, 2 * math.pi),
    st.tuples(st.floats(-3, 3), st.floats(-3, 3)),
)
def test_field_translation_and_rotation_invariance(pos, goal, theta, shift):
    center = np.array([0.3, -0.4])
    if np.linalg.norm(np.asarray(pos) - center) < 0.2:
        return
    c, s = math.cos(theta), math.sin(theta)
    R = np.array([[c, -s], [s, c]])
    shift = np.asarray(shift)
    base = leader_velocity(pos, goal, [Body.disc(center, 0.1)], CFG, 1.0)
    moved = leader_velocity(R @ pos + shift, R @ goal + shift, [Body.disc(R @ center + shift, 0.1)], CFG, 1.0)
    assert np.allclose(moved, R @ base, atol=1e-9)
    assert np.linalg.norm(base) <= 1.0 + 1e-12


def test_margin_inflates_obstacles():
    b = [Body.disc((0, 0), 0.1)]
    plain = np.linalg.norm(repulsive_force((0.45, 0), b, CFG))
    inflated = np.linalg.norm(repulsive_force((0.45, 0), b, ApfConfig(margin=0.2)))
    assert plain > 0 and inflated > plain


def test_capsule_gate_post_distance():
    post = Body(0.0, 0.0, 0.0, 1.0, 0.02)
    assert post.surface_distance(0.5, 0.5) == pytest.approx(0.48)
    assert post.surface_distance(0.0, 1.5) == pytest.approx(0.48)


def test_config_validation():
    with pytest.raises(ValueError):
        ApfConfig(k_rep=0)
    with pytest.raises(ValueError):
        ApfConfig(margin=-1)
