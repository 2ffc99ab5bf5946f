from __future__ import annotations

import math
from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from impedance_swarm.impedance import (
    DeflectionConstants,
    LinkState,
    closed_form_response,
    combined_deflection,
    obstacle_deflection,
    simulate_link,
    step_link,
)
from impedance_swarm.retrieval import ImpedanceProfile

HARD = ImpedanceProfile(m=1.0, k=10.0, d=5.0, F=0.5, c=0.3, v_max=1.4)
SOFT = ImpedanceProfile(m=5.0, k=0.5, d=1.5, F=0.3, c=0.7, v_max=0.7)


def profile(m, k, d):
    # the link only reads m, k and d, which lets the tests use values outside the profile ranges
    return SimpleNamespace(m=m, k=k, d=d)


def test_undamped_oscillator_half_period():
    _, xs = simulate_link(profile(1, 1, 0.0), (0, 0), (1, 0), (0, 0), 1e-3, math.pi)
    assert xs[-1] == pytest.approx((-1.0, 0.0), abs=5e-3)


def test_static_equilibrium_is_force_over_stiffness():
    for m, d in [(1.0, 3.0), (1.5, 5.0)]:
        _, xs = simulate_link(profile(m, 7.0, d), (0.5, 0.0), (0, 0), (0, 0), 0.01, 30.0)
        assert xs[-1] == pytest.approx((0.5 / 7, 0.0), abs=1e-4)


def test_stiff_hard_profile_overshoot_small():
    p = profile(1.0, 10.0, 5.0)
    zeta = p.d / (2 * math.sqrt(p.m * p.k))
    assert zeta == pytest.approx(0.79, abs=0.005)
    t = np.linspace(0, 10, 5001)
    exact = closed_form_response(p, (1.0, 0.0), (0, 0), (0, 0), t)[:, 0]
    steady = 1.0 / p.k
    # closed-form step response overshoot for this damping ratio
    assert exact.max() < steady * 1.02
    _, xs = simulate_link(p, (1.0, 0.0), (0, 0), (0, 0), 0.01, 10.0)
    assert xs[:, 0].max() < steady * 1.02


def test_closed_form_initial_value_and_harmonic_case():
    p = profile(2.0, 8.0, 0.0)
    assert closed_form_response(p, (0, 0), (0.3, -0.2), (0.1, 0.4), 0.0) == pytest.approx((0.3, -0.2))
    w = math.sqrt(p.k / p.m)
    t = np.linspace(0, 6, 61)
    want = 0.3 * np.cos(w * t) + 0.1 / w * np.sin(w * t)
    assert closed_form_response(p, (0, 0), (0.3, 0), (0.1, 0), t)[:, 0] == pytest.approx(want, abs=1e-12)


def test_critical_damping_crosses_at_most_once():
    m, k = 1.2, 8.0
    p = profile(m, k, 2 * math.sqrt(m * k))
    t = np.linspace(0, 20, 20001)
    for v0 in (-5.0, -1.0, 0.0, 1.0):
        x = closed_form_response(p, (0, 0), (1.0, 0), (v0, 0), t)[:, 0]
        assert np.count_nonzero(np.diff(np.sign(x[np.abs(x) > 1e-12])) != 0) <= 1


def test_overdamped_matches_ode():
    from scipy.integrate import solve_ivp

    p = profile(1.0, 1.0, 5.0)
    sol = solve_ivp(lambda t, y: [y[1], (0.4 - p.d * y[1] - p.k * y[0]) / p.m], (0, 5), [0.2, -0.1], rtol=1e-10, atol=1e-12, dense_output=True)
    t = np.linspace(0, 5, 11)
    assert closed_form_response(p, (0.4, 0), (0.2, 0), (-0.1, 0), t)[:, 0] == pytest.approx(sol.sol(t)[0], abs=1e-8)


def test_step_link_rejects_bad_input():
    s = LinkState.of((0, 0))
    with pytest.raises(ValueError):
        step_link(s, HARD, (0, 0), 0.0)
    with pytest.raises(ValueError):
        step_link(s, HARD, (0, 0), 0.2)
    with pytest.raises(ValueError):
        step_link(s, HARD, (math.nan, 0), 0.01)


@given(st.sampled_from([HARD, SOFT, ImpedanceProfile(1.0, 10.0, 3.0, 0.4, 0.2, 1.4), ImpedanceProfile(7.0, 0.1, 1.0, 0.2, 0.6, 0.7)]), st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1))
def test_passive_energy_non_increasing(p, x, y, vx, vy):
    s = LinkState.of((x, y), (vx, vy))

    def energy(s):
        return 0.5 * p.m * float(s.delta_v @ s.delta_v) + 0.5 * p.k * float(s.delta_x @ s.delta_x)

    e0 = energy(s)
    for _ in range(500):
        s = step_link(s, p, (0, 0), 0.01)
        e1 = energy(s)
        assert e1 <= e0 * (1 + 1e-12)
        e0 = e1


def test_axes_decoupled():
    a = LinkState.of((0.3, 0.0), (0.0, 0.0))
    b = LinkState.of((0.3, -0.7), (0.0, 2.0))
    for _ in range(300):
        a = step_link(a, SOFT, (0.2, 0.0), 0.01)
        b = step_link(b, SOFT, (0.2, 0.0), 0.01)
    assert a.delta_x[0] == b.delta_x[0]


# -- deflection ----------------------------------------------------------------


def test_deflection_inactive_outside_radius():
    assert obstacle_deflection((0.7, 0.0), (0.0, 0.0)).tolist() == [0.0, 0.0]
    assert obstacle_deflection((0.65, 0.0), (0.0, 0.0)).tolist() == [0.0, 0.0]


def test_deflection_magnitude_is_gain_times_radius():
    assert obstacle_deflection((0.3, 0.0), (0.0, 0.0)) == pytest.approx((0.2925, 0.0), abs=1e-15)
    assert DeflectionConstants().magnitude == pytest.approx(0.45 * 0.65)


@given(st.floats(0.01, 0.64), st.floats(0, 2 * math.pi), st.floats(0, 2 * math.pi))
def test_deflection_constant_length_and_rotation_equivariant(r, phi, theta):
    d = obstacle_deflection((r * math.cos(phi), r * math.sin(phi)), (0.0, 0.0))
    assert np.linalg.norm(d) == pytest.approx(0.2925)
    c, s = math.cos(theta), math.sin(theta)
    rot = np.array([[c, -s], [s, c]])
    p = rot @ np.array([r * math.cos(phi), r * math.sin(phi)])
    o = rot @ np.array([0.0, 0.0])
    assert obstacle_deflection(p, o) == pytest.approx(rot @ d, abs=1e-12)


def test_deflection_coincident_falls_back_to_x():
    assert obstacle_deflection((1.0, 1.0), (1.0, 1.0)) == pytest.approx((0.2925, 0.0))


def test_combined_deflection_clamped():
    d = combined_deflection((0.0, 0.0), [(-0.3, 0.1), (-0.3, -0.1)])
    assert np.linalg.norm(d) == pytest.approx(0.2925)
    assert d[0] > 0 and abs(d[1]) < 1e-12
    # opposing obstacles cancel
    assert np.linalg.norm(combined_deflection((0.0, 0.0), [(-0.3, 0.0), (0.3, 0.0)])) == pytest.approx(0.0)
