"""Write the bundled scenario fixtures.

The first seven files are the experiment scenarios (four of them mirror the
static/dynamic hard/soft set-ups used for the headline speed results); the
remaining 33 are drawn from a seeded generator spanning obstacle count,
kind mix, spacing, gate presence, motion and follower count. Every fixture
is checked by flying boundary profiles of its obstacle class and is kept
only if all of them reach the goal collision-free without a local-minimum
escape.

    python tools/author_scenarios.py [--check-only]
"""

from __future__ import annotations

import argparse
import itertools
import math
import sys
from pathlib import Path

import numpy as np

from impedance_swarm.perception import analyze_ground_truth
from impedance_swarm.retrieval import PARAM_RANGES, SPEED_CAPS, ImpedanceProfile
from impedance_swarm.scene import (
    Arena,
    Gate,
    Obstacle,
    ObstacleKind,
    Scenario,
    Spacing,
    Waypoint,
    render_description,
    save_scenario,
)
from impedance_swarm.sim import SimConfig, run

OUT = Path(__file__).resolve().parents[1] / "src" / "impedance_swarm" / "data" / "scenarios"
H, S = ObstacleKind.HARD, ObstacleKind.SOFT
RADIUS = {H: 0.1, S: 0.2}
ARENA = Arena(4.0, 4.0, 100)
LANE_Y = 2.0
START_X, GOAL_X, GATE_X = 0.6, 3.6, 2.8


def starts(n: int):
    f = [(START_X - 0.25, LANE_Y + 0.25), (START_X - 0.25, LANE_Y - 0.25)]
    if n == 4:
        f += [(START_X - 0.5, LANE_Y + 0.5), (START_X - 0.5, LANE_Y - 0.5)]
    return (START_X, LANE_Y), tuple(f)


def gate_width(kind: ObstacleKind, n: int) -> float:
    c_max = PARAM_RANGES[kind]["c"][1]
    half = c_max * 0.5 * (2 if n == 4 else 1)
    return round(2 * half + 0.7, 2)


def make(obstacles, gate: bool, n: int, goal=None, lighting="optimal", name=""):
    lead, fol = starts(n)
    obs = []
    for i, o in enumerate(obstacles):
        kind, pos = o[0], o[1]
        motion = tuple(Waypoint(t, q) for t, q in (o[2] if len(o) > 2 else ()))
        obs.append(Obstacle(i, kind, pos, RADIUS[kind], motion))
    kinds = {o.kind for o in obs}
    dominant = S if S in kinds else H
    g = Gate((GATE_X, LANE_Y), gate_width(dominant, n), 0.0) if gate else None
    goal = goal or ((0.0, (GOAL_X, LANE_Y)),)
    from impedance_swarm.scene import Lighting

    return Scenario(ARENA, tuple(obs), g, lead, fol, tuple(Waypoint(t, p) for t, p in goal), Lighting(lighting), name=name)


EXPERIMENTS = [
    # static: four cylindrical stands and a gate
    ("exp1_static_hard_gate", lambda: make([(H, (1.4, 1.5)), (H, (1.4, 2.55)), (H, (2.0, 1.35)), (H, (2.1, 2.5))], True, 2)),
    # static: two humans in front of the gate
    ("exp2_static_soft_gate", lambda: make([(S, (1.3, 1.25)), (S, (2.2, 2.95))], True, 2)),
    # dynamic: two stands, gate and a goal sliding sideways
    (
        "exp3_dynamic_hard_moving_goal",
        lambda: make(
            [(H, (1.5, 1.55)), (H, (2.1, 2.5))], True, 2, goal=((0.0, (3.6, 1.7)), (3.0, (3.6, 2.0)), (6.0, (3.6, 2.3)))
        ),
    ),
    # dynamic: one standing and one walking human
    (
        "exp4_dynamic_soft_walker",
        lambda: make([(S, (1.5, 1.2)), (S, (2.4, 3.5), ((3.0, (2.4, 3.05)), (6.0, (2.8, 3.5))))], False, 2),
    ),
    ("exp5_static_mixed_gate", lambda: make([(S, (1.5, 2.95)), (H, (1.6, 1.2)), (H, (3.2, 0.9))], True, 2)),
    ("exp6_static_hard_four_followers", lambda: make([(H, (1.3, 1.2)), (H, (1.9, 2.9)), (H, (2.6, 1.1))], False, 4)),
    (
        "exp7_dynamic_mixed_gate",
        lambda: make([(S, (3.3, 3.4), ((2.0, (3.3, 3.05)), (5.0, (3.4, 3.4)))), (H, (1.6, 2.55))], True, 2, lighting="inadequate"),
    ),
]


def boundary_profiles(kind: ObstacleKind, dynamic: bool) -> list[ImpedanceProfile]:
    r = PARAM_RANGES[kind]
    v = SPEED_CAPS[(kind, dynamic)]
    out = []
    for m, k, d, F, c in itertools.product(*[(lo, hi) for lo, hi in (r["m"], r["k"], r["d"], r["F"], r["c"])]):
        out.append(ImpedanceProfile(m, k, d, F, c, v))
    # a corner subset keeps the check quick: vary c fully, pair the rest
    return [p for i, p in enumerate(out) if i % 5 == 0 or p.c == r["c"][1] and i % 3 == 0]


def check(s: Scenario) -> tuple[bool, str]:
    cfg = SimConfig()
    for p in boundary_profiles(s.dominant_kind, s.is_dynamic):
        try:
            res = run(s, p, cfg)
        except Exception as exc:  # noqa: BLE001 - any failure rejects the fixture
            return False, f"{type(exc).__name__}: {exc}"
        m = res.metrics
        if m.collisions or m.goal_reach_time is None or res.local_minimum_escapes:
            return False, f"c={p.c} m={p.m} k={p.k}: collisions={m.collisions} goal={m.goal_reach_time} escapes={res.local_minimum_escapes}"
    return True, "ok"


def random_scene(rng: np.random.Generator, n_obs: int, mix: str, spacing: Spacing, gate: bool, dynamic: bool, n_fol: int):
    kinds = {"hard": [H] * n_obs, "soft": [S] * n_obs}.get(mix)
    if kinds is None:
        kinds = [S] + [H] * (n_obs - 1)
        rng.shuffle(kinds)
    dominant = S if S in kinds else H
    half = PARAM_RANGES[dominant]["c"][1] * 0.5 * (2 if n_fol == 4 else 1)
    obs = []
    for kind in kinds:
        # keep each obstacle out of the formation corridor around the lane
        side = rng.choice([-1.0, 1.0])
        lateral = rng.uniform(half + RADIUS[kind] + 0.15, half + RADIUS[kind] + 0.9)
        y = float(np.clip(LANE_Y + side * lateral, 0.3, 3.7))
        x = float(rng.uniform(1.3, 3.3) if not gate else rng.choice([rng.uniform(1.3, 2.3), rng.uniform(3.1, 3.3)]))
        pos = (round(x, 2), round(y, 2))
        motion = ()
        if dynamic and rng.random() < 0.6:
            dy = side * rng.uniform(0.2, 0.4)
            t1 = round(float(rng.uniform(2.0, 4.0)), 1)
            y1 = float(np.clip(y + dy, 0.3, 3.7))
            motion = ((t1, (pos[0], round(y1, 2))), (round(t1 + 3.0, 1), pos))
        obs.append((kind, pos, motion) if motion else (kind, pos))
    goal = None
    if dynamic and not any(len(o) > 2 for o in obs):
        goal = ((0.0, (GOAL_X, LANE_Y - 0.2)), (4.0, (GOAL_X, LANE_Y + 0.2)))
    lighting = "inadequate" if rng.random() < 0.3 else "optimal"
    s = make(obs, gate, n_fol, goal=goal, lighting=lighting)
    desc = analyze_ground_truth(s)
    if n_obs >= 2 and desc.spacing is not spacing:
        return None
    return s


def generated(count: int, existing_texts: set[str], seed: int = 2024):
    rng = np.random.default_rng(seed)
    combos = list(
        itertools.product([1, 2, 3, 4], ["hard", "soft", "mixed"], [Spacing.CLOSELY, Spacing.WIDELY], [True, False], [False, True], [2, 4])
    )
    rng.shuffle(combos)
    out = []
    for n_obs, mix, spacing, gate, dynamic, n_fol in itertools.cycle(combos):
        if len(out) == count:
            break
        if mix == "mixed" and n_obs < 2:
            continue
        if n_obs == 1 and spacing is Spacing.WIDELY:
            continue
        for _ in range(40):
            s = random_scene(rng, n_obs, mix, spacing, gate, dynamic, n_fol)
            if s is None:
                continue
            text = render_description(analyze_ground_truth(s))
            if text in existing_texts:
                continue
            ok, why = check(s)
            if ok:
                name = f"gen{len(out) + 8:02d}_{mix}_{n_obs}obs_{'gate' if gate else 'open'}_{'dyn' if s.is_dynamic else 'static'}_{n_fol}f"
                out.append((name, s))
                existing_texts.add(text)
                print(f"  {name}", file=sys.stderr)
                break
    return out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--check-only", action="store_true", help="only check the experiment scenarios")
    args = ap.parse_args(argv)
    fixtures, texts, bad = [], set(), 0
    for name, build in EXPERIMENTS:
        s = build()
        ok, why = check(s)
        print(f"{name}: {why}", file=sys.stderr)
        bad += not ok
        fixtures.append((name, s))
        texts.add(render_description(analyze_ground_truth(s)))
    if args.check_only or bad:
        return 1 if bad else 0
    fixtures += generated(40 - len(fixtures), texts)
    OUT.mkdir(parents=True, exist_ok=True)
    for old in OUT.glob("*.json"):
        old.unlink()
    for i, (name, s) in enumerate(fixtures):
        save_scenario(s, OUT / f"{i:02d}_{name}.json")
    print(f"wrote {len(fixtures)} scenarios to {OUT}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
