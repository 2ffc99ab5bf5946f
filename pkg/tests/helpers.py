"""Shared scenario builders for the test suite."""

from __future__ import annotations

from impedance_swarm.scene import Arena, Obstacle, ObstacleKind, Scenario, Waypoint

H, S = ObstacleKind.HARD, ObstacleKind.SOFT


def simple_scenario(obstacles=(), gate=None, goal=(3.0, 1.0), n_followers=2, arena=Arena(4.0, 2.0)):
    """Lane along y=1 from x=0.6 with a wedge of followers behind the leader."""
    follow = [(0.35, 1.25), (0.35, 0.75), (0.1, 1.5), (0.1, 0.5)][:n_followers]
    obs = []
    for i, (kind, pos, r, *rest) in enumerate(obstacles):
        motion = tuple(Waypoint(t, p) for t, p in (rest[0] if rest else ()))
        obs.append(Obstacle(i, kind, pos, r, motion))
    return Scenario(arena, tuple(obs), gate, (0.6, 1.0), tuple(follow), (Waypoint(0.0, goal),))

