"""Leader guidance by attractive and repulsive potentials.

Prints the leader's velocity command along a line past a single obstacle, then
runs a scene where the obstacle sits dead on the straight line to the goal so
the plain potential field stalls; the simulator detects the stall and slides
the leader around the obstacle boundary.

    python demos/apf_planner.py
"""

from __future__ import annotations

import numpy as np

from impedance_swarm import ApfConfig, ImpedanceProfile, SimConfig, leader_velocity, run
from impedance_swarm.planner import Body
from impedance_swarm.scene import Arena, Obstacle, ObstacleKind, Scenario, Waypoint

HARD = ImpedanceProfile(m=1.2, k=8.5, d=4.0, F=0.55, c=0.35, v_max=1.4)


def main():
    cfg = ApfConfig()
    obstacle = Body.disc((2.0, 1.0), 0.15)
    goal = (3.5, 1.0)
    print("velocity command approaching an obstacle slightly off the line (v_max 1.4)")
    for x in np.linspace(1.2, 1.75, 6):
        v = leader_velocity((x, 1.05), goal, [obstacle], cfg, 1.4)
        print(f"  x={x:.2f}  v=({v[0]:+.3f}, {v[1]:+.3f})  |v|={np.hypot(*v):.3f}")

    blocked = Scenario(
        Arena(4.0, 2.0),
        (Obstacle(0, ObstacleKind.HARD, (2.0, 1.0), 0.15),),
        None,
        (0.6, 1.0),
        ((0.35, 1.25), (0.35, 0.75)),
        (Waypoint(0.0, goal),),
    )
    res = run(blocked, HARD, SimConfig())
    m = res.metrics
    print("\nobstacle exactly on the start-goal line")
    print(f"  escapes triggered at {[round(t, 2) for t in res.local_minimum_escapes]} s")
    print(f"  goal reached: {m.goal_reach_time is not None}, clearance {m.min_obstacle_clearance:.3f} m, collisions {m.collisions}")


if __name__ == "__main__":
    main()
