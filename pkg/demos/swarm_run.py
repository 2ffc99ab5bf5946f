"""Full pipeline on the four flight experiments, with plots.

Each scene is described, a profile retrieved and the swarm flown to the goal.
Hard scenes fly fast in a tight wedge; soft scenes slow down and spread out.
Trajectory plots land in demos/out/.

    python demos/swarm_run.py
"""

from __future__ import annotations

from pathlib import Path

from impedance_swarm import SimConfig, analyze_ground_truth, bundled_database_path, bundled_scenarios, load_database, render_description, retrieve, run
from impedance_swarm.plot import write_svg

OUT = Path(__file__).parent / "out"


def main():
    OUT.mkdir(exist_ok=True)
    db = load_database(bundled_database_path())
    print(f"{'scenario':40} {'kind':5} {'c':>5} {'v_max':>6} {'clear':>6} {'goal':>6}")
    for s in bundled_scenarios(experiments_only=True)[:4]:
        rec = retrieve(render_description(analyze_ground_truth(s)), db)
        res = run(s, rec.profile, SimConfig())
        m = res.metrics
        goal = "-" if m.goal_reach_time is None else f"{m.goal_reach_time:.1f}s"
        print(f"{s.name:40} {rec.dominant_kind.value:5} {rec.profile.c:5.2f} {max(m.max_speed):6.2f} {m.min_obstacle_clearance:6.3f} {goal:>6}")
        write_svg(OUT / f"{s.name}.svg", s, res.trajectories, f"{s.name} ({rec.dominant_kind.value})")
    print(f"\nplots written to {OUT}")


if __name__ == "__main__":
    main()
