"""Find perception-noise presets that hit target detection-and-retrieval success rates.

Each preset uses one probability for both misses and kind flips plus a fixed
position jitter. With common random numbers per trial, success can only drop
as the probability grows, so plain bisection converges on the target.

    python tools/calibrate_presets.py [--trials 1000] [--seed 0]
"""

from __future__ import annotations

import argparse
import sys

from impedance_swarm import bundled_database_path, bundled_scenarios
from impedance_swarm.cli import evaluate
from impedance_swarm.perception import PerceptionNoise
from impedance_swarm.retrieval import load_database

TARGETS = {"optimal": (0.80, 1.0), "inadequate": (0.60, 2.0)}  # success rate, jitter sigma in cells


def success(p: float, jitter: float, scenarios, db, trials: int, seed: int) -> float:
    return evaluate(scenarios, db, trials, PerceptionNoise(p, p, jitter), seed)[-1]["success_rate"]


def bisect(target: float, jitter: float, scenarios, db, trials: int, seed: int, iters: int = 20) -> tuple[float, float]:
    lo, hi = 0.0, 0.5
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if success(mid, jitter, scenarios, db, trials, seed) > target:
            lo = mid
        else:
            hi = mid
    p = round(0.5 * (lo + hi), 4)
    return p, success(p, jitter, scenarios, db, trials, seed)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trials", type=int, default=1000, help="trials per scenario")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    scenarios = bundled_scenarios(experiments_only=True)
    db = load_database(bundled_database_path())
    for name, (target, jitter) in TARGETS.items():
        p, rate = bisect(target, jitter, scenarios, db, args.trials, args.seed)
        print(f"{name}: p_miss=p_misclass={p} jitter_sigma={jitter} -> success {rate:.4f} (target {target})")
    return 0


if __name__ == "__main__":
    sys.exit(main())
