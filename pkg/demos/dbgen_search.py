"""Random search for the best profile on one scene.

Samples candidate profiles inside the range for the scene's dominant obstacle
kind, flies each one and scores it; the scores reward compliance around soft
obstacles and rigidity around hard ones. Unsafe candidates score -inf.

    python demos/dbgen_search.py [--samples 20]
"""

from __future__ import annotations

import argparse

from impedance_swarm import bundled_scenarios
from impedance_swarm.dbgen import SearchConfig, best_candidate, search_scenario


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--samples", type=int, default=20)
    args = ap.parse_args()
    for index in (0, 1):
        s = bundled_scenarios(experiments_only=True)[index]
        cands = search_scenario(s, index, SearchConfig(samples=args.samples, seed=1))
        best = best_candidate(cands)
        ranked = sorted(cands, key=lambda c: c.score, reverse=True)
        print(s.name)
        for c in ranked[:3] + ranked[-2:]:
            p = c.profile
            print(f"  score {c.score:8.3f}  m={p.m:.2f} k={p.k:.2f} d={p.d:.2f} c={p.c:.2f}")
        print(f"  best: k={best.profile.k:.2f} c={best.profile.c:.2f}\n")


if __name__ == "__main__":
    main()
