"""How scene-analysis errors propagate into retrieval.

Compares detection and retrieval rates on the seven experiment scenes with no
noise and under the two lighting presets, and shows one corrupted description.

    python demos/perception_noise.py [--trials 300]
"""

from __future__ import annotations

import argparse

from impedance_swarm import LIGHTING_PRESETS, analyze_noisy, bundled_database_path, bundled_scenarios, load_database, render_description
from impedance_swarm.cli import evaluate
from impedance_swarm.scene import Lighting


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--trials", type=int, default=300, help="trials per scenario")
    args = ap.parse_args()
    scenarios = bundled_scenarios(experiments_only=True)
    db = load_database(bundled_database_path())
    for label, noise in [("no noise", None)] + [(f"{k.value} lighting", v) for k, v in LIGHTING_PRESETS.items()]:
        total = evaluate(scenarios, db, args.trials, noise, seed=0)[-1]
        print(f"{label:22} exact {total['exact_detection_rate']:.3f}  retrieval {total['retrieval_correct_rate']:.3f}  success {total['success_rate']:.3f}")

    noise = LIGHTING_PRESETS[Lighting.INADEQUATE]
    s = scenarios[0]
    for seed in range(100):
        out = analyze_noisy(s, noise.with_seed(seed))
        if not out.exact:
            print(f"\n{s.name}, seed {seed}, inadequate lighting:")
            print("  " + render_description(out.description).replace("\n", "\n  "))
            break


if __name__ == "__main__":
    main()
