"""From scene to impedance profile: describe, embed, look up.

Each bundled experiment is turned into its text description, which is hashed
into a fixed-size vector and matched against the bundled database by exact
Euclidean nearest neighbour.

    python demos/retrieval.py
"""

from __future__ import annotations

from impedance_swarm import analyze_ground_truth, bundled_database_path, bundled_scenarios, load_database, render_description
from impedance_swarm.retrieval import retrieve_with_distance


def main():
    db = load_database(bundled_database_path())
    print(f"database: {len(db)} records\n")
    for s in bundled_scenarios(experiments_only=True):
        text = render_description(analyze_ground_truth(s))
        rec, dist = retrieve_with_distance(text, db)
        p = rec.profile
        print(s.name)
        print("  " + text.splitlines()[0])
        print(f"  -> record {rec.id} ({rec.dominant_kind.value}), distance {dist:.3f}: k={p.k:.2f} d={p.d:.2f} c={p.c:.2f} v_max={p.v_max}")


if __name__ == "__main__":
    main()
