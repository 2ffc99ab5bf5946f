"""Build the scenario database by random search over the impedance ranges.

Every candidate profile is flown in simulation and scored; the best one per
scenario is stored together with the scenario's ground-truth description.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .perception import analyze_ground_truth
from .planner import PenetrationError
from .retrieval import PARAM_RANGES, SPEED_CAPS, ImpedanceProfile, ScenarioRecord
from .scene import ObstacleKind, Scenario, render_description
from .sim import SimConfig, SimResult, run

log = logging.getLogger(__name__)

PARAM_ORDER = ("m", "k", "d", "F", "c")


class GenerationError(RuntimeError):
    pass


@dataclass(frozen=True)
class ScoreWeights:
    deflection: float = 1.0
    overshoot: float = 1.0
    clearance: float = 1.0
    settle_time: float = 1.0

    def __post_init__(self):
        w = (self.deflection, self.overshoot, self.clearance, self.settle_time)
        if min(w) < 0 or not any(w):
            raise ValueError("weights must be non-negative and not all zero")


@dataclass(frozen=True)
class SearchConfig:
    samples: int = 200
    seed: int = 1
    weights: ScoreWeights = field(default_factory=ScoreWeights)
    sim: SimConfig = field(default_factory=SimConfig)

    def __post_init__(self):
        if self.samples < 1:
            raise ValueError("samples must be >= 1")


@dataclass
class ScoredCandidate:
    profile: ImpedanceProfile
    score: float
    metrics: dict


def sample_profile(kind: ObstacleKind, rng: np.random.Generator, dynamic: bool = False) -> ImpedanceProfile:
    """Uniform draw from the parameter box of ``kind``."""
    ranges = PARAM_RANGES[kind]
    values = {name: float(rng.uniform(*ranges[name])) for name in PARAM_ORDER}
    return ImpedanceProfile(**values, v_max=SPEED_CAPS[(kind, dynamic)])


def candidate_rng(seed: int, scenario_index: int, sample_index: int) -> np.random.Generator:
    # one independent stream per (scenario, sample) keeps results schedule-free
    return np.random.default_rng(np.random.SeedSequence([seed, scenario_index, sample_index]))


def overshoot(result: SimResult) -> float:
    """How far followers swing back through their setpoint after the largest excursion."""
    traj = result.trajectories
    worst = 0.0
    for n in range(1, traj.n_drones):
        err = traj.states[:, n, :2] - traj.slots[:, n]
        mag = np.linalg.norm(err, axis=1)
        k = int(np.argmax(mag))
        if mag[k] == 0.0:
            continue
        proj = err[k:] @ (err[k] / mag[k])
        worst = max(worst, float(-proj.min()))
    return worst


def residual_energy(result: SimResult, window: float = 1.0) -> float:
    """Mean per-unit-mass kinetic energy of follower motion relative to the leader over the final window."""
    traj = result.trajectories
    if traj.n_drones < 2:
        return 0.0
    tail = traj.t >= traj.t[-1] - window
    rel = traj.states[tail, 1:, 2:] - traj.states[tail, :1, 2:]
    return float(0.5 * np.mean(np.sum(rel**2, axis=-1)))


def features(result: SimResult, cfg: SimConfig) -> dict:
    m = result.metrics
    return {
        "deflection": m.max_lateral_deflection,
        "clearance": m.min_obstacle_clearance if math.isfinite(m.min_obstacle_clearance) else 0.0,
        "overshoot": overshoot(result),
        "residual_energy": residual_energy(result),
        "settle_time": m.settle_time / cfg.max_t if cfg.max_t > 0 else 0.0,
        "collisions": m.collisions,
        "goal_reached": m.goal_reach_time is not None,
    }


def score_candidate(result: SimResult, kind: ObstacleKind, weights: ScoreWeights = ScoreWeights(), cfg: SimConfig = SimConfig()) -> float:
    """Weighted sum of normalized metrics; colliding or goal-missing runs score -inf.

    Soft scenes reward large deflection and clearance and penalize overshoot
    and residual oscillation. Hard scenes reward clearance and penalize
    deflection, overshoot and settle time.
    """
    f = features(result, cfg)
    if f["collisions"] > 0 or not f["goal_reached"]:
        return -math.inf
    if kind is ObstacleKind.SOFT:
        return (
            weights.deflection * f["deflection"]
            + weights.clearance * f["clearance"]
            - weights.overshoot * f["overshoot"]
            - weights.settle_time * f["residual_energy"]
        )
    return (
        -weights.deflection * f["deflection"]
        + weights.clearance * f["clearance"]
        - weights.overshoot * f["overshoot"]
        - weights.settle_time * f["settle_time"]
    )


def search_scenario(scenario: Scenario, index: int, search: SearchConfig) -> list[ScoredCandidate]:
    kind = scenario.dominant_kind
    out = []
    for j in range(search.samples):
        profile = sample_profile(kind, candidate_rng(search.seed, index, j), scenario.is_dynamic)
        try:
            result = run(scenario, profile, search.sim)
        except PenetrationError:
            out.append(ScoredCandidate(profile, -math.inf, {"penetration": True}))
            continue
        out.append(ScoredCandidate(profile, score_candidate(result, kind, search.weights, search.sim), features(result, search.sim)))
    return out


def best_candidate(candidates: Sequence[ScoredCandidate]) -> ScoredCandidate:
    best = candidates[0]
    for c in candidates[1:]:
        if c.score > best.score:
            best = c
    return best


def generate_database(scenarios: Sequence[Scenario], search: SearchConfig = SearchConfig()) -> list[ScenarioRecord]:
    if not scenarios:
        raise GenerationError("no scenarios given")
    records = []
    for i, scenario in enumerate(scenarios):
        best = best_candidate(search_scenario(scenario, i, search))
        if best.score == -math.inf:
            raise GenerationError(f"scenario {i} ({scenario.name or 'unnamed'}): every sampled profile collided or missed the goal")
        text = render_description(analyze_ground_truth(scenario))
        log.info("scenario %d/%d %s: score %.4f", i + 1, len(scenarios), scenario.name, best.score)
        records.append(ScenarioRecord.create(i, text, best.profile, scenario.dominant_kind))
    return records
