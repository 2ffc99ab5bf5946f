"""Impedance-coupled leader/follower swarm simulation with retrieval of obstacle-specific control profiles."""

from __future__ import annotations

from importlib import resources
from pathlib import Path

from .impedance import DeflectionConstants, LinkState, closed_form_response, obstacle_deflection, step_link
from .perception import LIGHTING_PRESETS, PerceptionNoise, analyze_ground_truth, analyze_noisy, remote_analyze
from .planner import ApfConfig, leader_velocity
from .retrieval import ImpedanceProfile, ScenarioRecord, VectorDatabase, embed, load_database, retrieve
from .scene import Scenario, SceneDescription, load_scenario, parse_description, render_description
from .sim import SimConfig, SimResult, run

__version__ = "0.1.0"

_DATA = resources.files(__package__) / "data"


def bundled_scenario_dir() -> Path:
    return Path(str(_DATA / "scenarios"))


def bundled_database_path() -> Path:
    return Path(str(_DATA / "db.json"))


def bundled_scenarios(experiments_only: bool = False) -> list[Scenario]:
    """All 40 bundled scenarios, or just the seven experiment set-ups."""
    from .scene import load_scenario_dir

    scenarios = load_scenario_dir(bundled_scenario_dir())
    if experiments_only:
        scenarios = [s for s in scenarios if "_exp" in s.name]
    return scenarios


__all__ = [
    "ApfConfig",
    "DeflectionConstants",
    "ImpedanceProfile",
    "LIGHTING_PRESETS",
    "LinkState",
    "PerceptionNoise",
    "Scenario",
    "ScenarioRecord",
    "SceneDescription",
    "SimConfig",
    "SimResult",
    "VectorDatabase",
    "analyze_ground_truth",
    "analyze_noisy",
    "bundled_database_path",
    "bundled_scenario_dir",
    "bundled_scenarios",
    "closed_form_response",
    "embed",
    "leader_velocity",
    "load_database",
    "load_scenario",
    "obstacle_deflection",
    "parse_description",
    "remote_analyze",
    "render_description",
    "retrieve",
    "run",
    "step_link",
]
