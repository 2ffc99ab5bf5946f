"""World model, scenario files and the textual scene-description grammar.

All geometry is stored in meters. Grid cells (the normalized image
coordinates a vision model would report) are derived on demand.
"""

from __future__ import annotations

import enum
import itertools
import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

DRONE_RADIUS = 0.06
DEFAULT_GRID = 100
SPACING_THRESHOLD = 20.0
GATE_POST_LENGTH = 0.25
GATE_POST_HALF_THICKNESS = 0.02


class ScenarioError(ValueError):
    """Invalid scenario data; ``field`` names the offending entry."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class SpacingNotApplicable(ValueError):
    pass


class DescriptionParseError(ValueError):
    def __init__(self, message: str, line: int, col: int, token: str | None = None):
        super().__init__(f"line {line}, col {col}: {message}")
        self.line = line
        self.col = col
        self.token = token


class ObstacleKind(enum.Enum):
    SOFT = "soft"  # dynamic alive (human)
    HARD = "hard"  # dynamic inanimate (cylindrical stand)


class Lighting(enum.Enum):
    OPTIMAL = "optimal"
    INADEQUATE = "inadequate"


class Spacing(enum.Enum):
    CLOSELY = "closely spaced"
    WIDELY = "widely spaced"


@dataclass(frozen=True)
class Waypoint:
    t: float
    pos: tuple[float, float]


def interpolate(path: Sequence[Waypoint], t: float) -> tuple[float, float]:
    """Piecewise-linear position along timed waypoints, held at both ends."""
    if t <= path[0].t:
        return path[0].pos
    for a, b in zip(path, path[1:]):
        if t < b.t:
            s = (t - a.t) / (b.t - a.t)
            return (a.pos[0] + s * (b.pos[0] - a.pos[0]), a.pos[1] + s * (b.pos[1] - a.pos[1]))
    return path[-1].pos


@dataclass(frozen=True)
class Obstacle:
    id: int
    kind: ObstacleKind
    position: tuple[float, float]
    radius: float
    motion: tuple[Waypoint, ...] = ()

    @property
    def path(self) -> tuple[Waypoint, ...]:
        return (Waypoint(0.0, self.position),) + self.motion

    def position_at(self, t: float) -> tuple[float, float]:
        if not self.motion:
            return self.position
        return interpolate(self.path, t)


@dataclass(frozen=True)
class Gate:
    center: tuple[float, float]
    width: float
    theta: float  # passage direction; "before" is the half-plane behind it

    @property
    def normal(self) -> tuple[float, float]:
        return (math.cos(self.theta), math.sin(self.theta))

    def walls(self) -> list[tuple[tuple[float, float], tuple[float, float]]]:
        """The two posts flanking the opening, as segments."""
        tx, ty = -math.sin(self.theta), math.cos(self.theta)
        cx, cy = self.center
        h = self.width / 2
        out = []
        for s in (1.0, -1.0):
            a = (cx + s * h * tx, cy + s * h * ty)
            b = (cx + s * (h + GATE_POST_LENGTH) * tx, cy + s * (h + GATE_POST_LENGTH) * ty)
            out.append((a, b))
        return out

    def is_before(self, p: Sequence[float]) -> bool:
        nx, ny = self.normal
        return (p[0] - self.center[0]) * nx + (p[1] - self.center[1]) * ny < 0.0


@dataclass(frozen=True)
class Arena:
    width: float = 2.0
    height: float = 2.0
    grid: int = DEFAULT_GRID

    def contains(self, p: Sequence[float]) -> bool:
        return 0.0 <= p[0] <= self.width and 0.0 <= p[1] <= self.height

    def to_cell(self, p: Sequence[float]) -> tuple[int, int]:
        cx = min(max(int(math.floor(p[0] / self.width * self.grid)), 0), self.grid - 1)
        cy = min(max(int(math.floor(p[1] / self.height * self.grid)), 0), self.grid - 1)
        return (cx, cy)

    def cell_center(self, cell: Sequence[int]) -> tuple[float, float]:
        return ((cell[0] + 0.5) * self.width / self.grid, (cell[1] + 0.5) * self.height / self.grid)


@dataclass(frozen=True)
class Scenario:
    arena: Arena
    obstacles: tuple[Obstacle, ...]
    gate: Gate | None
    leader_start: tuple[float, float]
    follower_starts: tuple[tuple[float, float], ...]
    goal: tuple[Waypoint, ...]
    lighting: Lighting = Lighting.OPTIMAL
    name: str = field(default="", compare=False)

    def __post_init__(self):
        validate_scenario(self)

    @property
    def n_followers(self) -> int:
        return len(self.follower_starts)

    @property
    def is_dynamic(self) -> bool:
        return len(self.goal) > 1 or any(o.motion for o in self.obstacles)

    @property
    def dominant_kind(self) -> ObstacleKind:
        # any human present makes the whole scene soft
        if any(o.kind is ObstacleKind.SOFT for o in self.obstacles):
            return ObstacleKind.SOFT
        return ObstacleKind.HARD

    def goal_at(self, t: float) -> tuple[float, float]:
        return interpolate(self.goal, t)


def _check_point(field: str, p, arena: Arena | None = None) -> tuple[float, float]:
    if len(p) != 2 or not all(math.isfinite(v) for v in p):
        raise ScenarioError(field, f"expected a finite 2D point, got {p!r}")
    if arena is not None and not arena.contains(p):
        raise ScenarioError(field, f"({p[0]}, {p[1]}) outside arena {arena.width}x{arena.height}")
    return (float(p[0]), float(p[1]))


def _check_times(field: str, path: Sequence[Waypoint], strict_positive: bool):
    times = [w.t for w in path]
    if strict_positive and times and times[0] <= 0.0:
        raise ScenarioError(field, "motion waypoint times must be > 0")
    if any(b <= a for a, b in zip(times, times[1:])):
        raise ScenarioError(field, "waypoint times must be strictly increasing")


def validate_scenario(s: Scenario) -> None:
    a = s.arena
    if not (a.width > 0 and a.height > 0):
        raise ScenarioError("arena", "width and height must be positive")
    if a.grid < 1:
        raise ScenarioError("arena.grid", "grid resolution must be >= 1")
    ids = set()
    for i, o in enumerate(s.obstacles):
        f = f"obstacles[{i}]"
        if o.id in ids:
            raise ScenarioError(f"{f}.id", f"duplicate obstacle id {o.id}")
        ids.add(o.id)
        if not o.radius > 0:
            raise ScenarioError(f"{f}.radius", "must be > 0")
        _check_point(f"{f}.pos", o.position, a)
        _check_times(f"{f}.motion", o.motion, strict_positive=True)
        for j, w in enumerate(o.motion):
            _check_point(f"{f}.motion[{j}].pos", w.pos, a)
    if s.gate is not None:
        _check_point("gate.center", s.gate.center, a)
        if not s.gate.width > 2 * DRONE_RADIUS:
            raise ScenarioError("gate.width", f"opening must exceed {2 * DRONE_RADIUS} m")
    if len(s.follower_starts) not in (2, 4):
        raise ScenarioError("follower_starts", f"follower count must be 2 or 4, got {len(s.follower_starts)}")
    starts = [_check_point("leader_start", s.leader_start, a)]
    starts += [_check_point(f"follower_starts[{i}]", p, a) for i, p in enumerate(s.follower_starts)]
    for (i, p), (j, q) in itertools.combinations(enumerate(starts), 2):
        if math.dist(p, q) <= 2 * DRONE_RADIUS:
            raise ScenarioError("follower_starts", f"start positions {i} and {j} closer than {2 * DRONE_RADIUS} m")
    if not s.goal:
        raise ScenarioError("goal", "at least one goal waypoint required")
    _check_times("goal", s.goal, strict_positive=False)
    for j, w in enumerate(s.goal):
        _check_point(f"goal[{j}].pos", w.pos, a)


# -- scenario files ---------------------------------------------------------

_TOP_KEYS = {"arena", "obstacles", "gate", "leader_start", "follower_starts", "goal", "lighting"}


def _require(d: dict, key: str, where: str):
    if not isinstance(d, dict):
        raise ScenarioError(where, "expected an object")
    if key not in d:
        raise ScenarioError(f"{where}.{key}" if where else key, "missing field")
    return d[key]


def _reject_unknown(d: dict, allowed: set[str], where: str):
    extra = sorted(set(d) - allowed)
    if extra:
        raise ScenarioError(where or extra[0], f"unknown key(s) {extra}")


def _enum(cls, value, field):
    try:
        return cls(value)
    except ValueError:
        choices = [m.value for m in cls]
        raise ScenarioError(field, f"bad value {value!r}, expected one of {choices}") from None


def _waypoints(raw, field) -> tuple[Waypoint, ...]:
    out = []
    for j, w in enumerate(raw):
        _reject_unknown(w, {"t", "pos"}, f"{field}[{j}]")
        out.append(Waypoint(float(_require(w, "t", f"{field}[{j}]")), _check_point(f"{field}[{j}].pos", _require(w, "pos", f"{field}[{j}]"))))
    return tuple(out)


def scenario_from_dict(d: dict, name: str = "") -> Scenario:
    _reject_unknown(d, _TOP_KEYS, "")
    ra = _require(d, "arena", "")
    _reject_unknown(ra, {"width", "height", "grid"}, "arena")
    arena = Arena(float(_require(ra, "width", "arena")), float(_require(ra, "height", "arena")), int(ra.get("grid", DEFAULT_GRID)))
    obstacles = []
    for i, ro in enumerate(_require(d, "obstacles", "")):
        f = f"obstacles[{i}]"
        _reject_unknown(ro, {"id", "kind", "pos", "radius", "motion"}, f)
        obstacles.append(
            Obstacle(
                id=int(_require(ro, "id", f)),
                kind=_enum(ObstacleKind, _require(ro, "kind", f), f"{f}.kind"),
                position=_check_point(f"{f}.pos", _require(ro, "pos", f)),
                radius=float(_require(ro, "radius", f)),
                motion=_waypoints(ro.get("motion", []), f"{f}.motion"),
            )
        )
    gate = None
    if d.get("gate") is not None:
        rg = d["gate"]
        _reject_unknown(rg, {"center", "width", "theta"}, "gate")
        gate = Gate(_check_point("gate.center", _require(rg, "center", "gate")), float(_require(rg, "width", "gate")), float(rg.get("theta", 0.0)))
    return Scenario(
        arena=arena,
        obstacles=tuple(obstacles),
        gate=gate,
        leader_start=_check_point("leader_start", _require(d, "leader_start", "")),
        follower_starts=tuple(_check_point(f"follower_starts[{i}]", p) for i, p in enumerate(_require(d, "follower_starts", ""))),
        goal=_waypoints(_require(d, "goal", ""), "goal"),
        lighting=_enum(Lighting, d.get("lighting", "optimal"), "lighting"),
        name=name,
    )


def scenario_to_dict(s: Scenario) -> dict:
    def wp(path):
        return [{"t": w.t, "pos": list(w.pos)} for w in path]

    return {
        "arena": {"width": s.arena.width, "height": s.arena.height, "grid": s.arena.grid},
        "obstacles": [
            {"id": o.id, "kind": o.kind.value, "pos": list(o.position), "radius": o.radius, "motion": wp(o.motion)}
            for o in s.obstacles
        ],
        "gate": None if s.gate is None else {"center": list(s.gate.center), "width": s.gate.width, "theta": s.gate.theta},
        "leader_start": list(s.leader_start),
        "follower_starts": [list(p) for p in s.follower_starts],
        "goal": wp(s.goal),
        "lighting": s.lighting.value,
    }


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    with open(path, encoding="utf-8") as f:
        raw = json.load(f)
    return scenario_from_dict(raw, name=path.stem)


def save_scenario(s: Scenario, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(scenario_to_dict(s), f, indent=2)
        f.write("\n")


def load_scenario_dir(directory: str | Path) -> list[Scenario]:
    return [load_scenario(p) for p in sorted(Path(directory).glob("*.json"))]


# -- scene descriptions -----------------------------------------------------


@dataclass(frozen=True)
class ObstacleEntry:
    kind: ObstacleKind
    cell: tuple[int, int]


@dataclass(frozen=True)
class SceneDescription:
    total: int
    before: int
    after: int
    entries: tuple[ObstacleEntry, ...]
    spacing: Spacing | None

    def __post_init__(self):
        if self.total != self.before + self.after:
            raise ValueError("total must equal before + after")
        if self.total != len(self.entries):
            raise ValueError("total must equal the number of entries")
        if min(self.before, self.after) < 0:
            raise ValueError("counts must be non-negative")
        if (self.spacing is None) != (self.total < 2):
            raise ValueError("spacing label is required iff there are at least 2 obstacles")

    def count(self, kind: ObstacleKind) -> int:
        return sum(e.kind is kind for e in self.entries)

    def same_semantics(self, other: SceneDescription) -> bool:
        """Equal in counts, kinds and spacing; positions are ignored."""
        return (
            (self.total, self.before, self.after, self.spacing) == (other.total, other.before, other.after, other.spacing)
            and [e.kind for e in self.entries] == [e.kind for e in other.entries]
        )


def classify_spacing(cells: Sequence[Sequence[float]], threshold: float = SPACING_THRESHOLD) -> Spacing:
    """Widely spaced iff the closest pair is strictly farther apart than ``threshold`` cells."""
    if len(cells) < 2:
        raise SpacingNotApplicable("spacing needs at least two obstacles")
    if not threshold > 0:
        raise ValueError("threshold must be positive")
    closest = min(math.dist(p, q) for p, q in itertools.combinations(cells, 2))
    return Spacing.WIDELY if closest > threshold else Spacing.CLOSELY


_NOUNS = {
    ObstacleKind.SOFT: ("human", "humans"),
    ObstacleKind.HARD: ("cylindrical stand", "cylindrical stands"),
}


def _noun(kind: ObstacleKind, n: int) -> str:
    return _NOUNS[kind][0 if n == 1 else 1]


def render_description(desc: SceneDescription) -> str:
    """Canonical text: one summary line, then one line per obstacle."""
    if desc.total == 0:
        head = ["no obstacles"]
    else:
        parts = [f"{desc.count(k)} {_noun(k, desc.count(k))}" for k in (ObstacleKind.SOFT, ObstacleKind.HARD) if desc.count(k)]
        head = [" and ".join(parts)]
    head.append("no obstacles before the gate" if desc.before == 0 else f"{desc.before} before the gate")
    head.append(f"{desc.after} after the gate")
    if desc.spacing is not None:
        head.append(desc.spacing.value)
    lines = ["; ".join(head)]
    lines += [f"{_noun(e.kind, 1)} at ({e.cell[0]}, {e.cell[1]})" for e in desc.entries]
    return "\n".join(lines)


def summary_line(desc: SceneDescription) -> str:
    return render_description(desc).split("\n", 1)[0]


_WORD_TO_KIND = {w: k for k, pair in _NOUNS.items() for w in pair}
_ENTRY_RE = re.compile(r"(?P<noun>[a-z ]+?) at \((?P<x>\d+), (?P<y>\d+)\)$")
_COUNT_RE = re.compile(r"(?P<n>\d+) (?P<noun>[a-z ]+)$")


def parse_description(text: str) -> SceneDescription:
    if not text.strip():
        raise DescriptionParseError("empty description", 1, 1)
    lines = text.split("\n")
    head = lines[0].split("; ")
    if len(head) not in (3, 4):
        raise DescriptionParseError(f"expected 3 or 4 '; '-separated clauses, got {len(head)}", 1, 1)
    cols = list(itertools.accumulate([0] + [len(h) + 2 for h in head]))

    def err(msg, clause, token=None):
        return DescriptionParseError(msg, 1, cols[clause] + 1, token)

    counts = {ObstacleKind.SOFT: 0, ObstacleKind.HARD: 0}
    if head[0] != "no obstacles":
        for part in head[0].split(" and "):
            m = _COUNT_RE.match(part)
            if not m:
                raise err(f"cannot read obstacle count {part!r}", 0, part)
            kind = _WORD_TO_KIND.get(m["noun"])
            if kind is None:
                raise err(f"unknown obstacle word {m['noun']!r}", 0, m["noun"])
            counts[kind] += int(m["n"])
    if head[1] == "no obstacles before the gate":
        before = 0
    else:
        m = re.fullmatch(r"(\d+) before the gate", head[1])
        if not m:
            raise err(f"cannot read before-gate clause {head[1]!r}", 1, head[1])
        before = int(m[1])
    m = re.fullmatch(r"(\d+) after the gate", head[2])
    if not m:
        raise err(f"cannot read after-gate clause {head[2]!r}", 2, head[2])
    after = int(m[1])
    spacing = None
    if len(head) == 4:
        try:
            spacing = Spacing(head[3])
        except ValueError:
            raise err(f"unknown spacing label {head[3]!r}", 3, head[3]) from None

    entries = []
    for ln, line in enumerate(lines[1:], start=2):
        m = _ENTRY_RE.match(line)
        if not m:
            raise DescriptionParseError(f"cannot read obstacle entry {line!r}", ln, 1, line)
        kind = _WORD_TO_KIND.get(m["noun"])
        if kind is None or m["noun"] != _noun(kind, 1):
            raise DescriptionParseError(f"unknown obstacle word {m['noun']!r}", ln, 1, m["noun"])
        entries.append(ObstacleEntry(kind, (int(m["x"]), int(m["y"]))))
    for kind, n in counts.items():
        if sum(e.kind is kind for e in entries) != n:
            raise DescriptionParseError(f"{n} {_noun(kind, n)} announced but entries disagree", 1, 1)
    try:
        return SceneDescription(len(entries), before, after, tuple(entries), spacing)
    except ValueError as exc:
        raise DescriptionParseError(str(exc), 1, 1) from None


def obstacle_cells(entries: Iterable[ObstacleEntry]) -> list[tuple[int, int]]:
    return [e.cell for e in entries]
