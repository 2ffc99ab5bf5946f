"""Fixed-timestep leader/follower swarm simulation.

The leader flies the potential field toward the (possibly moving) goal.
Each follower tracks a formation slot behind the leader through a virtual
mass-spring-damper link; nearby obstacles and drones shift that slot
outward, and the link dynamics turn the shift into a smooth detour.
"""

from __future__ import annotations

import csv
import functools
import json
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .impedance import DeflectionConstants, LinkState, clamp_norm, deflection_xy
from .planner import ApfConfig, Body, repulsion_xy
from .retrieval import ImpedanceProfile
from .scene import GATE_POST_HALF_THICKNESS, Scenario

LEADER, FOLLOWER = "leader", "follower"
_COS30, _SIN30 = math.cos(math.radians(30)), math.sin(math.radians(30))


class SimulationError(RuntimeError):
    pass


@dataclass(frozen=True)
class SimConfig:
    dt: float = 0.01
    max_t: float = 40.0
    collision_radius: float = 0.06
    goal_tol: float = 0.1
    seed: int = 0
    linger: float = 0.0  # keep simulating this long after the goal is reached
    formation_margin: bool = True  # leader keeps room for the formation's half-width
    settle_band: float = 0.05
    apf: ApfConfig = field(default_factory=ApfConfig)
    deflection: DeflectionConstants = field(default_factory=DeflectionConstants)

    def __post_init__(self):
        if not 0.0 < self.dt <= 0.1:
            raise ValueError(f"dt must lie in (0, 0.1], got {self.dt}")
        if not (self.collision_radius > 0 and self.goal_tol > 0):
            raise ValueError("radii must be positive")
        if self.max_t < 0 or self.linger < 0:
            raise ValueError("durations must be non-negative")

    @property
    def drone_link_radius(self) -> float:
        # drones repel each other only when nearly touching
        return 2 * self.collision_radius + 0.1

    @classmethod
    def from_dict(cls, d: dict) -> SimConfig:
        d = dict(d)
        apf = ApfConfig(**d.pop("apf", {}))
        defl = DeflectionConstants(**d.pop("deflection", {}))
        return cls(apf=apf, deflection=defl, **d)


def formation_offsets(n_followers: int, c: float) -> list[tuple[float, float]]:
    """Wedge slots in the leader frame (x forward, y left)."""
    if not c > 0:
        raise ValueError("separation must be positive")
    if n_followers == 2:
        ranks = [1]
    elif n_followers == 4:
        ranks = [1, 2]
    else:
        raise ValueError(f"unsupported follower count {n_followers}; expected 2 or 4")
    out = []
    for r in ranks:
        out.append((-r * c * _COS30, r * c * _SIN30))
        out.append((-r * c * _COS30, -r * c * _SIN30))
    return out


def formation_half_width(n_followers: int, c: float) -> float:
    return max(abs(o[1]) for o in formation_offsets(n_followers, c))


@functools.lru_cache(maxsize=64)
def leader_apf(cfg: SimConfig, n_followers: int, c: float) -> ApfConfig:
    if not cfg.formation_margin:
        return cfg.apf
    return replace(cfg.apf, margin=cfg.apf.margin + formation_half_width(n_followers, c))


def scene_bodies(scenario: Scenario, t: float) -> list[Body]:
    bodies = [Body.disc(o.position_at(t), o.radius, o.id) for o in scenario.obstacles]
    if scenario.gate is not None:
        for i, (a, b) in enumerate(scenario.gate.walls()):
            bodies.append(Body(a[0], a[1], b[0], b[1], GATE_POST_HALF_THICKNESS, -1 - i))
    return bodies


@dataclass(frozen=True)
class WorldState:
    t: float
    positions: tuple[tuple[float, float], ...]  # leader first
    velocities: tuple[tuple[float, float], ...]
    heading: tuple[float, float]
    slots: tuple[tuple[float, float], ...] = ()  # current follower setpoints
    stall_time: float = 0.0
    escape_left: float = 0.0
    escape_dir: float = 1.0
    escape_from: float = 0.0  # goal distance when the current escape began

    @classmethod
    def initial(cls, scenario: Scenario) -> WorldState:
        lx, ly = scenario.leader_start
        gx, gy = scenario.goal_at(0.0)
        n = math.hypot(gx - lx, gy - ly)
        heading = ((gx - lx) / n, (gy - ly) / n) if n > 0 else (1.0, 0.0)
        pos = (scenario.leader_start,) + tuple(scenario.follower_starts)
        return cls(0.0, pos, tuple((0.0, 0.0) for _ in pos), heading, tuple(scenario.follower_starts))


@dataclass
class StepEvents:
    escape_started: bool = False
    fallback_deflection: bool = False


STALL_FRACTION = 0.05
STALL_SECONDS = 2.0
ESCAPE_MAX_SECONDS = 10.0
ESCAPE_PROGRESS = 0.1


def step(
    state: WorldState,
    scenario: Scenario,
    profile: ImpedanceProfile,
    cfg: SimConfig,
    events: StepEvents | None = None,
    bodies: list[Body] | None = None,
) -> WorldState:
    """Advance the world by one ``cfg.dt``.

    ``bodies`` may carry precomputed obstacle geometry when nothing moves.
    """
    dt = cfg.dt
    t = state.t
    v_max = profile.v_max
    if bodies is None:
        bodies = scene_bodies(scenario, t)
    gx, gy = scenario.goal_at(t)

    # leader: potential field, capped at the profile speed
    (lx, ly) = state.positions[0]
    apf = leader_apf(cfg, len(state.positions) - 1, profile.c)
    rx, ry = repulsion_xy(lx, ly, bodies, apf)
    vx, vy = clamp_norm(apf.k_att * (gx - lx) + rx, apf.k_att * (gy - ly) + ry, v_max)
    speed = math.hypot(vx, vy)
    to_goal = math.hypot(gx - lx, gy - ly)
    stall = state.stall_time + dt if (speed < STALL_FRACTION * v_max and to_goal > 0.1) else 0.0
    escape_left, escape_dir, escape_from = state.escape_left, state.escape_dir, state.escape_from
    if stall >= STALL_SECONDS and escape_left <= 0.0 and to_goal > 0.0:
        # pick the side of the goal line the obstacles push us toward
        ux, uy = (gx - lx) / to_goal, (gy - ly) / to_goal
        escape_dir = 1.0 if (-uy * rx + ux * ry) >= 0.0 else -1.0
        escape_left = ESCAPE_MAX_SECONDS
        escape_from = to_goal
        stall = 0.0
        if events is not None:
            events.escape_started = True
    elif escape_left > 0.0 and to_goal < escape_from - ESCAPE_PROGRESS:
        escape_left = 0.0
    if escape_left > 0.0:
        # follow the inflated obstacle boundary, bending slightly outward
        rn = math.hypot(rx, ry)
        if rn > 0.0:
            nx, ny = rx / rn, ry / rn
        else:
            nx, ny = -(gx - lx) / max(to_goal, 1e-12), -(gy - ly) / max(to_goal, 1e-12)
        tx, ty = -ny * escape_dir, nx * escape_dir
        vx, vy = tx + 0.3 * nx, ty + 0.3 * ny
        norm = math.hypot(vx, vy)
        vx, vy = vx / norm * v_max, vy / norm * v_max
        escape_left -= dt
    lx_new, ly_new = lx + vx * dt, ly + vy * dt

    hx, hy = state.heading
    if math.hypot(vx, vy) > STALL_FRACTION * v_max:
        s = math.hypot(vx, vy)
        hx, hy = vx / s, vy / s

    # followers: slot + deflection, tracked through the impedance link
    offsets = formation_offsets(len(state.positions) - 1, profile.c)
    r_imp, mag = cfg.deflection.r_imp, cfg.deflection.magnitude
    r_drone = cfg.drone_link_radius
    new_pos = [(lx_new, ly_new)]
    new_vel = [(vx, vy)]
    slots = []
    for i, (ox, oy) in enumerate(offsets, start=1):
        px, py = state.positions[i]
        pvx, pvy = state.velocities[i]
        sx = lx + hx * ox - hy * oy
        sy = ly + hy * ox + hx * oy
        dfx = dfy = 0.0
        for b in bodies:
            cx, cy = b.closest_point(px, py)
            ex, ey, fb = deflection_xy(px, py, cx, cy, r_imp, mag)
            dfx += ex
            dfy += ey
            if fb and events is not None:
                events.fallback_deflection = True
        for j, (qx, qy) in enumerate(state.positions):
            if j != i:
                ex, ey, fb = deflection_xy(px, py, qx, qy, r_drone, mag)
                dfx += ex
                dfy += ey
        dfx, dfy = clamp_norm(dfx, dfy, mag)
        sx += dfx
        sy += dfy
        slots.append((sx, sy))

        ex, ey = px - sx, py - sy
        err = math.hypot(ex, ey)
        fx, fy = (-profile.F * ex / err, -profile.F * ey / err) if err > 0 else (0.0, 0.0)
        # relative velocity is measured against the leader, which carries the slot
        dvx, dvy = pvx - vx, pvy - vy
        dvx += (fx - profile.d * dvx - profile.k * ex) / profile.m * dt
        dvy += (fy - profile.d * dvy - profile.k * ey) / profile.m * dt
        nvx, nvy = clamp_norm(vx + dvx, vy + dvy, v_max)
        new_pos.append((px + nvx * dt, py + nvy * dt))
        new_vel.append((nvx, nvy))

    for p in new_pos:
        if not (math.isfinite(p[0]) and math.isfinite(p[1])):
            raise SimulationError(f"non-finite state at t={t:.3f}: positions={new_pos} velocities={new_vel}")
    return WorldState(t + dt, tuple(new_pos), tuple(new_vel), (hx, hy), tuple(slots), stall, escape_left, escape_dir, escape_from)


# -- results and metrics ----------------------------------------------------


@dataclass
class Trajectories:
    t: np.ndarray  # (T,)
    states: np.ndarray  # (T, N, 4) x, y, vx, vy; drone 0 is the leader
    slots: np.ndarray  # (T, N, 2) follower setpoints; leader rows hold its own position

    @property
    def n_drones(self) -> int:
        return self.states.shape[1]

    def roles(self) -> list[str]:
        return [LEADER] + [FOLLOWER] * (self.n_drones - 1)


@dataclass(frozen=True)
class Metrics:
    min_obstacle_clearance: float
    min_inter_drone_distance: float
    max_speed: tuple[float, ...]
    max_lateral_deflection: float
    collisions: int
    goal_reach_time: float | None
    settle_time: float

    def to_dict(self) -> dict:
        d = asdict(self)
        d["max_speed"] = list(self.max_speed)
        return d


@dataclass
class SimResult:
    trajectories: Trajectories
    metrics: Metrics
    local_minimum_escapes: list[float] = field(default_factory=list)
    fallback_deflections: int = 0

    @property
    def max_speed(self) -> float:
        return max(self.metrics.max_speed)


def _rising_edges(mask: np.ndarray) -> int:
    """Number of contact events (False->True transitions, counting an initial True)."""
    m = mask.astype(np.int8)
    return int(m[0].sum() + np.clip(np.diff(m, axis=0), 0, None).sum())


def _point_polyline_distance(points: np.ndarray, line: np.ndarray) -> np.ndarray:
    if len(line) == 1:
        return np.linalg.norm(points - line[0], axis=1)
    a = line[:-1]
    e = line[1:] - a
    ll = np.einsum("ij,ij->i", e, e)
    ll = np.where(ll == 0.0, 1.0, ll)
    out = np.empty(len(points))
    for s in range(0, len(points), 256):
        p = points[s : s + 256, None, :]
        u = np.clip(np.einsum("pij,ij->pi", p - a, e) / ll, 0.0, 1.0)
        closest = a + u[..., None] * e
        out[s : s + 256] = np.sqrt(np.min(np.sum((p - closest) ** 2, axis=-1), axis=1))
    return out


def _path_positions(path, times: np.ndarray) -> np.ndarray:
    ts = np.array([w.t for w in path])
    pts = np.array([w.pos for w in path], dtype=float)
    return np.stack([np.interp(times, ts, pts[:, 0]), np.interp(times, ts, pts[:, 1])], axis=-1)


def _segment_distance(xy: np.ndarray, a, b) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    e = np.asarray(b, dtype=float) - a
    ll = float(e @ e)
    u = np.clip(((xy - a) @ e) / ll, 0.0, 1.0) if ll > 0 else np.zeros(xy.shape[:-1])
    return np.linalg.norm(xy - (a + u[..., None] * e), axis=-1)


def obstacle_surface_distances(xy: np.ndarray, times: np.ndarray, scenario: Scenario) -> np.ndarray:
    """Drone-center to obstacle-surface distances, shape (T, N, bodies)."""
    cols = []
    for o in scenario.obstacles:
        centers = _path_positions(o.path, times)
        cols.append(np.linalg.norm(xy - centers[:, None, :], axis=-1) - o.radius)
    if scenario.gate is not None:
        for a, b in scenario.gate.walls():
            cols.append(_segment_distance(xy, a, b) - GATE_POST_HALF_THICKNESS)
    if not cols:
        return np.full(xy.shape[:2] + (0,), np.inf)
    return np.stack(cols, axis=-1)


def compute_metrics(traj: Trajectories, scenario: Scenario, cfg: SimConfig) -> Metrics:
    """Recompute every metric from raw trajectories.

    Clearance is measured from each drone's center to the nearest obstacle
    surface; a collision is any contact event where that distance drops
    below the drone radius, or two drones come closer than twice it.
    """
    if len(traj.t) == 0:
        raise ValueError("empty trajectories")
    xy = traj.states[:, :, :2]
    speeds = np.hypot(traj.states[:, :, 2], traj.states[:, :, 3])
    T, N = xy.shape[:2]
    r = cfg.collision_radius

    surf = obstacle_surface_distances(xy, traj.t, scenario)
    contacts = 0
    min_clear = math.inf
    if surf.shape[-1]:
        min_clear = float(surf.min())
        contacts += _rising_edges(surf < r)

    if N > 1:
        ii, jj = np.triu_indices(N, 1)
        pair = np.linalg.norm(xy[:, ii] - xy[:, jj], axis=-1)
        min_pair = float(pair.min())
        contacts += _rising_edges(pair < 2 * r)
    else:
        min_pair = math.inf

    leader_path = xy[:: max(1, T // 200), 0]
    if not np.array_equal(leader_path[-1], xy[-1, 0]):
        leader_path = np.vstack([leader_path, xy[-1, 0]])
    deflection = 0.0
    for n in range(1, N):
        deflection = max(deflection, float(_point_polyline_distance(xy[:, n], leader_path).max()))

    goal_time = None
    goals = _path_positions(scenario.goal, traj.t)
    reached = (traj.t >= scenario.goal[-1].t - 1e-12) & (np.linalg.norm(xy[:, 0] - goals, axis=-1) <= cfg.goal_tol)
    if reached.any():
        goal_time = float(traj.t[np.argmax(reached)])

    settle = 0.0
    if N > 1:
        err = np.linalg.norm(xy[:, 1:] - traj.slots[:, 1:], axis=-1).max(axis=1)
        outside = np.nonzero(err > cfg.settle_band)[0]
        if len(outside):
            settle = float(traj.t[min(outside[-1] + 1, T - 1)])

    return Metrics(
        min_obstacle_clearance=min_clear,
        min_inter_drone_distance=min_pair,
        max_speed=tuple(float(v) for v in speeds.max(axis=0)),
        max_lateral_deflection=deflection,
        collisions=contacts,
        goal_reach_time=goal_time,
        settle_time=settle,
    )


def _snapshot(state: WorldState) -> tuple[list, list]:
    row = [(p[0], p[1], v[0], v[1]) for p, v in zip(state.positions, state.velocities)]
    slots = [state.positions[0]] + list(state.slots)
    return row, slots


def run(scenario: Scenario, profile: ImpedanceProfile, cfg: SimConfig = SimConfig()) -> SimResult:
    """Simulate until the goal is reached (plus ``cfg.linger``) or ``cfg.max_t``."""
    state = WorldState.initial(scenario)
    rows, slot_rows, times = [], [], []
    r, s = _snapshot(state)
    rows.append(r)
    slot_rows.append(s)
    times.append(0.0)
    events = StepEvents()
    escapes, fallbacks = [], 0
    last_goal_t = scenario.goal[-1].t
    n_steps = int(math.floor(cfg.max_t / cfg.dt + 1e-9))
    static = None if any(o.motion for o in scenario.obstacles) else scene_bodies(scenario, 0.0)
    stop_at = None
    for k in range(n_steps):
        events.escape_started = events.fallback_deflection = False
        state = step(state, scenario, profile, cfg, events, static)
        state = replace(state, t=(k + 1) * cfg.dt)  # no drift from repeated addition
        if events.escape_started:
            escapes.append(state.t)
        fallbacks += events.fallback_deflection
        r, s = _snapshot(state)
        rows.append(r)
        slot_rows.append(s)
        times.append(state.t)
        if stop_at is None and state.t >= last_goal_t - 1e-12:
            g = scenario.goal_at(state.t)
            p = state.positions[0]
            if math.hypot(p[0] - g[0], p[1] - g[1]) <= cfg.goal_tol:
                stop_at = k + int(round(cfg.linger / cfg.dt))
        if stop_at is not None and k >= stop_at:
            break
    traj = Trajectories(np.array(times), np.array(rows, dtype=float), np.array(slot_rows, dtype=float))
    return SimResult(traj, compute_metrics(traj, scenario, cfg), escapes, fallbacks)


# -- output files -----------------------------------------------------------


def write_trajectory_csv(traj: Trajectories, path: str | Path) -> None:
    roles = traj.roles()
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(["t", "drone_id", "role", "x", "y", "vx", "vy"])
        for k, t in enumerate(traj.t):
            for n in range(traj.n_drones):
                x, y, vx, vy = traj.states[k, n]
                w.writerow([f"{t:.4f}", n, roles[n], repr(float(x)), repr(float(y)), repr(float(vx)), repr(float(vy))])


def read_trajectory_csv(path: str | Path) -> tuple[np.ndarray, np.ndarray]:
    """Inverse of :func:`write_trajectory_csv` for the state columns."""
    with open(path, newline="", encoding="utf-8") as f:
        rows = list(csv.DictReader(f))
    n = max(int(r["drone_id"]) for r in rows) + 1
    t = np.array([float(r["t"]) for r in rows[::n]])
    states = np.array([[float(r[c]) for c in ("x", "y", "vx", "vy")] for r in rows]).reshape(len(t), n, 4)
    return t, states


def _finite_or_none(x):
    if isinstance(x, float) and not math.isfinite(x):
        return None
    if isinstance(x, dict):
        return {k: _finite_or_none(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_finite_or_none(v) for v in x]
    return x


def metrics_dict(result: SimResult) -> dict:
    """Metrics plus run flags, with infinities (no obstacles) mapped to ``None`` for strict JSON."""
    d = result.metrics.to_dict()
    d["local_minimum_escapes"] = list(result.local_minimum_escapes)
    d["fallback_deflections"] = result.fallback_deflections
    return _finite_or_none(d)


def write_metrics_json(result: SimResult, path: str | Path, extra: dict | None = None) -> None:
    d = metrics_dict(result)
    if extra:
        d.update(_finite_or_none(extra))
    with open(path, "w", encoding="utf-8") as f:
        json.dump(d, f, indent=2, allow_nan=False)
        f.write("\n")


def link_state_of(state: WorldState, i: int) -> LinkState:
    """Link error of follower ``i`` (1-based drone index) against its current setpoint."""
    p, s = state.positions[i], state.slots[i - 1]
    v, lv = state.velocities[i], state.velocities[0]
    return LinkState.of((p[0] - s[0], p[1] - s[1]), (v[0] - lv[0], v[1] - lv[1]))
