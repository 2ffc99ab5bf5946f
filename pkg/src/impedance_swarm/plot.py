"""Hand-written SVG rendering of a run: arena, obstacles, gate and trajectories."""

from __future__ import annotations

from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from .scene import GATE_POST_HALF_THICKNESS, ObstacleKind, Scenario
from .sim import Trajectories

SCALE = 200.0  # pixels per metre
PAD = 20.0
COLORS = ("#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")
KIND_FILL = {ObstacleKind.HARD: "#7f7f7f", ObstacleKind.SOFT: "#f4a582"}


def _xy(scenario: Scenario, x: float, y: float) -> tuple[float, float]:
    # SVG y grows downward
    return PAD + x * SCALE, PAD + (scenario.arena.height - y) * SCALE


def _polyline(scenario: Scenario, pts: np.ndarray, stride: int) -> str:
    sel = pts[::stride]
    if len(pts) and not np.array_equal(sel[-1], pts[-1]):
        sel = np.vstack([sel, pts[-1]])
    return " ".join("{:.1f},{:.1f}".format(*_xy(scenario, float(x), float(y))) for x, y in sel)


def render_svg(scenario: Scenario, traj: Trajectories | None = None, title: str = "") -> str:
    w = scenario.arena.width * SCALE + 2 * PAD
    h = scenario.arena.height * SCALE + 2 * PAD
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0f}" height="{h:.0f}" viewBox="0 0 {w:.0f} {h:.0f}">',
        f'<rect x="{PAD}" y="{PAD}" width="{w - 2 * PAD:.0f}" height="{h - 2 * PAD:.0f}" fill="white" stroke="black"/>',
    ]
    if title:
        out.append(f'<text x="{PAD}" y="{PAD - 6}" font-family="sans-serif" font-size="12">{escape(title)}</text>')

    for o in scenario.obstacles:
        if o.motion:
            pts = np.array([w_.pos for w_ in o.path])
            out.append(f'<polyline points="{_polyline(scenario, pts, 1)}" fill="none" stroke="{KIND_FILL[o.kind]}" stroke-dasharray="4 3"/>')
        cx, cy = _xy(scenario, *o.position)
        out.append(
            f'<circle cx="{cx:.1f}" cy="{cy:.1f}" r="{o.radius * SCALE:.1f}" fill="{KIND_FILL[o.kind]}" stroke="black">'
            f"<title>{o.kind.value} {o.id}</title></circle>"
        )

    if scenario.gate is not None:
        for a, b in scenario.gate.walls():
            (x1, y1), (x2, y2) = _xy(scenario, *a), _xy(scenario, *b)
            out.append(
                f'<line x1="{x1:.1f}" y1="{y1:.1f}" x2="{x2:.1f}" y2="{y2:.1f}" stroke="black" '
                f'stroke-width="{2 * GATE_POST_HALF_THICKNESS * SCALE:.1f}" stroke-linecap="round"/>'
            )

    goals = np.array([w_.pos for w_ in scenario.goal])
    if len(goals) > 1:
        out.append(f'<polyline points="{_polyline(scenario, goals, 1)}" fill="none" stroke="black" stroke-dasharray="2 2"/>')
    gx, gy = _xy(scenario, *scenario.goal[-1].pos)
    out.append(f'<path d="M{gx - 6:.1f},{gy - 6:.1f} L{gx + 6:.1f},{gy + 6:.1f} M{gx - 6:.1f},{gy + 6:.1f} L{gx + 6:.1f},{gy - 6:.1f}" stroke="black" stroke-width="2"/>')

    if traj is not None:
        stride = max(1, len(traj.t) // 400)
        for n, role in enumerate(traj.roles()):
            color = COLORS[n % len(COLORS)]
            pts = traj.states[:, n, :2]
            width = 2.0 if n == 0 else 1.2
            out.append(
                f'<polyline points="{_polyline(scenario, pts, stride)}" fill="none" stroke="{color}" stroke-width="{width}">'
                f"<title>{role} {n}</title></polyline>"
            )
            x0, y0 = _xy(scenario, *pts[0])
            out.append(f'<circle cx="{x0:.1f}" cy="{y0:.1f}" r="3" fill="{color}"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_svg(path: str | Path, scenario: Scenario, traj: Trajectories | None = None, title: str = "") -> None:
    Path(path).write_text(render_svg(scenario, traj, title), encoding="utf-8")
