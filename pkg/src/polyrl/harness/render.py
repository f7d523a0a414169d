"""SVG rendering of navigation trajectories and coverage."""

from __future__ import annotations

from pathlib import Path
from xml.sax.saxutils import escape

from ..envs import NavSpec, visited_cells
from .csvio import parse_float, read_csv, write_text_atomic
from .runner import TRAJECTORY_HEADER

SCALE = 6.0  # pixels per length unit for a 100-unit chamber; scaled for larger ones


def load_trajectory(path) -> dict[int, list[tuple[float, float]]]:
    """Positions grouped by episode, in file order."""
    _, rows = read_csv(path, required=TRAJECTORY_HEADER)
    episodes: dict[int, list[tuple[float, float]]] = {}
    for i, row in enumerate(rows, start=2):
        where = f"{path}:{i}"
        ep = int(parse_float(row["episode"], where))
        episodes.setdefault(ep, []).append((parse_float(row["x"], where), parse_float(row["y"], where)))
    return episodes


def _fmt(v: float) -> str:
    return f"{v:.3f}"


def svg_document(
    spec: NavSpec,
    episodes: dict[int, list[tuple[float, float]]],
    coverage_cell: float | None = None,
) -> str:
    px = SCALE * 100.0 / max(spec.width, spec.height)
    w, h = spec.width * px, spec.height * px

    def pt(x, y):
        return _fmt(x * px), _fmt(h - y * px)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_fmt(w)}" height="{_fmt(h)}" '
        f'viewBox="0 0 {_fmt(w)} {_fmt(h)}">',
        f"<title>{escape(spec.name)}</title>",
        f'<rect class="chamber" x="0" y="0" width="{_fmt(w)}" height="{_fmt(h)}" fill="white" stroke="black"/>',
    ]
    if coverage_cell:
        pts = [p for ep in sorted(episodes) for p in episodes[ep]]
        grid = visited_cells(pts, spec, coverage_cell)
        size = coverage_cell * px
        for ix, iy in zip(*grid.nonzero()):
            x, y = pt(ix * coverage_cell, (iy + 1) * coverage_cell)
            out.append(f'<rect class="cell" x="{x}" y="{y}" width="{_fmt(size)}" height="{_fmt(size)}" '
                       f'fill="#9ecae1" fill-opacity="0.6"/>')
    if spec.puddle is not None:
        x0, y0, x1, y1 = spec.puddle
        x, y = pt(x0, y1)
        out.append(f'<rect class="puddle" x="{x}" y="{y}" width="{_fmt((x1 - x0) * px)}" '
                   f'height="{_fmt((y1 - y0) * px)}" fill="#8c6d31" fill-opacity="0.5"/>')
    for ax, ay, bx, by in spec.walls:
        x1, y1 = pt(ax, ay)
        x2, y2 = pt(bx, by)
        out.append(f'<line class="wall" x1="{x1}" y1="{y1}" x2="{x2}" y2="{y2}" stroke="black" stroke-width="2"/>')
    for cls, (cx, cy), r, color in (
        ("start", spec.start, max(spec.start_radius, 0.5), "red"),
        ("goal", spec.goal, spec.goal_radius, "green"),
    ):
        x, y = pt(cx, cy)
        out.append(f'<circle class="{cls}" cx="{x}" cy="{y}" r="{_fmt(r * px)}" fill="{color}"/>')
    for ep in sorted(episodes):
        coords = " ".join(",".join(pt(x, y)) for x, y in episodes[ep])
        out.append(f'<polyline class="trajectory" data-episode="{ep}" points="{coords}" '
                   f'fill="none" stroke="#3182bd" stroke-width="0.8"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def render_svg(trajectory_path, spec: NavSpec, out_path, coverage_cell: float | None = None) -> Path:
    episodes = load_trajectory(trajectory_path)
    out_path = Path(out_path)
    write_text_atomic(out_path, svg_document(spec, episodes, coverage_cell))
    return out_path
