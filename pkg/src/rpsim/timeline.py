"""Utilization timeline of a schedule rendered as a static SVG.

Time runs left to right and every Data tile that ever holds a qubit gets
one row.  Each delayed gate contributes a line from the moment it asked
for a resource to the moment the resource arrived:

* a magic-state wait is a horizontal line on the row of the gate's first
  operand, spanning ``d_anc``;
* a cross-segment teleport is a sloped line from the source tile's row to
  the destination tile's row, spanning ``d_tel``.

The output depends only on the schedule, so identical schedules give
byte-identical files.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from xml.sax.saxutils import escape

from .errors import RPSimError
from .scheduler import Schedule

WIDTH = 1000
MARGIN_LEFT = 90
MARGIN_RIGHT = 20
MARGIN_TOP = 40
MARGIN_BOTTOM = 50
MAX_PLOT_HEIGHT = 2000
MAX_ROW_HEIGHT = 16
LABEL_ROWS = 64
N_TICKS = 5

COLORS = {"anc": "#d62728", "tel": "#1f77b4"}
DATA_AUX = ("Move", "Shuttle", "ECRound")
LEGEND = {
    "anc": "magic-state wait (horizontal, length = d_anc)",
    "tel": "cross-segment teleport (sloped, length = d_tel)",
}


class OutputError(RPSimError):
    """The timeline file could not be written."""


@dataclass(frozen=True)
class DelayLine:
    kind: str
    gate_id: int
    t0: float
    t1: float
    row0: int
    row1: int

    @property
    def duration(self) -> float:
        return self.t1 - self.t0


def tile_rows(sched: Schedule) -> list[tuple[int, int]]:
    """Every Data tile touched by the schedule, in (segment, tile) order."""
    tiles = set(sched.initial_map.values())
    for op in sched.ops:
        # Preparations sit on Ancilla tiles and EPR records on no tile at all.
        if not op.aux or op.gate_kind in DATA_AUX:
            tiles.update(op.location)
        tiles.update(loc for loc in (op.tel_from, op.tel_to) if loc is not None)
    return sorted(tiles)


def delay_lines(sched: Schedule) -> list[DelayLine]:
    rows = {loc: i for i, loc in enumerate(tile_rows(sched))}
    out = []
    for op in sched.ops:
        if op.aux:
            continue
        if op.d_anc > 0 and op.location:
            r = rows[op.location[0]]
            out.append(DelayLine("anc", op.gate_id, op.t_start_actual - op.d_anc, op.t_start_actual, r, r))
        if op.d_tel > 0 and op.tel_from is not None and op.tel_to is not None:
            t0 = op.t_start_ready + op.d_swp
            out.append(
                DelayLine("tel", op.gate_id, t0, t0 + op.d_tel, rows[op.tel_from], rows[op.tel_to])
            )
    return out


def _fmt(x: float) -> str:
    return f"{x:.2f}"


def _time_label(t: float) -> str:
    if t >= 1e6:
        return f"{t / 1e6:.3g} s"
    if t >= 1e3:
        return f"{t / 1e3:.3g} ms"
    return f"{t:.3g} us"


def timeline_svg(sched: Schedule) -> str:
    rows = tile_rows(sched)
    lines = delay_lines(sched)
    n = max(len(rows), 1)
    row_h = min(MAX_ROW_HEIGHT, MAX_PLOT_HEIGHT / n)
    plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT
    plot_h = row_h * n
    height = MARGIN_TOP + plot_h + MARGIN_BOTTOM
    span = sched.t_total if sched.t_total > 0 else 1.0

    def x(t: float) -> str:
        return _fmt(MARGIN_LEFT + plot_w * t / span)

    def y(r: int) -> str:
        return _fmt(MARGIN_TOP + row_h * (r + 0.5))

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{_fmt(height)}" '
        f'viewBox="0 0 {WIDTH} {_fmt(height)}" font-family="sans-serif" font-size="10">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{_fmt(height)}" fill="white"/>',
        '<g id="axes" stroke="black" stroke-width="1">',
        f'<line x1="{MARGIN_LEFT}" y1="{MARGIN_TOP}" x2="{MARGIN_LEFT}" y2="{_fmt(MARGIN_TOP + plot_h)}"/>',
        f'<line x1="{MARGIN_LEFT}" y1="{_fmt(MARGIN_TOP + plot_h)}" '
        f'x2="{WIDTH - MARGIN_RIGHT}" y2="{_fmt(MARGIN_TOP + plot_h)}"/>',
        "</g>",
        '<g id="ticks">',
    ]
    base = MARGIN_TOP + plot_h
    for i in range(N_TICKS + 1):
        t = span * i / N_TICKS if sched.t_total > 0 else 0.0
        xi = x(span * i / N_TICKS)
        out.append(f'<line x1="{xi}" y1="{_fmt(base)}" x2="{xi}" y2="{_fmt(base + 4)}" stroke="black"/>')
        out.append(f'<text x="{xi}" y="{_fmt(base + 16)}" text-anchor="middle">{escape(_time_label(t))}</text>')
    out.append(
        f'<text x="{_fmt(MARGIN_LEFT + plot_w / 2)}" y="{_fmt(base + 36)}" text-anchor="middle">time</text>'
    )
    if len(rows) <= LABEL_ROWS:
        for i, (s, t) in enumerate(rows):
            out.append(
                f'<text x="{MARGIN_LEFT - 4}" y="{y(i)}" text-anchor="end" dominant-baseline="middle">'
                f"seg {s} tile {t}</text>"
            )
    out.append("</g>")
    for kind in ("anc", "tel"):
        out.append(f'<g id="{kind}" stroke="{COLORS[kind]}" stroke-width="1.5">')
        for ln in lines:
            if ln.kind == kind:
                out.append(
                    f'<line x1="{x(ln.t0)}" y1="{y(ln.row0)}" x2="{x(ln.t1)}" y2="{y(ln.row1)}" '
                    f'data-gate="{ln.gate_id}"/>'
                )
        out.append("</g>")
    out.append('<g id="legend">')
    for i, kind in enumerate(("anc", "tel")):
        ly = 16
        lx = MARGIN_LEFT + 320 * i
        out.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 20}" y2="{ly}" stroke="{COLORS[kind]}" stroke-width="2"/>')
        out.append(f'<text x="{lx + 25}" y="{ly + 3}">{escape(LEGEND[kind])}</text>')
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def render_timeline(sched: Schedule, out: str | Path) -> Path:
    path = Path(out)
    try:
        path.write_text(timeline_svg(sched))
    except OSError as exc:
        raise OutputError(f"cannot write timeline to {path}: {exc}") from exc
    return path
