"""Deterministic SVG drawings of eigenray diagrams.

World coordinates are y-up; the SVG is written with ``y`` negated so the
picture is not mirrored.  Output depends only on the inputs, so rendering the
same diagram twice gives identical bytes.
"""
from __future__ import annotations

import math
from typing import List, Optional, Sequence, Tuple
from xml.sax.saxutils import escape

from .diagram import EigenrayDiagram
from .nodal import GeodesicPath

__all__ = ["render_svg"]

Point = Tuple[float, float]


def _num(x: float) -> str:
    s = f"{x:.6f}".rstrip("0").rstrip(".")
    return "0" if s in ("-0", "") else s


def _ray_length(d: EigenrayDiagram) -> float:
    pts = [(float(p[0]), float(p[1])) for r in d.rays for p in [r.base] + [n.position for n in r.nodes]]
    if not pts:
        return 1.0
    xs, ys = [p[0] for p in pts], [p[1] for p in pts]
    return max(2.0, 0.5 * max(max(xs) - min(xs), max(ys) - min(ys), 1.0))


def _geodesic_points(g: GeodesicPath) -> List[Point]:
    pts = [(float(g.segments[0].start[0]), float(g.segments[0].start[1]))] if g.segments else []
    for s in g.segments:
        e = s.end
        pts.append((float(e[0]), float(e[1])))
    return pts


def render_svg(
    d: EigenrayDiagram,
    geodesics: Sequence[GeodesicPath] = (),
    width: int = 480,
    ray_length: Optional[float] = None,
) -> str:
    """Rays become arrows, nodes become crosses labeled by multiplicity."""
    length = ray_length if ray_length is not None else _ray_length(d)
    arrows = []
    for r in d.canonical():
        bx, by = float(r.base[0]), float(r.base[1])
        norm = math.hypot(*r.dir)
        tip = (bx + length * r.dir[0] / norm, by + length * r.dir[1] / norm)
        arrows.append(((bx, by), tip, (r.dir[0] / norm, r.dir[1] / norm)))
    crosses = [
        ((float(n.position[0]), float(n.position[1])), n.multiplicity)
        for r in d.canonical()
        for n in r.nodes
    ]
    lines = [_geodesic_points(g) for g in geodesics]

    pts: List[Point] = [(0.0, 0.0)]
    for a, b, _ in arrows:
        pts += [a, b]
    pts += [c for c, _ in crosses]
    for line in lines:
        pts += line
    xs, ys = [p[0] for p in pts], [p[1] for p in pts]
    x0, x1, y0, y1 = min(xs), max(xs), min(ys), max(ys)
    if x1 - x0 < 1e-9:
        x0, x1 = x0 - 1, x1 + 1
    if y1 - y0 < 1e-9:
        y0, y1 = y0 - 1, y1 + 1
    mx, my = 0.1 * (x1 - x0), 0.1 * (y1 - y0)
    x0, x1, y0, y1 = x0 - mx, x1 + mx, y0 - my, y1 + my
    w, h = x1 - x0, y1 - y0
    unit = max(w, h)
    stroke = unit / 250
    arm = unit / 60
    height = max(1, round(width * h / w))

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="{_num(x0)} {_num(-y1)} {_num(w)} {_num(h)}">',
        f'<g stroke="#bbbbbb" stroke-width="{_num(stroke)}">',
        f'<line x1="{_num(x0)}" y1="0" x2="{_num(x1)}" y2="0"/>',
        f'<line x1="0" y1="{_num(-y0)}" x2="0" y2="{_num(-y1)}"/>',
        "</g>",
    ]
    out.append(f'<g stroke="#1f4e9a" fill="#1f4e9a" stroke-width="{_num(1.5 * stroke)}">')
    for (ax, ay), (tx, ty), (ux, uy) in arrows:
        out.append(f'<line x1="{_num(ax)}" y1="{_num(-ay)}" x2="{_num(tx)}" y2="{_num(-ty)}"/>')
        # arrowhead: two barbs at the tip
        back = (tx - 2 * arm * ux, ty - 2 * arm * uy)
        left = (back[0] - arm * uy, back[1] + arm * ux)
        right = (back[0] + arm * uy, back[1] - arm * ux)
        out.append(
            f'<polygon points="{_num(tx)},{_num(-ty)} {_num(left[0])},{_num(-left[1])} '
            f'{_num(right[0])},{_num(-right[1])}"/>'
        )
    out.append("</g>")
    for line in lines:
        if len(line) < 2:
            continue
        pts_attr = " ".join(f"{_num(x)},{_num(-y)}" for x, y in line)
        out.append(
            f'<polyline fill="none" stroke="#2a8a3e" stroke-dasharray="{_num(3 * stroke)}" '
            f'stroke-width="{_num(stroke)}" points="{pts_attr}"/>'
        )
    out.append(f'<g stroke="#b0202a" stroke-width="{_num(2 * stroke)}">')
    for (cx, cy), _ in crosses:
        out.append(
            f'<line x1="{_num(cx - arm)}" y1="{_num(-cy - arm)}" x2="{_num(cx + arm)}" y2="{_num(-cy + arm)}"/>'
        )
        out.append(
            f'<line x1="{_num(cx - arm)}" y1="{_num(-cy + arm)}" x2="{_num(cx + arm)}" y2="{_num(-cy - arm)}"/>'
        )
    out.append("</g>")
    out.append(f'<g font-family="sans-serif" font-size="{_num(3 * arm)}" fill="#b0202a">')
    for (cx, cy), m in crosses:
        out.append(f'<text x="{_num(cx + 1.5 * arm)}" y="{_num(-cy - 1.5 * arm)}">{escape(str(m))}</text>')
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"
