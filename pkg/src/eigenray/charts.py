"""Choosing one eigenray per node and testing the choices for disjointness.

Each eigenray is drawn in the cut plane as an exact polyline: the defining
ray of a node is straight, while the opposite eigenray is traced as a
geodesic and bends where it crosses other cuts.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, product
from typing import Dict, List, Optional, Sequence, Tuple

from .affine import Vec2Q, add, det2, scale, sub, vec
from .diagram import EigenrayDiagram, five_charts, nodal_slide
from .nodal import ChartAtlas, trace_geodesic

__all__ = [
    "Eigenray",
    "eigenray_polyline",
    "polylines_meet",
    "ChoiceReport",
    "eigenray_choices",
    "FiveChartsReport",
    "five_charts_report",
]

Polyline = List[Tuple[Vec2Q, Vec2Q]]

_LEAD = Fraction(1, 1000)


@dataclass(frozen=True)
class Eigenray:
    node: Vec2Q
    sign: int  # +1 follows the diagram ray, -1 is the opposite eigenray

    def label(self) -> str:
        return f"{'+' if self.sign > 0 else '-'}({self.node[0]},{self.node[1]})"


def eigenray_polyline(atlas: ChartAtlas, er: Eigenray, budget=20) -> Polyline:
    """Segments ``(start, end)`` of the eigenray up to affine length ``budget``."""
    i, _ = atlas.diagram.locate(er.node)
    e = atlas.diagram.rays[i].dir
    budget = Fraction(budget)
    if er.sign > 0:
        return [(er.node, add(er.node, scale(budget, e)))]
    back = (-e[0], -e[1])
    start = add(er.node, scale(_LEAD, back))
    segs: Polyline = [(er.node, start)]
    path = trace_geodesic(atlas, start, back, budget - _LEAD)
    segs += [(s.start, s.end) for s in path.segments if s.length]
    return segs


def _segment_meet(a: Tuple[Vec2Q, Vec2Q], b: Tuple[Vec2Q, Vec2Q]) -> Optional[Vec2Q]:
    p, p2 = a
    q_, q2 = b
    u, w = sub(p2, p), sub(q2, q_)
    cross = det2(u, w)
    rel = sub(q_, p)
    if cross != 0:
        s = det2(rel, w) / cross
        t = det2(rel, u) / cross
        if 0 <= s <= 1 and 0 <= t <= 1:
            return add(p, scale(s, u))
        return None
    if det2(rel, u) != 0:
        return None
    # collinear: report the first shared point along ``a``
    uu = u[0] * u[0] + u[1] * u[1]
    if uu == 0:
        return None
    ts = sorted((_dot(sub(x, p), u) / uu for x in (q_, q2)))
    lo, hi = max(ts[0], Fraction(0)), min(ts[1], Fraction(1))
    return add(p, scale(lo, u)) if lo <= hi else None


def _dot(a, b) -> Fraction:
    return Fraction(a[0]) * b[0] + Fraction(a[1]) * b[1]


def polylines_meet(a: Polyline, b: Polyline) -> Optional[Vec2Q]:
    for sa in a:
        for sb in b:
            hit = _segment_meet(sa, sb)
            if hit is not None:
                return hit
    return None


@dataclass
class ChoiceReport:
    choice: Tuple[Eigenray, ...]
    meetings: List[Tuple[int, int, Vec2Q]] = field(default_factory=list)

    @property
    def disjoint(self) -> bool:
        return not self.meetings

    def to_json(self) -> dict:
        return {
            "choice": [er.label() for er in self.choice],
            "disjoint": self.disjoint,
            "intersections": [
                {"pair": [self.choice[i].label(), self.choice[j].label()], "point": [str(c) for c in p]}
                for i, j, p in self.meetings
            ],
        }


def eigenray_choices(d: EigenrayDiagram, budget=20) -> List[ChoiceReport]:
    """All ways of choosing one eigenray per node, with pairwise intersections."""
    atlas = ChartAtlas.from_diagram(d)
    nodes = [c.node for c in atlas.cuts]
    polys: Dict[Eigenray, Polyline] = {}
    for n in nodes:
        for s in (1, -1):
            polys[Eigenray(n, s)] = eigenray_polyline(atlas, Eigenray(n, s), budget)
    reports = []
    for signs in product((1, -1), repeat=len(nodes)):
        choice = tuple(Eigenray(n, s) for n, s in zip(nodes, signs))
        rep = ChoiceReport(choice)
        for i, j in combinations(range(len(choice)), 2):
            hit = polylines_meet(polys[choice[i]], polys[choice[j]])
            if hit is not None:
                rep.meetings.append((i, j, hit))
        reports.append(rep)
    return reports


@dataclass
class FiveChartsReport:
    direct: List[ChoiceReport]
    slides: List[Tuple[Vec2Q, Vec2Q, EigenrayDiagram, ChoiceReport]]

    @property
    def direct_count(self) -> int:
        return sum(r.disjoint for r in self.direct)

    @property
    def blocked(self) -> List[ChoiceReport]:
        return [r for r in self.direct if not r.disjoint]

    @property
    def slide_count(self) -> int:
        return sum(rep.disjoint for *_, rep in self.slides)

    @property
    def tally(self) -> str:
        return f"{self.direct_count} direct + {self.slide_count} after slides = {self.direct_count + self.slide_count}"

    @property
    def ok(self) -> bool:
        return self.direct_count == 3 and len(self.blocked) == 1 and self.slide_count == 2

    def to_json(self) -> dict:
        return {
            "direct": [r.to_json() for r in self.direct],
            "blocked": [r.to_json() for r in self.blocked],
            "slides": [
                {
                    "from": [str(c) for c in a],
                    "to": [str(c) for c in b],
                    "diagram": d.to_json(),
                    "opposite_pair": rep.to_json(),
                }
                for a, b, d, rep in self.slides
            ],
            "tally": self.tally,
            "ok": self.ok,
        }


def five_charts_report(budget=20) -> FiveChartsReport:
    """Enumerate the four eigenray choices, then slide each node past the origin.

    After sliding a node to the opposite side of the origin, the choice of
    both opposite eigenrays is retested in the new diagram.
    """
    d = five_charts()
    direct = eigenray_choices(d, budget)
    slides = []
    for old, new in (((1, 0), (-1, 0)), ((0, 1), (0, -1))):
        d2 = nodal_slide(d, old, new)
        both_opposite = [r for r in eigenray_choices(d2, budget) if all(er.sign < 0 for er in r.choice)]
        slides.append((vec(*old), vec(*new), d2, both_opposite[0]))
    return FiveChartsReport(direct, slides)
