"""Chart atlas of the nodal integral affine plane cut along the eigenrays.

Each copy of a sub-ray ``l^n`` is a branch cut.  Crossing the cut with
``det(e, v) > 0`` applies the unipotent map ``v -> v - m det(e, v - n) e``
based at the node, and the opposite crossing applies its inverse.  Holonomy,
development of paths and geodesic tracing all compose these maps in
traversal order, so the map recorded for a path ``p1 + p2`` is
``develop(p2) o develop(p1)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

from .affine import (
    IDENTITY,
    IntegralAffineMap,
    Vec2Q,
    Vec2Z,
    add,
    compose,
    det2,
    linear_shear,
    scale,
    sub,
    vec,
)
from .diagram import EigenrayDiagram, Node, Ray

__all__ = [
    "AtlasError",
    "Cut",
    "ChartAtlas",
    "Crossing",
    "Segment",
    "GeodesicPath",
    "Loop",
    "EXTENDED",
    "CONVERGED",
    "HIT_NODE",
    "holonomy",
    "eigen_directions",
    "trace_geodesic",
    "develop",
    "gauss_bonnet_check",
    "GaussBonnetReport",
]

EXTENDED = "extended-to-budget"
CONVERGED = "converged-to-eigenray-point"
HIT_NODE = "hit-node"


class AtlasError(ValueError):
    """A path or loop violates the atlas preconditions."""


@dataclass(frozen=True)
class Cut:
    index: int
    node: Vec2Q
    dir: Vec2Z
    mult: int

    @property
    def transition(self) -> IntegralAffineMap:
        lin = linear_shear(self.dir, -self.mult)
        return IntegralAffineMap(lin.linear, sub(self.node, lin.apply_linear(self.node)))

    def param(self, p) -> Fraction:
        w = sub(p, self.node)
        return (w[0] * self.dir[0] + w[1] * self.dir[1]) / (self.dir[0] ** 2 + self.dir[1] ** 2)


@dataclass(frozen=True)
class ChartAtlas:
    diagram: EigenrayDiagram
    cuts: Tuple[Cut, ...] = field(default=())

    @classmethod
    def from_diagram(cls, d: EigenrayDiagram) -> "ChartAtlas":
        cuts = []
        for r in d.rays:
            for n in r.sorted_nodes():
                cuts.append(Cut(len(cuts), n.position, r.dir, n.multiplicity))
        return cls(d, tuple(cuts))

    @property
    def nodes(self) -> List[Vec2Q]:
        return [c.node for c in self.cuts]

    def crossing_map(self, cut: Cut, sign: int) -> IntegralAffineMap:
        t = cut.transition
        return t if sign > 0 else t.inverse()


def _atlas(a) -> ChartAtlas:
    return a if isinstance(a, ChartAtlas) else ChartAtlas.from_diagram(a)


@dataclass(frozen=True)
class Crossing:
    cut: int
    point: Vec2Q
    sign: int


@dataclass(frozen=True)
class Segment:
    start: Vec2Q
    dir: Vec2Q
    length: Optional[Fraction]

    @property
    def end(self) -> Vec2Q:
        return add(self.start, scale(self.length, self.dir))


@dataclass
class GeodesicPath:
    segments: List[Segment]
    crossings: List[Crossing]
    status: str
    # index of the segment that ends at each crossing
    crossing_segments: List[int] = field(default_factory=list)

    @property
    def end(self) -> Vec2Q:
        return self.segments[-1].end

    @property
    def total_length(self) -> Fraction:
        return sum((s.length for s in self.segments), Fraction(0))

    def to_json(self) -> dict:
        return {
            "status": self.status,
            "segments": [
                {
                    "start": [str(c) for c in s.start],
                    "dir": [str(c) for c in s.dir],
                    "length": None if s.length is None else str(s.length),
                }
                for s in self.segments
            ],
            "crossings": [
                {"cut": c.cut, "point": [str(x) for x in c.point], "sign": c.sign} for c in self.crossings
            ],
        }


@dataclass(frozen=True)
class Loop:
    vertices: Tuple[Vec2Q, ...]

    def __post_init__(self):
        verts = tuple(vec(*v) for v in self.vertices)
        if len(verts) < 3:
            raise AtlasError("a loop needs at least three vertices")
        object.__setattr__(self, "vertices", verts)

    def closed_path(self) -> List[Vec2Q]:
        return list(self.vertices) + [self.vertices[0]]

    def concat(self, other: "Loop") -> "Loop":
        """Traverse ``self`` then ``other``; both must start at the same vertex."""
        if self.vertices[0] != other.vertices[0]:
            raise AtlasError("loops must share their base vertex")
        return Loop(self.vertices + other.vertices)


# ---------------------------------------------------------------- crossings


def _segment_crossings(atlas: ChartAtlas, p, q_) -> List[Tuple[Fraction, Cut, int]]:
    w = sub(q_, p)
    if w == (0, 0):
        return []
    hits = []
    for cut in atlas.cuts:
        e = cut.dir
        cross = det2(e, w)
        if cross == 0:
            if det2(e, sub(p, cut.node)) != 0:
                continue
            tp, tq = cut.param(p), cut.param(q_)
            lo, hi = min(tp, tq), max(tp, tq)
            if lo <= 0 <= hi:
                raise AtlasError(f"path passes through node {tuple(map(str, cut.node))}")
            if hi >= 0:
                raise AtlasError("path runs along a cut")
            continue
        s = det2(e, sub(cut.node, p)) / cross
        if s < 0 or s > 1:
            continue
        point = add(p, scale(s, w))
        t = cut.param(point)
        if t < 0:
            continue
        if t == 0:
            raise AtlasError(f"path passes through node {tuple(map(str, cut.node))}")
        if s == 0 or s == 1:
            raise AtlasError("path vertex lies on a cut")
        hits.append((s, cut, 1 if cross > 0 else -1))
    hits.sort(key=lambda h: (h[0], h[1].index))
    return hits


def develop(atlas, path: Sequence) -> IntegralAffineMap:
    """Accumulated chart change along a polyline."""
    atlas = _atlas(atlas)
    pts = [vec(*p) for p in path]
    total = IDENTITY
    for a, b in zip(pts, pts[1:]):
        for _, cut, sign in _segment_crossings(atlas, a, b):
            total = compose(atlas.crossing_map(cut, sign), total)
    return total


def holonomy(atlas, loop) -> IntegralAffineMap:
    if not isinstance(loop, Loop):
        loop = Loop(tuple(loop))
    return develop(atlas, loop.closed_path())


def eigen_directions(atlas, node) -> Tuple[Ray, Ray]:
    atlas = _atlas(atlas)
    pos = node.position if isinstance(node, Node) else vec(*node)
    i, n = atlas.diagram.locate(pos)
    e = atlas.diagram.rays[i].dir
    return Ray(pos, e), Ray(pos, (-e[0], -e[1]))


# ---------------------------------------------------------------- geodesics


def _on_cut(atlas: ChartAtlas, p) -> bool:
    for cut in atlas.cuts:
        if det2(cut.dir, sub(p, cut.node)) == 0 and cut.param(p) >= 0:
            return True
    return False


def trace_geodesic(atlas, start, direction, budget, max_crossings: int = 10_000) -> GeodesicPath:
    """Follow a straight line through the cut plane for affine parameter ``budget``."""
    atlas = _atlas(atlas)
    p = vec(*start)
    v = vec(*direction)
    remaining = Fraction(budget)
    if v == (0, 0):
        raise AtlasError("geodesic direction must be nonzero")
    if remaining < 0:
        raise AtlasError("budget must be nonnegative")
    if _on_cut(atlas, p):
        raise AtlasError("geodesic starts on a cut or node")
    segments: List[Segment] = []
    crossings: List[Crossing] = []
    owners: List[int] = []
    steps: List[Fraction] = []
    while True:
        best = None
        events = []
        for cut in atlas.cuts:
            e = cut.dir
            cross = det2(v, e)
            rel = sub(cut.node, p)
            if cross == 0:
                if det2(e, sub(p, cut.node)) != 0:
                    continue
                # moving along the line of the cut: only the node can be met
                s = cut.param(cut.node) - cut.param(p)
                s = s * (e[0] ** 2 + e[1] ** 2) / (v[0] * e[0] + v[1] * e[1])
                if s > 0:
                    events.append((s, cut, "node"))
                continue
            s = det2(rel, e) / cross
            if s <= 0:
                continue
            t = cut.param(add(p, scale(s, v)))
            if t < 0:
                continue
            events.append((s, cut, "node" if t == 0 else "cross"))
        if events:
            best = min(ev[0] for ev in events)
        if best is None or best > remaining:
            segments.append(Segment(p, v, remaining))
            return GeodesicPath(segments, crossings, EXTENDED, owners)
        at_best = [ev for ev in events if ev[0] == best]
        segments.append(Segment(p, v, best))
        p = add(p, scale(best, v))
        remaining -= best
        if any(kind == "node" for _, _, kind in at_best):
            return GeodesicPath(segments, crossings, HIT_NODE, owners)
        w = v
        for _, cut, _ in sorted(at_best, key=lambda ev: ev[1].index):
            sign = 1 if det2(cut.dir, w) > 0 else -1
            crossings.append(Crossing(cut.index, p, sign))
            owners.append(len(segments) - 1)
            v = atlas.crossing_map(cut, sign).apply_linear(v)
        steps.append(best)
        if len(crossings) >= max_crossings:
            tail = steps[-8:]
            if len(tail) >= 2 and all(b < a for a, b in zip(tail, tail[1:])):
                return GeodesicPath(segments, crossings, CONVERGED, owners)
            raise AtlasError("crossing cap reached without convergence")


# ---------------------------------------------------------------- Gauss-Bonnet


@dataclass
class GaussBonnetReport:
    node: Vec2Q
    crossings: List[int]
    angles: List[Tuple[float, float]]
    tangential: List[int]
    double_hits: List[Tuple[int, int]]

    @property
    def cancels(self) -> bool:
        return all(abs(a0 + a1) < 1e-12 for a0, a1 in self.angles)

    @property
    def passed(self) -> bool:
        return self.cancels and not self.double_hits

    def to_json(self) -> dict:
        return {
            "node": [str(c) for c in self.node],
            "crossings": self.crossings,
            "angles": [list(a) for a in self.angles],
            "tangential": self.tangential,
            "double_hits": [list(h) for h in self.double_hits],
            "cancels": self.cancels,
            "passed": self.passed,
        }


def _angle(u, w) -> float:
    """Signed angle turning ``u`` into ``w``."""
    return math.atan2(float(det2(u, w)), float(u[0] * w[0] + u[1] * w[1]))


def gauss_bonnet_check(atlas, node, geodesic: GeodesicPath) -> GaussBonnetReport:
    """Turning angles at each crossing of ``node``'s eigenray, and double hits.

    Angles are measured in the flat chart of the incoming segment: ``alpha0``
    turns the eigenray direction into the geodesic, ``alpha1`` turns the
    outgoing geodesic, pulled back into that chart, into the eigenray.
    Two crossings of the eigenray with no other cut crossed in between are a
    double hit.  Segments running along the eigenray line are tangential and
    do not count as crossings.
    """
    atlas = _atlas(atlas)
    pos = node.position if isinstance(node, Node) else vec(*node)
    own = {c.index for c in atlas.cuts if c.node == pos}
    if not own:
        raise AtlasError(f"no node at {tuple(map(str, pos))}")
    e = next(c.dir for c in atlas.cuts if c.node == pos)
    hits, angles = [], []
    for k, cr in enumerate(geodesic.crossings):
        if cr.cut not in own:
            continue
        hits.append(k)
        v_in = geodesic.segments[geodesic.crossing_segments[k]].dir
        seg_after = geodesic.crossing_segments[k] + 1
        v_out = geodesic.segments[seg_after].dir if seg_after < len(geodesic.segments) else v_in
        back = atlas.crossing_map(atlas.cuts[cr.cut], cr.sign).inverse()
        pulled = back.apply_linear(v_out)
        angles.append((_angle(e, v_in), _angle(pulled, e)))
    tangential = [
        i
        for i, s in enumerate(geodesic.segments)
        if det2(s.dir, e) == 0 and det2(e, sub(s.start, pos)) == 0
    ]
    doubles = []
    for a, b in zip(hits, hits[1:]):
        between = geodesic.crossings[a + 1 : b]
        if all(c.cut in own for c in between):
            doubles.append((a, b))
    return GaussBonnetReport(pos, hits, angles, tangential, doubles)
