"""Eigenray diagrams: rays with rational base points, primitive directions and
weighted nodes, together with nodal slides, node removal and branch moves.

Nodes are addressed by their position.  Rays of a valid diagram are pairwise
disjoint, so a position names at most one node.
"""
from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, List, Optional, Sequence, Tuple

from .affine import (
    AffineError,
    IDENTITY,
    IntegralAffineMap,
    PLShear,
    Vec2Q,
    Vec2Z,
    add,
    det2,
    is_primitive,
    linear_shear,
    q,
    scale,
    sub,
    vec,
)

__all__ = [
    "DiagramError",
    "Node",
    "Ray",
    "EigenrayDiagram",
    "Violation",
    "ValidationReport",
    "INDETERMINATE",
    "validate",
    "total_multiplicity",
    "node_removal",
    "node_insertion",
    "nodal_slide",
    "is_mutable",
    "branch_move",
    "is_exact",
    "seed_data",
    "affine_equivalent",
    "normalize_weak",
    "five_charts",
    "rays_intersect",
    "line_meets_ray",
]

Element = Tuple[Vec2Q, Vec2Z]


class DiagramError(ValueError):
    """Raised when an operation's precondition fails."""


@dataclass(frozen=True)
class Node:
    position: Vec2Q
    multiplicity: int = 1

    def __post_init__(self):
        object.__setattr__(self, "position", vec(*self.position))
        if int(self.multiplicity) != self.multiplicity or self.multiplicity < 1:
            raise DiagramError(f"node multiplicity must be a positive integer, got {self.multiplicity}")
        object.__setattr__(self, "multiplicity", int(self.multiplicity))


@dataclass(frozen=True)
class Ray:
    """``{base + t dir : t >= 0}`` with the nodes it carries."""

    base: Vec2Q
    dir: Vec2Z
    nodes: Tuple[Node, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "base", vec(*self.base))
        if not is_primitive(self.dir):
            raise DiagramError(f"ray direction {tuple(self.dir)} is not primitive")
        object.__setattr__(self, "dir", (int(self.dir[0]), int(self.dir[1])))
        nodes = tuple(n if isinstance(n, Node) else Node(*n) for n in self.nodes)
        if not nodes:
            nodes = (Node(self.base, 1),)
        object.__setattr__(self, "nodes", nodes)

    def param(self, p) -> Optional[Fraction]:
        """Parameter ``t`` with ``p = base + t dir`` if ``p`` is on the line, else None."""
        w = sub(p, self.base)
        if det2(self.dir, w) != 0:
            return None
        return w[0] / self.dir[0] if self.dir[0] != 0 else w[1] / self.dir[1]

    def contains(self, p) -> bool:
        t = self.param(p)
        return t is not None and t >= 0

    def at(self, t) -> Vec2Q:
        return add(self.base, scale(t, self.dir))

    @property
    def total_multiplicity(self) -> int:
        return sum(n.multiplicity for n in self.nodes)

    def node_at(self, p) -> Optional[Node]:
        p = vec(*p)
        for n in self.nodes:
            if n.position == p:
                return n
        return None

    def sorted_nodes(self) -> Tuple[Node, ...]:
        return tuple(sorted(self.nodes, key=lambda n: self.param(n.position)))


def _ray_from_nodes(direction: Vec2Z, nodes: Iterable[Node]) -> Ray:
    merged: dict = {}
    for n in nodes:
        merged[n.position] = merged.get(n.position, 0) + n.multiplicity
    probe = Ray(next(iter(merged)), direction)
    order = sorted(merged, key=probe.param)
    return Ray(order[0], direction, tuple(Node(p, merged[p]) for p in order))


@dataclass(frozen=True, eq=False)
class EigenrayDiagram:
    rays: Tuple[Ray, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "rays", tuple(self.rays))

    # multiset view: one entry (node position, direction) per copy of l^n
    def elements(self) -> Counter:
        c: Counter = Counter()
        for r in self.rays:
            for n in r.nodes:
                c[(n.position, r.dir)] += n.multiplicity
        return c

    def canonical(self) -> Tuple[Ray, ...]:
        return tuple(
            sorted((Ray(r.base, r.dir, r.sorted_nodes()) for r in self.rays), key=lambda r: (r.dir, r.base))
        )

    def __eq__(self, other):
        if not isinstance(other, EigenrayDiagram):
            return NotImplemented
        return self.canonical() == other.canonical()

    def __hash__(self):
        return hash(self.canonical())

    def __len__(self):
        return len(self.rays)

    @property
    def nodes(self) -> List[Node]:
        return [n for r in self.rays for n in r.nodes]

    def locate(self, position) -> Tuple[int, Node]:
        p = vec(*position)
        for i, r in enumerate(self.rays):
            n = r.node_at(p)
            if n is not None:
                return i, n
        raise DiagramError(f"no node at {_fmt(p)}")

    def ray_index(self, ray) -> int:
        if isinstance(ray, int):
            if not 0 <= ray < len(self.rays):
                raise DiagramError(f"ray index {ray} out of range")
            return ray
        for i, r in enumerate(self.rays):
            if r.base == vec(*ray.base) and r.dir == tuple(ray.dir):
                return i
        raise DiagramError("ray not in diagram")

    def replace(self, i: int, new: Optional[Ray]) -> "EigenrayDiagram":
        rays = list(self.rays)
        if new is None:
            del rays[i]
        else:
            rays[i] = new
        return EigenrayDiagram(tuple(rays))

    def transformed(self, amap: IntegralAffineMap) -> "EigenrayDiagram":
        out = []
        for r in self.rays:
            d = amap.apply_direction(r.dir)
            out.append(Ray(amap(r.base), d, tuple(Node(amap(n.position), n.multiplicity) for n in r.nodes)))
        return EigenrayDiagram(tuple(out))

    # serialization
    def to_json(self) -> dict:
        rays = []
        for r in self.canonical():
            rays.append(
                {
                    "base": [str(r.base[0]), str(r.base[1])],
                    "dir": [r.dir[0], r.dir[1]],
                    "nodes": [{"t": str(r.param(n.position)), "mult": n.multiplicity} for n in r.nodes],
                }
            )
        return {"rays": rays}

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2)

    @classmethod
    def from_json(cls, data) -> "EigenrayDiagram":
        if isinstance(data, str):
            data = json.loads(data)
        try:
            raw = data["rays"]
            rays = []
            for entry in raw:
                base = vec(*entry["base"])
                direction = tuple(entry["dir"])
                if not all(isinstance(c, int) and not isinstance(c, bool) for c in direction) or len(direction) != 2:
                    raise DiagramError("ray direction must be two integers")
                if not is_primitive(direction):
                    raise DiagramError(f"ray direction {direction} is not primitive")
                nodes = []
                for nd in entry.get("nodes", []):
                    t = q(nd["t"])
                    if t < 0:
                        raise DiagramError("node parameter t must be nonnegative")
                    nodes.append(Node(add(base, scale(t, direction)), nd.get("mult", 1)))
                rays.append(Ray(base, direction, tuple(nodes)))
        except (KeyError, TypeError, ZeroDivisionError, AffineError) as exc:
            raise DiagramError(f"malformed diagram JSON: {exc}") from exc
        except ValueError as exc:
            if isinstance(exc, DiagramError):
                raise
            raise DiagramError(f"malformed diagram JSON: {exc}") from exc
        return cls(tuple(rays))


def _fmt(p) -> str:
    return "(" + ", ".join(str(c) for c in p) + ")"


# ---------------------------------------------------------------- geometry


def rays_intersect(b1, d1, b2, d2) -> bool:
    """Whether the closed rays ``b1 + s d1`` and ``b2 + t d2`` (s, t >= 0) meet."""
    cross = det2(d1, d2)
    w = sub(b2, b1)
    if cross != 0:
        s = det2(w, d2) / cross
        t = det2(w, d1) / cross
        return s >= 0 and t >= 0
    if det2(d1, w) != 0:
        return False
    # collinear
    if d1[0] * d2[0] + d1[1] * d2[1] > 0:
        return True
    return w[0] * d1[0] + w[1] * d1[1] >= 0


def line_meets_ray(point, direction, base, rdir) -> bool:
    """Whether the full line through ``point`` along ``direction`` meets the ray."""
    cross = det2(direction, rdir)
    side = det2(direction, sub(base, point))
    if cross == 0:
        return side == 0
    t = -side / cross
    return t >= 0


# ---------------------------------------------------------------- validation


@dataclass(frozen=True)
class Violation:
    kind: str
    detail: str
    items: tuple = ()


@dataclass
class ValidationReport:
    violations: List[Violation] = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.valid

    def to_json(self) -> dict:
        return {
            "valid": self.valid,
            "violations": [{"kind": v.kind, "detail": v.detail, "items": list(v.items)} for v in self.violations],
        }


def validate(d: EigenrayDiagram) -> ValidationReport:
    report = ValidationReport()
    for i, r in enumerate(d.rays):
        seen = set()
        for n in r.nodes:
            if n.position in seen:
                report.violations.append(Violation("duplicate-node", f"ray {i} lists node {_fmt(n.position)} twice", (i,)))
            seen.add(n.position)
            if not r.contains(n.position):
                report.violations.append(
                    Violation("node-off-ray", f"node {_fmt(n.position)} is not on ray {i}", (i,))
                )
        if r.base not in seen:
            report.violations.append(Violation("base-not-node", f"base {_fmt(r.base)} of ray {i} is not a node", (i,)))
    for i in range(len(d.rays)):
        for j in range(i + 1, len(d.rays)):
            a, b = d.rays[i], d.rays[j]
            if rays_intersect(a.base, a.dir, b.base, b.dir):
                collinear = det2(a.dir, b.dir) == 0
                kind = "overlap" if collinear else "crossing"
                report.violations.append(Violation(kind, f"rays {i} and {j} intersect", (i, j)))
    return report


def _require_valid(d: EigenrayDiagram, what: str) -> EigenrayDiagram:
    rep = validate(d)
    if not rep.valid:
        v = rep.violations[0]
        raise DiagramError(f"{what} produces an invalid diagram: {v.detail}")
    return d


# ---------------------------------------------------------------- operations


def total_multiplicity(d: EigenrayDiagram, ray) -> int:
    return d.rays[d.ray_index(ray)].total_multiplicity


def node_removal(d: EigenrayDiagram, node) -> EigenrayDiagram:
    """Remove one copy of ``l^n`` from the multiset."""
    pos = node.position if isinstance(node, Node) else vec(*node)
    i, n = d.locate(pos)
    r = d.rays[i]
    if n.multiplicity > 1:
        nodes = tuple(Node(x.position, x.multiplicity - (x.position == pos)) for x in r.nodes)
        return d.replace(i, Ray(r.base, r.dir, nodes))
    if r.total_multiplicity == 1:
        return d.replace(i, None)
    rest = [x for x in r.nodes if x.position != pos]
    return d.replace(i, _ray_from_nodes(r.dir, rest))


def node_insertion(d: EigenrayDiagram, position, direction) -> EigenrayDiagram:
    """Add one copy of the sub-ray from ``position`` along ``direction``.

    Inverse of :func:`node_removal`.  The copy joins an existing ray when it
    is nested with it, otherwise it becomes a new ray.
    """
    pos = vec(*position)
    direction = (int(direction[0]), int(direction[1]))
    for i, r in enumerate(d.rays):
        if r.dir == direction and r.param(pos) is not None:
            return d.replace(i, _ray_from_nodes(direction, list(r.nodes) + [Node(pos, 1)]))
    return EigenrayDiagram(d.rays + (Ray(pos, direction, (Node(pos, 1),)),))


def nodal_slide(d: EigenrayDiagram, node, new_position) -> EigenrayDiagram:
    pos = node.position if isinstance(node, Node) else vec(*node)
    target = vec(*new_position)
    i, n = d.locate(pos)
    r = d.rays[i]
    if r.param(target) is None:
        raise DiagramError(f"{_fmt(target)} is not on the line of the ray through {_fmt(pos)}")
    if target == pos:
        return d
    rest = [x for x in r.nodes if x.position != pos]
    new_ray = _ray_from_nodes(r.dir, rest + [Node(target, n.multiplicity)])
    return _require_valid(d.replace(i, new_ray), "nodal slide")


def is_mutable(d: EigenrayDiagram, node) -> bool:
    pos = node.position if isinstance(node, Node) else vec(*node)
    i, _ = d.locate(pos)
    r = d.rays[i]
    if len(r.nodes) != 1:
        return False
    for j, other in enumerate(d.rays):
        if j != i and line_meets_ray(pos, r.dir, other.base, other.dir):
            return False
    return True


def branch_move(d: EigenrayDiagram, node) -> EigenrayDiagram:
    """Flip the ray at a mutable node and shear everything on its positive side."""
    pos = node.position if isinstance(node, Node) else vec(*node)
    if not is_mutable(d, pos):
        raise DiagramError(f"node {_fmt(pos)} is not mutable")
    i, n = d.locate(pos)
    r = d.rays[i]
    s = PLShear(pos, r.dir, n.multiplicity)
    lin = linear_shear(r.dir, n.multiplicity)
    out = []
    for j, other in enumerate(d.rays):
        if j == i:
            out.append(Ray(pos, (-r.dir[0], -r.dir[1]), (Node(pos, n.multiplicity),)))
            continue
        # the line misses the ray, so the whole ray sits on one side
        if s.side(other.base) > 0:
            new_dir = lin.apply_direction(other.dir)
        else:
            new_dir = other.dir
        nodes = tuple(Node(s(x.position), x.multiplicity) for x in other.nodes)
        out.append(Ray(s(other.base), new_dir, nodes))
    return EigenrayDiagram(tuple(out))


def is_exact(d: EigenrayDiagram) -> Optional[Vec2Q]:
    """A point lying on every line spanned by a ray, or None."""
    if not d.rays:
        return vec(0, 0)
    first = d.rays[0]
    point = None
    for r in d.rays[1:]:
        cross = det2(first.dir, r.dir)
        if cross != 0:
            t = det2(sub(r.base, first.base), r.dir) / cross
            point = first.at(t)
            break
    if point is None:
        point = first.base
    for r in d.rays:
        if det2(r.dir, sub(point, r.base)) != 0:
            return None
    return point


def seed_data(d: EigenrayDiagram) -> List[Tuple[Vec2Z, Fraction]]:
    out = []
    for r in d.rays:
        for n in r.sorted_nodes():
            flux = det2(n.position, r.dir)
            out.extend([(r.dir, flux)] * n.multiplicity)
    return out


# ---------------------------------------------------------------- equivalence


class _Indeterminate:
    def __repr__(self):
        return "INDETERMINATE"

    def __bool__(self):
        return False


INDETERMINATE = _Indeterminate()


def _solve_linear(u, w, u2, w2) -> Optional[Tuple[Tuple[int, int], Tuple[int, int]]]:
    """Integral matrix L with L u = u2 and L w = w2, or None."""
    det = det2(u, w)
    if det == 0:
        return None
    # L = [u2 w2] [u w]^-1
    inv = ((w[1] / det, -w[0] / det), (-u[1] / det, u[0] / det))
    m = (
        (u2[0] * inv[0][0] + w2[0] * inv[1][0], u2[0] * inv[0][1] + w2[0] * inv[1][1]),
        (u2[1] * inv[0][0] + w2[1] * inv[1][0], u2[1] * inv[0][1] + w2[1] * inv[1][1]),
    )
    if any(Fraction(c).denominator != 1 for row in m for c in row):
        return None
    lin = tuple(tuple(int(c) for c in row) for row in m)
    if lin[0][0] * lin[1][1] - lin[0][1] * lin[1][0] not in (1, -1):
        return None
    return lin


def _image_elements(elems: Counter, amap: IntegralAffineMap) -> Counter:
    out: Counter = Counter()
    for (p, e), k in elems.items():
        out[(amap(p), amap.apply_direction(e))] += k
    return out


def affine_equivalent(d1: EigenrayDiagram, d2: EigenrayDiagram, max_candidates: int = 4096):
    """An integral affine map carrying ``d1``'s multiset onto ``d2``'s.

    Returns the map, ``None`` when no map exists, or :data:`INDETERMINATE`
    when more than ``max_candidates`` anchor pairings would be needed.
    """
    e1, e2 = d1.elements(), d2.elements()
    if sorted(e1.values()) != sorted(e2.values()):
        return None
    if not e1:
        return IDENTITY
    keys1, keys2 = list(e1), list(e2)
    a = keys1[0]
    b = next((k for k in keys1 if det2(a[1], k[1]) != 0), None)
    tries = 0
    for a2 in keys2:
        if e2[a2] != e1[a]:
            continue
        if b is not None:
            pairs = [(b[1], b2[1]) for b2 in keys2 if e2[b2] == e1[b]]
        else:
            off = next((k for k in keys1 if det2(a[1], sub(k[0], a[0])) != 0), None)
            if off is None:
                # everything on one line: any matrix taking one direction to the other will do
                pairs = [(_complement(a[1]), _complement(a2[1]))]
            else:
                pairs = [(sub(off[0], a[0]), sub(b2[0], a2[0])) for b2 in keys2 if e2[b2] == e1[off]]
        for w, w2 in pairs:
            tries += 1
            if tries > max_candidates:
                return INDETERMINATE
            lin = _solve_linear(a[1], w, a2[1], w2)
            if lin is None:
                continue
            probe = IntegralAffineMap(lin)
            amap = IntegralAffineMap(lin, sub(a2[0], probe(a[0])))
            if _image_elements(e1, amap) == e2:
                return amap
    return None


def _complement(e) -> Vec2Z:
    """An integer vector completing primitive ``e`` to a basis of Z^2 with det 1."""
    x, y = int(e[0]), int(e[1])
    # extended Euclid: a x + b y = 1, then det(e, (-b, a)) = 1
    old_r, r, old_s, s, old_t, t = x, y, 1, 0, 0, 1
    while r != 0:
        quo = old_r // r
        old_r, r = r, old_r - quo * r
        old_s, s = s, old_s - quo * s
        old_t, t = t, old_t - quo * t
    if old_r < 0:
        old_s, old_t = -old_s, -old_t
    return (-old_t, old_s)


# ---------------------------------------------------------------- utilities


def normalize_weak(elements: Sequence[Tuple[object, object, int]]) -> EigenrayDiagram:
    """Turn a weak multiset (opposite collinear sub-rays may overlap) into a diagram.

    Each offending sub-ray is replaced by its opposite, with the rest of the
    configuration sheared as in a branch move about that node.
    """
    elems = [(vec(*p), (int(e[0]), int(e[1])), int(m)) for p, e, m in elements]
    for _ in range(4 * len(elems) + 4):
        bad = None
        for i, (p, e, m) in enumerate(elems):
            for j, (p2, e2, _) in enumerate(elems):
                if j != i and (e2[0], e2[1]) == (-e[0], -e[1]) and rays_intersect(p, e, p2, e2):
                    bad = i
                    break
            if bad is not None:
                break
        if bad is None:
            return _group(elems)
        p, e, m = elems[bad]
        s = PLShear(p, e, m)
        lin = linear_shear(e, m)
        new = []
        for k, (p2, e2, m2) in enumerate(elems):
            if k == bad:
                new.append((p, (-e[0], -e[1]), m))
            elif s.side(p2) > 0 and det2(e, e2) != 0:
                new.append((s(p2), lin.apply_direction(e2), m2))
            else:
                new.append((s(p2), e2, m2))
        elems = new
    raise DiagramError("weak diagram did not normalize")


def _group(elems) -> EigenrayDiagram:
    d = EigenrayDiagram()
    for p, e, m in elems:
        for _ in range(m):
            d = node_insertion(d, p, e)
    return _require_valid(d, "normalization")


def five_charts() -> EigenrayDiagram:
    """Nodes of multiplicity one at (1,0) and (0,1) with rays along +x and +y."""
    return EigenrayDiagram((Ray((1, 0), (1, 0)), Ray((0, 1), (0, 1))))
