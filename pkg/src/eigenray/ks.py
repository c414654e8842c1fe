"""Truncated Laurent series over the Novikov field and their polygon valuations.

An element is a finite sum of monomials ``c T^a z^n`` with ``c`` and ``a``
rational and ``n`` a character in Z^2.  Coefficient exponents may be
negative, since monomial transformations with translations shift them.  On a
convex rational polygon ``P`` a monomial has valuation ``a + min_P n``, the
minimum being attained at a vertex.  Truncation at precision ``N`` drops
monomials whose valuation on the attached polygon is at least ``N``.

The wall-crossing map for wall data ``(e, f, m, sign)`` is
``z^v -> z^v (1 + T^f z^e)^(sign * m * det(e, v))``, fixing ``T``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from math import comb
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from .affine import IntegralAffineMap, det2, is_primitive, q, vec

__all__ = [
    "KSError",
    "RationalPolygon",
    "KSElement",
    "WallDatum",
    "ks_val",
    "ks_mul",
    "restrict",
    "monomial_transform",
    "transform_wall",
    "wall_cross",
    "cross_walls",
    "FIVE_CHART_WALLS",
    "FIVE_CHART_POLYGON",
    "route_comparison",
    "seed_transform",
    "glue_verify",
    "GlueReport",
    "DEFAULT_PRECISION",
]

DEFAULT_PRECISION = Fraction(20)
INF = float("inf")

Char = Tuple[int, int]
Key = Tuple[Char, Fraction]


class KSError(ValueError):
    """Bad polygon, mismatched precision or failed convergence condition."""


@dataclass(frozen=True)
class RationalPolygon:
    """Convex polygon with rational vertices in cyclic order."""

    vertices: Tuple[Tuple[Fraction, Fraction], ...]

    def __post_init__(self):
        verts = tuple(vec(*v) for v in self.vertices)
        if len(verts) < 3:
            raise KSError("a polygon needs at least three vertices")
        n = len(verts)
        signs = set()
        for i in range(n):
            a, b, c = verts[i], verts[(i + 1) % n], verts[(i + 2) % n]
            d = det2((b[0] - a[0], b[1] - a[1]), (c[0] - b[0], c[1] - b[1]))
            if d != 0:
                signs.add(d > 0)
        if not signs:
            raise KSError("degenerate polygon: all vertices are collinear")
        if len(signs) > 1:
            raise KSError("polygon is not convex")
        if len(set(verts)) != n:
            raise KSError("polygon has repeated vertices")
        # put in counterclockwise order
        if signs == {False}:
            verts = tuple(reversed(verts))
        object.__setattr__(self, "vertices", verts)

    @classmethod
    def box(cls, x0, x1, y0, y1) -> "RationalPolygon":
        return cls(((x0, y0), (x1, y0), (x1, y1), (x0, y1)))

    def min_pairing(self, n) -> Fraction:
        return min(n[0] * v[0] + n[1] * v[1] for v in self.vertices)

    def argmin_pairing(self, n) -> List[int]:
        vals = [n[0] * v[0] + n[1] * v[1] for v in self.vertices]
        m = min(vals)
        return [i for i, x in enumerate(vals) if x == m]

    def contains_point(self, p) -> bool:
        p = vec(*p)
        n = len(self.vertices)
        for i in range(n):
            a, b = self.vertices[i], self.vertices[(i + 1) % n]
            if det2((b[0] - a[0], b[1] - a[1]), (p[0] - a[0], p[1] - a[1])) < 0:
                return False
        return True

    def contains(self, other: "RationalPolygon") -> bool:
        return all(self.contains_point(v) for v in other.vertices)

    def image(self, amap: IntegralAffineMap) -> "RationalPolygon":
        return RationalPolygon(tuple(amap(v) for v in self.vertices))


class KSElement:
    """Finite sum of monomials ``c T^a z^n`` with an optional precision."""

    __slots__ = ("terms", "precision")

    def __init__(self, terms=None, precision=None):
        acc: Dict[Key, Fraction] = {}
        items = terms.items() if isinstance(terms, dict) else (terms or ())
        for key, c in items:
            (n, a) = key
            k = ((int(n[0]), int(n[1])), q(a))
            acc[k] = acc.get(k, Fraction(0)) + q(c)
        self.terms: Dict[Key, Fraction] = {k: c for k, c in acc.items() if c != 0}
        self.precision = None if precision is None else q(precision)

    @classmethod
    def monomial(cls, char=(0, 0), exp=0, coeff=1, precision=None) -> "KSElement":
        return cls({(tuple(char), exp): coeff}, precision)

    @classmethod
    def one(cls, precision=None) -> "KSElement":
        return cls.monomial(precision=precision)

    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other):
        if not isinstance(other, KSElement):
            return NotImplemented
        return self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __add__(self, other: "KSElement") -> "KSElement":
        acc = dict(self.terms)
        for k, c in other.terms.items():
            acc[k] = acc.get(k, Fraction(0)) + c
        return KSElement(acc, _min_prec(self.precision, other.precision))

    def __neg__(self):
        return KSElement({k: -c for k, c in self.terms.items()}, self.precision)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c) -> "KSElement":
        return KSElement({k: v * q(c) for k, v in self.terms.items()}, self.precision)

    def times(self, other: "KSElement") -> "KSElement":
        """Untruncated product."""
        acc: Dict[Key, Fraction] = {}
        for (n1, a1), c1 in self.terms.items():
            for (n2, a2), c2 in other.terms.items():
                k = ((n1[0] + n2[0], n1[1] + n2[1]), a1 + a2)
                acc[k] = acc.get(k, Fraction(0)) + c1 * c2
        return KSElement(acc, _min_prec(self.precision, other.precision))

    def truncated(self, polygon: RationalPolygon, precision=None) -> "KSElement":
        n_ = self.precision if precision is None else q(precision)
        if n_ is None:
            return self
        keep = {k: c for k, c in self.terms.items() if k[1] + polygon.min_pairing(k[0]) < n_}
        return KSElement(keep, n_)

    def characters(self) -> List[Char]:
        return sorted({n for n, _ in self.terms})

    def coefficient(self, char) -> Dict[Fraction, Fraction]:
        char = (int(char[0]), int(char[1]))
        return {a: c for (n, a), c in self.terms.items() if n == char}

    def __repr__(self):
        if not self.terms:
            return "0"
        parts = []
        for (n, a), c in sorted(self.terms.items()):
            parts.append(f"{c}*T^{a}*z^({n[0]},{n[1]})")
        return " + ".join(parts)

    def to_json(self) -> dict:
        chars: Dict[Char, list] = {}
        for (n, a), c in sorted(self.terms.items()):
            chars.setdefault(n, []).append([str(a), str(c)])
        return {
            "precision": None if self.precision is None else str(self.precision),
            "terms": [{"char": [n[0], n[1]], "coeff": coeff} for n, coeff in sorted(chars.items())],
        }

    @classmethod
    def from_json(cls, data) -> "KSElement":
        if isinstance(data, str):
            data = json.loads(data)
        try:
            terms = {}
            for t in data["terms"]:
                ch = tuple(t["char"])
                if len(ch) != 2 or not all(isinstance(x, int) and not isinstance(x, bool) for x in ch):
                    raise KSError("characters must be two integers")
                for a, c in t["coeff"]:
                    key = (ch, q(a))
                    terms[key] = terms.get(key, Fraction(0)) + q(c)
            prec = data.get("precision")
            return cls(terms, DEFAULT_PRECISION if prec is None else q(prec))
        except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
            if isinstance(exc, KSError):
                raise
            raise KSError(f"malformed KS element JSON: {exc}") from exc


def _min_prec(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return min(a, b)


# ---------------------------------------------------------------- valuation and ring structure


def ks_val(x: KSElement, polygon: RationalPolygon):
    """``min`` over monomials of ``a + min_P n``; ``+inf`` for zero."""
    if not isinstance(polygon, RationalPolygon):
        polygon = RationalPolygon(tuple(polygon))
    if not x.terms:
        return INF
    return min(a + polygon.min_pairing(n) for (n, a) in x.terms)


def ks_mul(x: KSElement, y: KSElement, polygon: RationalPolygon, precision=None) -> KSElement:
    prec = q(precision) if precision is not None else _min_prec(x.precision, y.precision)
    if prec is None:
        prec = DEFAULT_PRECISION
    return x.times(y).truncated(polygon, prec)


def restrict(x: KSElement, big: RationalPolygon, small: RationalPolygon) -> KSElement:
    if not big.contains(small):
        raise KSError("the smaller polygon is not contained in the larger one")
    prec = x.precision if x.precision is not None else DEFAULT_PRECISION
    return x.truncated(small, prec)


def monomial_transform(x: KSElement, amap: IntegralAffineMap) -> KSElement:
    """Pullback ``z^n -> T^{n(t)} z^{L^T n}`` along ``p -> L p + t``.

    Valuations satisfy ``val_P(pullback x) = val_{amap(P)}(x)``.
    """
    (a, b), (c, d) = amap.linear
    t = amap.translate
    out: Dict[Key, Fraction] = {}
    for (n, e), coeff in x.terms.items():
        m = (a * n[0] + c * n[1], b * n[0] + d * n[1])
        k = (m, e + n[0] * t[0] + n[1] * t[1])
        out[k] = out.get(k, Fraction(0)) + coeff
    return KSElement(out, x.precision)


# ---------------------------------------------------------------- walls


@dataclass(frozen=True)
class WallDatum:
    e: Char
    f: Fraction = Fraction(0)
    m: int = 1
    sign: int = 1

    def __post_init__(self):
        if not is_primitive(self.e):
            raise KSError(f"wall direction {tuple(self.e)} is not primitive")
        object.__setattr__(self, "e", (int(self.e[0]), int(self.e[1])))
        object.__setattr__(self, "f", q(self.f))
        if int(self.m) != self.m or self.m < 1:
            raise KSError("wall multiplicity must be a positive integer")
        if self.sign not in (1, -1):
            raise KSError("wall sign must be +1 or -1")

    def inverse(self) -> "WallDatum":
        return WallDatum(self.e, self.f, self.m, -self.sign)


def transform_wall(w: WallDatum, amap: IntegralAffineMap) -> WallDatum:
    """Wall data ``w'`` with ``pullback o cross(w) = cross(w') o pullback``."""
    (a, b), (c, d) = amap.linear
    e = (a * w.e[0] + c * w.e[1], b * w.e[0] + d * w.e[1])
    f = w.f + w.e[0] * amap.translate[0] + w.e[1] * amap.translate[1]
    return WallDatum(e, f, w.m, w.sign * amap.det)


def _binomial(k: int, j: int) -> int:
    """Generalized binomial coefficient for integer ``k`` (possibly negative)."""
    if k >= 0:
        return comb(k, j) if j <= k else 0
    # (-1)^j C(j - k - 1, j)
    return (-1) ** j * comb(j - k - 1, j)


def wall_cross(x: KSElement, w: WallDatum, polygon: RationalPolygon, precision=None) -> KSElement:
    prec = q(precision) if precision is not None else (x.precision if x.precision is not None else DEFAULT_PRECISION)
    step = w.f + polygon.min_pairing(w.e)
    if step <= 0:
        raise KSError(f"T^{w.f} z^{w.e} has valuation {step} <= 0 on the polygon; the series does not converge")
    out: Dict[Key, Fraction] = {}
    for (v, a), coeff in x.terms.items():
        k = w.sign * w.m * int(det2(w.e, v))
        base_val = a + polygon.min_pairing(v)
        j = 0
        while True:
            if k >= 0 and j > k:
                break
            # every monomial from here on has valuation at least base_val + j * step
            if base_val + j * step >= prec:
                break
            b = _binomial(k, j)
            if b:
                n = (v[0] + j * w.e[0], v[1] + j * w.e[1])
                e = a + j * w.f
                if e + polygon.min_pairing(n) < prec:
                    key = (n, e)
                    out[key] = out.get(key, Fraction(0)) + coeff * b
            j += 1
    return KSElement(out, prec)


def cross_walls(x: KSElement, walls: Sequence[WallDatum], polygon: RationalPolygon, precision=None) -> KSElement:
    """Apply the wall substitutions in order, the first wall being substituted first."""
    for w in walls:
        x = wall_cross(x, w, polygon, precision)
    return x


# The two walls met on the way between the charts of the five-charts example,
# and a polygon where both substitutions converge.
FIVE_CHART_WALLS = (WallDatum((1, 0)), WallDatum((0, 1)))
FIVE_CHART_POLYGON = RationalPolygon.box(1, 2, 1, 2)


def route_comparison(
    x: KSElement,
    walls: Sequence[WallDatum] = FIVE_CHART_WALLS,
    polygon: RationalPolygon = FIVE_CHART_POLYGON,
    precision=None,
) -> KSElement:
    """Cross ``walls`` in order, then undo them in the same order.

    This is the automorphism obtained by going around one way and coming
    back the other way.  It is the identity only when the walls commute.
    """
    x = cross_walls(x, walls, polygon, precision)
    return cross_walls(x, [w.inverse() for w in walls], polygon, precision)


def seed_transform(direction, flux) -> IntegralAffineMap:
    """Integral affine map taking the line ``{p : det(p, v) = f}`` with direction ``v`` to the x-axis."""
    vx, vy = int(direction[0]), int(direction[1])
    if not is_primitive((vx, vy)):
        raise KSError("seed direction must be primitive")
    # a vx + b vy = 1
    old_r, r, old_s, s, old_t, t = vx, vy, 1, 0, 0, 1
    while r != 0:
        quo = old_r // r
        old_r, r = r, old_r - quo * r
        old_s, s = s, old_s - quo * s
        old_t, t = t, old_t - quo * t
    if old_r < 0:
        old_s, old_t = -old_s, -old_t
    lin = ((old_s, old_t), (-vy, vx))
    return IntegralAffineMap(lin, (0, q(flux)))


# ---------------------------------------------------------------- gluing


@dataclass
class GlueReport:
    relation_image: KSElement
    x_invertible: bool
    u_invertible: bool
    transformed_images: List[KSElement]

    @property
    def ok(self) -> bool:
        return (
            self.relation_image.is_zero()
            and self.x_invertible
            and self.u_invertible
            and all(t.is_zero() for t in self.transformed_images)
        )

    def to_json(self) -> dict:
        return {
            "relation_image": self.relation_image.to_json(),
            "x_invertible": self.x_invertible,
            "u_invertible": self.u_invertible,
            "transformed_images": [t.to_json() for t in self.transformed_images],
            "ok": self.ok,
        }


def _is_unit_monomial(x: KSElement) -> bool:
    return len(x.terms) == 1


def _substitute(images: Dict[str, KSElement], poly: Iterable[Tuple[Dict[str, int], Fraction]]) -> KSElement:
    """Evaluate a Laurent polynomial in named variables at monomial-or-sum images.

    Negative powers are allowed only for variables whose image is a single monomial.
    """
    total = KSElement()
    for powers, c in poly:
        term = KSElement.one().scale(c)
        for var, k in powers.items():
            img = images[var]
            if k < 0:
                if not _is_unit_monomial(img):
                    raise KSError(f"{var} maps to a non-unit; cannot invert")
                ((n, a), coeff), = img.terms.items()
                img = KSElement({((-n[0], -n[1]), -a): 1 / coeff})
                k = -k
            for _ in range(k):
                term = term.times(img)
        total = total + term
    return total


def glue_verify(seeds: Sequence[Tuple[Sequence[int], object]] = (((0, 1), 1),)) -> GlueReport:
    """Check that ``x -> ξ, y -> ξ^{-1}(1 + η^{-1}), u -> η`` kills ``u(xy - 1) - 1``.

    ``ξ`` and ``η`` are the characters ``(1,0)`` and ``(0,1)``.  The relation
    is also pushed through the pullback of each seed transform, which is a
    ring automorphism of ``Λ[ξ^±, η^±]`` and so must keep it at zero.
    """
    xi = KSElement.monomial((1, 0))
    eta = KSElement.monomial((0, 1))
    eta_inv = KSElement.monomial((0, -1))
    xi_inv = KSElement.monomial((-1, 0))
    images = {
        "x": xi,
        "y": xi_inv.times(KSElement.one() + eta_inv),
        "u": eta,
    }
    # u (x y - 1) - 1 = u x y - u - 1
    relation = [({"u": 1, "x": 1, "y": 1}, Fraction(1)), ({"u": 1}, Fraction(-1)), ({}, Fraction(-1))]
    image = _substitute(images, relation)
    transformed = []
    for direction, flux in seeds:
        amap = seed_transform(direction, flux)
        moved = {k: monomial_transform(v, amap) for k, v in images.items()}
        transformed.append(_substitute(moved, relation))
    return GlueReport(image, _is_unit_monomial(images["x"]), _is_unit_monomial(images["u"]), transformed)
