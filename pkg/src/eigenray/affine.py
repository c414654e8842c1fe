"""Exact planar affine algebra over the rationals.

Vectors are plain ``(x, y)`` tuples of :class:`fractions.Fraction` (or ``int``
for integer directions).  Integral affine maps carry a 2x2 integer matrix with
determinant +-1 and a rational translation.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd
from typing import Tuple, Union

Number = Union[int, Fraction]
Vec2Q = Tuple[Fraction, Fraction]
Vec2Z = Tuple[int, int]
Matrix2 = Tuple[Tuple[int, int], Tuple[int, int]]

__all__ = [
    "AffineError",
    "Vec2Q",
    "Vec2Z",
    "q",
    "vec",
    "det2",
    "add",
    "sub",
    "scale",
    "is_primitive",
    "primitive_part",
    "IntegralAffineMap",
    "PLShear",
    "shear_apply",
    "linear_shear",
    "compose",
    "IDENTITY",
    "ROT90",
]


class AffineError(ValueError):
    """Raised on invalid affine data (non-primitive direction, bad matrix)."""


def q(value) -> Fraction:
    """Coerce ints, Fractions and ``"p/q"`` strings to a Fraction.

    Floats are refused so that exactness is never silently lost.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise AffineError("booleans are not coordinates")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    raise AffineError(f"expected an exact rational, got {type(value).__name__}")


def vec(x, y) -> Vec2Q:
    return (q(x), q(y))


def det2(u, v) -> Fraction:
    return Fraction(u[0]) * v[1] - Fraction(u[1]) * v[0]


def add(u, v) -> Vec2Q:
    return (Fraction(u[0]) + v[0], Fraction(u[1]) + v[1])


def sub(u, v) -> Vec2Q:
    return (Fraction(u[0]) - v[0], Fraction(u[1]) - v[1])


def scale(c, v) -> Vec2Q:
    return (Fraction(c) * v[0], Fraction(c) * v[1])


def is_primitive(e) -> bool:
    try:
        x, y = int(e[0]), int(e[1])
    except (TypeError, ValueError):
        return False
    if x != e[0] or y != e[1]:
        return False
    return (x, y) != (0, 0) and gcd(x, y) == 1


def primitive_part(v) -> Vec2Z:
    """Primitive integer vector positively proportional to a nonzero rational ``v``."""
    x, y = q(v[0]), q(v[1])
    if x == 0 and y == 0:
        raise AffineError("zero vector has no direction")
    den = x.denominator * y.denominator
    a, b = int(x * den), int(y * den)
    g = gcd(a, b)
    return (a // g, b // g)


def _check_primitive(e) -> Vec2Z:
    if not is_primitive(e):
        raise AffineError(f"direction {tuple(e)} is not a primitive integer vector")
    return (int(e[0]), int(e[1]))


def _matmul(a: Matrix2, b: Matrix2) -> Matrix2:
    return (
        (a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]),
        (a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]),
    )


def _matvec(a, v) -> Vec2Q:
    return (a[0][0] * Fraction(v[0]) + a[0][1] * v[1], a[1][0] * Fraction(v[0]) + a[1][1] * v[1])


@dataclass(frozen=True)
class IntegralAffineMap:
    """``p -> linear @ p + translate`` with ``linear`` in GL(2, Z)."""

    linear: Matrix2
    translate: Vec2Q = (Fraction(0), Fraction(0))

    def __post_init__(self):
        lin = tuple(tuple(int(c) for c in row) for row in self.linear)
        if any(c != orig for row, orow in zip(lin, self.linear) for c, orig in zip(row, orow)):
            raise AffineError("linear part must be integral")
        if len(lin) != 2 or any(len(r) != 2 for r in lin):
            raise AffineError("linear part must be 2x2")
        det = lin[0][0] * lin[1][1] - lin[0][1] * lin[1][0]
        if det not in (1, -1):
            raise AffineError(f"linear part has determinant {det}, expected +-1")
        object.__setattr__(self, "linear", lin)
        object.__setattr__(self, "translate", vec(*self.translate))

    def __call__(self, p) -> Vec2Q:
        return add(_matvec(self.linear, p), self.translate)

    def apply_linear(self, v) -> Vec2Q:
        return _matvec(self.linear, v)

    def apply_direction(self, e) -> Vec2Z:
        (a, b), (c, d) = self.linear
        return (a * e[0] + b * e[1], c * e[0] + d * e[1])

    @property
    def det(self) -> int:
        (a, b), (c, d) = self.linear
        return a * d - b * c

    @property
    def trace(self) -> int:
        return self.linear[0][0] + self.linear[1][1]

    def inverse(self) -> "IntegralAffineMap":
        (a, b), (c, d) = self.linear
        det = self.det
        inv = ((d * det, -b * det), (-c * det, a * det))
        t = _matvec(inv, self.translate)
        return IntegralAffineMap(inv, (-t[0], -t[1]))

    def is_identity(self) -> bool:
        return self.linear == ((1, 0), (0, 1)) and self.translate == (0, 0)

    @staticmethod
    def translation(t) -> "IntegralAffineMap":
        return IntegralAffineMap(((1, 0), (0, 1)), vec(*t))


IDENTITY = IntegralAffineMap(((1, 0), (0, 1)))
ROT90 = IntegralAffineMap(((0, -1), (1, 0)))


def compose(a: IntegralAffineMap, b: IntegralAffineMap) -> IntegralAffineMap:
    """Return ``a o b``, i.e. ``p -> a(b(p))``."""
    return IntegralAffineMap(_matmul(a.linear, b.linear), a(b.translate))


def linear_shear(e, k: int) -> IntegralAffineMap:
    """The linear shear ``v -> v + k det(e, v) e`` fixing the line spanned by ``e``."""
    ex, ey = _check_primitive(e)
    k = int(k)
    # v + k (ex vy - ey vx) e
    lin = ((1 - k * ex * ey, k * ex * ex), (-k * ey * ey, 1 + k * ex * ey))
    return IntegralAffineMap(lin)


@dataclass(frozen=True)
class PLShear:
    """Shear by ``m`` along ``e`` on the closed half-plane ``det(e, p - base) >= 0``."""

    base: Vec2Q
    e: Vec2Z
    m: int = 1

    def __post_init__(self):
        object.__setattr__(self, "base", vec(*self.base))
        object.__setattr__(self, "e", _check_primitive(self.e))
        if int(self.m) != self.m:
            raise AffineError("shear multiplicity must be an integer")
        object.__setattr__(self, "m", int(self.m))

    def side(self, p) -> Fraction:
        return det2(self.e, sub(p, self.base))

    def __call__(self, p) -> Vec2Q:
        return shear_apply(self, p)

    def inverse(self) -> "PLShear":
        return PLShear(self.base, self.e, -self.m)

    def as_affine(self) -> IntegralAffineMap:
        """The affine map this shear agrees with on its sheared side."""
        lin = linear_shear(self.e, self.m)
        t = sub(self.base, lin.apply_linear(self.base))
        return IntegralAffineMap(lin.linear, t)


def shear_apply(s: PLShear, p) -> Vec2Q:
    p = vec(*p)
    d = s.side(p)
    if d < 0:
        return p
    return add(p, scale(s.m * d, s.e))
