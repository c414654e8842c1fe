"""Linear algebra over the Novikov ring with rational exponents and coefficients.

Elements are finite sums ``sum c_i T^{a_i}`` with ``a_i >= 0`` rational.  Over
these coefficients the ring is a valuation ring: ``x`` divides ``y`` iff
``val(x) <= val(y)``, so every finitely presented module is a direct sum of
cyclic modules ``Λ/T^a`` and free summands.  Two kinds of Smith reduction
are provided:

* over ``Λ`` itself, fraction-free (rows are scaled by units instead of being
  divided), which gives exact elementary divisor exponents;
* over the truncated ring ``Λ/T^λ``, where units have exact inverses, which
  gives full change-of-basis data and is used for truncated homology and the
  maps between truncations.

Modules are handled through presentations and compared by their invariants
(torsion exponents and free rank).
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

__all__ = [
    "NovikovError",
    "NovikovElement",
    "T",
    "ONE",
    "ZERO",
    "SmithResult",
    "smith_form",
    "FPModule",
    "max_torsion",
    "tor1",
    "tensor_truncation",
    "NovikovComplex",
    "homology",
    "truncated_homology",
    "TruncatedHomology",
    "truncation_map",
    "UCTReport",
    "uct_verify",
    "InverseSystem",
    "mittag_leffler",
    "OneRay",
    "telescope",
    "RelRedReport",
    "rel_vs_red",
    "matmul",
    "identity_matrix",
    "zero_matrix",
    "matrix_from_json",
    "matrix_to_json",
]

INF = float("inf")
NEG_INF = float("-inf")


class NovikovError(ValueError):
    """Invalid input to a Novikov-ring computation."""


def _frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, str)) and not isinstance(x, bool):
        return Fraction(x)
    raise NovikovError(f"expected an exact rational, got {x!r}")


class NovikovElement:
    """Finite sum of terms ``c T^a``, stored sorted by exponent."""

    __slots__ = ("terms",)

    def __init__(self, terms: Iterable = ()):
        acc: Dict[Fraction, Fraction] = {}
        if isinstance(terms, dict):
            terms = terms.items()
        for e, c in terms:
            e, c = _frac(e), _frac(c)
            if e < 0:
                raise NovikovError(f"negative exponent {e}")
            acc[e] = acc.get(e, Fraction(0)) + c
        self.terms: Tuple[Tuple[Fraction, Fraction], ...] = tuple(
            sorted((e, c) for e, c in acc.items() if c != 0)
        )

    @classmethod
    def _raw(cls, items) -> "NovikovElement":
        obj = cls.__new__(cls)
        obj.terms = tuple(sorted((e, c) for e, c in items if c != 0))
        return obj

    @classmethod
    def monomial(cls, exp, coeff=1) -> "NovikovElement":
        return cls([(exp, coeff)])

    @classmethod
    def const(cls, c) -> "NovikovElement":
        return cls([(0, c)])

    # ---- basic queries
    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self):
        return bool(self.terms)

    @property
    def val(self):
        return self.terms[0][0] if self.terms else INF

    @property
    def lead(self) -> Fraction:
        return self.terms[0][1] if self.terms else Fraction(0)

    def is_unit(self) -> bool:
        return bool(self.terms) and self.terms[0][0] == 0

    # ---- arithmetic
    def __add__(self, other):
        other = _coerce(other)
        acc = dict(self.terms)
        for e, c in other.terms:
            acc[e] = acc.get(e, Fraction(0)) + c
        return NovikovElement._raw(acc.items())

    __radd__ = __add__

    def __neg__(self):
        return NovikovElement._raw((e, -c) for e, c in self.terms)

    def __sub__(self, other):
        return self + (-_coerce(other))

    def __rsub__(self, other):
        return _coerce(other) - self

    def __mul__(self, other):
        return self.mul(other)

    def mul(self, other, lam=None) -> "NovikovElement":
        """Product, dropping exponents ``>= lam`` without forming them."""
        other = _coerce(other)
        if not self.terms or not other.terms:
            return ZERO
        acc: Dict[Fraction, Fraction] = {}
        low = other.terms[0][0]
        for e1, c1 in self.terms:
            if lam is not None and e1 + low >= lam:
                break
            for e2, c2 in other.terms:
                k = e1 + e2
                if lam is not None and k >= lam:
                    break
                acc[k] = acc.get(k, Fraction(0)) + c1 * c2
        return NovikovElement._raw(acc.items())

    __rmul__ = __mul__

    def __eq__(self, other):
        try:
            other = _coerce(other)
        except NovikovError:
            return NotImplemented
        return self.terms == other.terms

    def __hash__(self):
        return hash(self.terms)

    def shift(self, a) -> "NovikovElement":
        """Multiply by ``T^a``; ``a`` may be negative when the result stays in the ring."""
        a = _frac(a)
        if self.terms and self.terms[0][0] + a < 0:
            raise NovikovError(f"T^{a} does not divide an element of valuation {self.val}")
        return NovikovElement._raw((e + a, c) for e, c in self.terms)

    def truncate(self, lam) -> "NovikovElement":
        if lam is None:
            return self
        return NovikovElement._raw((e, c) for e, c in self.terms if e < lam)

    def inverse_mod(self, lam) -> "NovikovElement":
        """Inverse of a unit modulo ``T^lam``."""
        if not self.is_unit():
            raise NovikovError("only elements with nonzero constant term are invertible")
        c0 = self.terms[0][1]
        w = (ONE - self * (1 / c0)).truncate(lam)  # u = c0 (1 - w)
        inv = ONE
        power = ONE
        while True:
            power = power.mul(w, lam)
            if power.is_zero():
                break
            inv = inv + power
        return inv.mul(NovikovElement.const(1 / c0), lam)

    def __repr__(self):
        if not self.terms:
            return "0"
        parts = []
        for e, c in self.terms:
            parts.append(f"{c}" if e == 0 else f"{c}*T^{e}")
        return " + ".join(parts)

    def to_json(self) -> list:
        return [[str(e), str(c)] for e, c in self.terms]

    @classmethod
    def from_json(cls, data) -> "NovikovElement":
        try:
            return cls([(e, c) for e, c in data])
        except (TypeError, ValueError, ZeroDivisionError) as exc:
            raise NovikovError(f"malformed Novikov element {data!r}: {exc}") from exc


def _coerce(x) -> NovikovElement:
    if isinstance(x, NovikovElement):
        return x
    if isinstance(x, (int, Fraction)) and not isinstance(x, bool):
        return NovikovElement._raw([(Fraction(0), Fraction(x))])
    raise NovikovError(f"cannot use {x!r} as a Novikov element")


ZERO = NovikovElement()
ONE = NovikovElement.const(1)


def T(a=1, c=1) -> NovikovElement:
    """The monomial ``c T^a``."""
    return NovikovElement.monomial(a, c)


# ---------------------------------------------------------------- matrices

Matrix = List[List[NovikovElement]]


def zero_matrix(rows: int, cols: int) -> Matrix:
    return [[ZERO] * cols for _ in range(rows)]


def identity_matrix(n: int) -> Matrix:
    return [[ONE if i == j else ZERO for j in range(n)] for i in range(n)]


def _shape(m: Matrix, cols: Optional[int] = None) -> Tuple[int, int]:
    if not m:
        return 0, (cols or 0)
    return len(m), len(m[0])


def matmul(a: Matrix, b: Matrix, inner: Optional[int] = None, lam=None) -> Matrix:
    """Product of ``a`` (r x k) and ``b`` (k x c), optionally truncated."""
    r = len(a)
    k = len(b) if b else (len(a[0]) if a else (inner or 0))
    c = len(b[0]) if b else 0
    out = []
    for i in range(r):
        row = []
        for j in range(c):
            acc = ZERO
            for t in range(k):
                x, y = a[i][t], b[t][j]
                if x.terms and y.terms:
                    acc = acc + x.mul(y, lam)
            row.append(acc)
        out.append(row)
    return out


def _transpose(m: Matrix, rows: int = 0, cols: int = 0) -> Matrix:
    if not m:
        return [[] for _ in range(cols)]
    return [list(col) for col in zip(*m)]


def _copy(m: Matrix) -> Matrix:
    return [list(r) for r in m]


def _as_element(x) -> NovikovElement:
    if isinstance(x, NovikovElement):
        return x
    if isinstance(x, (list, tuple)):
        return NovikovElement(x)
    return _coerce(x)


def as_matrix(rows) -> Matrix:
    return [[_as_element(x) for x in row] for row in rows]


def matrix_to_json(m: Matrix) -> list:
    return [[x.to_json() for x in row] for row in m]


def matrix_from_json(data) -> Matrix:
    if not isinstance(data, list):
        raise NovikovError("matrix must be a list of rows")
    m = [[NovikovElement.from_json(x) for x in row] for row in data]
    if m and any(len(r) != len(m[0]) for r in m):
        raise NovikovError("ragged matrix")
    return m


# ---------------------------------------------------------------- Smith form


@dataclass
class SmithResult:
    """``U m V = D`` with ``D`` diagonal.

    Over ``Λ`` the diagonal entries are ``T^a`` times units (rows are scaled
    by units rather than divided); over ``Λ/T^λ`` they are exactly ``T^a``.
    ``V_inv`` is only tracked in the truncated case.
    """

    exponents: List[Fraction]
    U: Matrix
    V: Matrix
    D: Matrix
    V_inv: Optional[Matrix] = None
    precision: Optional[Fraction] = None

    @property
    def rank(self) -> int:
        return len(self.exponents)


def smith_form(m, precision=None) -> SmithResult:
    """Smith reduction by minimal-valuation pivoting.

    ``precision=None`` works over ``Λ``; a positive rational works modulo
    ``T^precision``, where entries of valuation at least the precision vanish.
    """
    lam = None if precision is None else _frac(precision)
    if lam is not None and lam <= 0:
        raise NovikovError("precision must be positive")
    A = [[_as_element(x).truncate(lam) for x in row] for row in m]
    rows, cols = _shape(A)
    U = identity_matrix(rows)
    V = identity_matrix(cols)
    Vinv = identity_matrix(cols) if lam is not None else None
    exps: List[Fraction] = []
    for k in range(min(rows, cols)):
        best = None
        for i in range(k, rows):
            for j in range(k, cols):
                x = A[i][j]
                if x.terms and (best is None or x.val < best[0]):
                    best = (x.val, i, j)
                    if x.val == 0:
                        break
            if best is not None and best[0] == 0:
                break
        if best is None:
            break
        a, pi, pj = best
        if pi != k:
            A[k], A[pi] = A[pi], A[k]
            U[k], U[pi] = U[pi], U[k]
        if pj != k:
            for row in A:
                row[k], row[pj] = row[pj], row[k]
            for row in V:
                row[k], row[pj] = row[pj], row[k]
            if Vinv is not None:
                Vinv[k], Vinv[pj] = Vinv[pj], Vinv[k]
        p = A[k][k]
        unit = p.shift(-a)
        if lam is not None:
            # normalize the pivot to exactly T^a
            uinv = unit.inverse_mod(lam)
            A[k] = [x.mul(uinv, lam) for x in A[k]]
            U[k] = [x.mul(uinv, lam) for x in U[k]]
            unit = ONE

        def combo(x, y, z):
            # unit * x - y * z, truncated
            first = x if unit is ONE else unit.mul(x, lam)
            return first - y.mul(z, lam) if z.terms else first

        # clear column k below the pivot
        for i in range(k + 1, rows):
            x = A[i][k]
            if not x.terms:
                continue
            y = x.shift(-a)
            A[i] = [combo(A[i][j], y, A[k][j]) for j in range(cols)]
            U[i] = [combo(U[i][j], y, U[k][j]) for j in range(rows)]
        # clear row k right of the pivot
        for j in range(k + 1, cols):
            x = A[k][j]
            if not x.terms:
                continue
            y = x.shift(-a)
            for i in range(rows):
                A[i][j] = combo(A[i][j], y, A[i][k])
            for i in range(cols):
                V[i][j] = combo(V[i][j], y, V[i][k])
            if Vinv is not None:
                # column op c_j <- c_j - y c_k has inverse row op r_k <- r_k + y r_j
                Vinv[k] = [Vinv[k][t] + y.mul(Vinv[j][t], lam) for t in range(cols)]
        exps.append(a)
    return SmithResult(exps, U, V, A, Vinv, lam)


# ---------------------------------------------------------------- modules


@dataclass
class FPModule:
    """``Λ^generators / (row span of relations)``."""

    relations: Matrix
    generators: int

    def __post_init__(self):
        self.relations = as_matrix(self.relations)
        if any(len(r) != self.generators for r in self.relations):
            raise NovikovError("relation rows must have one entry per generator")
        self._inv = None

    @classmethod
    def free(cls, rank: int) -> "FPModule":
        return cls([], rank)

    @classmethod
    def cyclic(cls, a) -> "FPModule":
        """``Λ/T^a``."""
        return cls([[T(a)]], 1)

    @classmethod
    def from_invariants(cls, torsion: Sequence, free_rank: int = 0) -> "FPModule":
        torsion = [_frac(a) for a in torsion if _frac(a) > 0]
        n = len(torsion) + free_rank
        rels = []
        for i, a in enumerate(torsion):
            row = [ZERO] * n
            row[i] = T(a)
            rels.append(row)
        return cls(rels, n)

    def invariants(self) -> Tuple[Tuple[Fraction, ...], int]:
        """Sorted positive torsion exponents and the free rank."""
        if self._inv is None:
            bound = self._annihilator_bound()
            if not self.relations:
                res = SmithResult([], [], [], [])
            elif bound is not None:
                # killed by T^bound, so every exponent is at most bound and the
                # reduction modulo a higher power is exact and much cheaper
                res = smith_form(self.relations, bound + 1)
            else:
                res = smith_form(self.relations)
            tors = tuple(sorted(a for a in res.exponents if a > 0))
            self._inv = (tors, self.generators - res.rank)
        return self._inv

    def _annihilator_bound(self) -> Optional[Fraction]:
        """``μ`` with ``T^μ`` killing the module, read off single-entry relation rows."""
        best: Dict[int, Fraction] = {}
        for row in self.relations:
            nz = [j for j, x in enumerate(row) if x.terms]
            if len(nz) == 1:
                j = nz[0]
                v = row[j].val
                best[j] = min(best.get(j, v), v)
        if len(best) < self.generators or not best:
            return None
        return max(best.values())

    @property
    def torsion(self) -> Tuple[Fraction, ...]:
        return self.invariants()[0]

    @property
    def free_rank(self) -> int:
        return self.invariants()[1]

    def is_zero(self) -> bool:
        return self.invariants() == ((), 0)

    def length(self) -> Fraction:
        """Sum of torsion exponents (finite only for torsion modules)."""
        return sum(self.torsion, Fraction(0))

    def isomorphic(self, other: "FPModule") -> bool:
        return self.invariants() == other.invariants()

    def direct_sum(self, other: "FPModule") -> "FPModule":
        n = self.generators + other.generators
        rels = [list(r) + [ZERO] * other.generators for r in self.relations]
        rels += [[ZERO] * self.generators + list(r) for r in other.relations]
        return FPModule(rels, n)

    def describe(self) -> str:
        tors, free = self.invariants()
        parts = [f"Λ/T^{a}" for a in tors] + (["Λ^" + str(free)] if free > 1 else ["Λ"] * free)
        return " ⊕ ".join(parts) if parts else "0"

    def to_json(self) -> dict:
        tors, free = self.invariants()
        return {"torsion": [str(a) for a in tors], "free_rank": free, "description": self.describe()}


def max_torsion(v: FPModule):
    """Largest torsion exponent, ``-inf`` for a torsion-free module.

    Finitely presented modules never have unbounded torsion, so ``+inf`` does
    not occur here.
    """
    tors = v.torsion
    return max(tors) if tors else NEG_INF


def tor1(v: FPModule, lam) -> FPModule:
    """``Tor^1(V, Λ/T^λ)``, the kernel of multiplication by ``T^λ`` on ``V``."""
    lam = _frac(lam)
    if lam <= 0:
        raise NovikovError("λ must be positive")
    return FPModule.from_invariants([min(a, lam) for a in v.torsion])


def tensor_truncation(v: FPModule, lam) -> FPModule:
    """``V ⊗ Λ/T^λ``."""
    lam = _frac(lam)
    if lam <= 0:
        raise NovikovError("λ must be positive")
    tors, free = v.invariants()
    return FPModule.from_invariants([min(a, lam) for a in tors] + [lam] * free)


# ---------------------------------------------------------------- complexes


@dataclass
class NovikovComplex:
    """Cochain complex of free modules.

    ``ranks[k]`` is the rank in degree ``start + k`` and ``differentials[k]``
    maps degree ``start + k`` to ``start + k + 1`` (a ``ranks[k+1] x ranks[k]``
    matrix acting on column vectors).
    """

    ranks: List[int]
    differentials: List[Matrix] = field(default_factory=list)
    start: int = 0
    check: bool = True

    def __post_init__(self):
        self.ranks = [int(r) for r in self.ranks]
        n = len(self.ranks)
        diffs = [as_matrix(m) for m in self.differentials]
        while len(diffs) < max(n - 1, 0):
            k = len(diffs)
            diffs.append(zero_matrix(self.ranks[k + 1], self.ranks[k]))
        if len(diffs) != max(n - 1, 0):
            raise NovikovError("expected one differential between consecutive degrees")
        for k, m in enumerate(diffs):
            if len(m) != self.ranks[k + 1] or any(len(r) != self.ranks[k] for r in m):
                if not (self.ranks[k + 1] == 0 and m == []):
                    raise NovikovError(f"differential {k} has the wrong shape")
        self.differentials = diffs
        if self.check:
            for k in range(len(diffs) - 1):
                prod = matmul(diffs[k + 1], diffs[k], inner=self.ranks[k + 1])
                if any(x.terms for row in prod for x in row):
                    raise NovikovError(f"d∘d ≠ 0 at degree {self.start + k}")

    @property
    def degrees(self) -> range:
        return range(self.start, self.start + len(self.ranks))

    def rank(self, degree: int) -> int:
        k = degree - self.start
        return self.ranks[k] if 0 <= k < len(self.ranks) else 0

    def diff(self, degree: int) -> Matrix:
        """Differential out of ``degree`` (possibly an empty matrix)."""
        k = degree - self.start
        if 0 <= k < len(self.differentials):
            return self.differentials[k]
        return zero_matrix(self.rank(degree + 1), self.rank(degree))

    def to_json(self) -> dict:
        return {
            "start": self.start,
            "ranks": self.ranks,
            "differentials": [matrix_to_json(m) for m in self.differentials],
        }

    @classmethod
    def from_json(cls, data) -> "NovikovComplex":
        if isinstance(data, str):
            data = json.loads(data)
        try:
            return cls(
                list(data["ranks"]),
                [matrix_from_json(m) for m in data.get("differentials", [])],
                int(data.get("start", 0)),
            )
        except (KeyError, TypeError) as exc:
            raise NovikovError(f"malformed complex JSON: {exc}") from exc


def _smith_exponents(m: Matrix):
    if not m or not m[0]:
        return []
    return smith_form(m).exponents


def homology(c: NovikovComplex, degree: int) -> FPModule:
    """``H^degree(C)`` over ``Λ``.

    Kernels of maps between free modules over a valuation ring are direct
    summands, so the homology is free of rank ``r - rank d_out - rank d_in``
    plus one cyclic summand per elementary divisor of the incoming map.
    """
    incoming = _smith_exponents(c.diff(degree - 1))
    outgoing = _smith_exponents(c.diff(degree))
    free = c.rank(degree) - len(incoming) - len(outgoing)
    return FPModule.from_invariants(incoming, free)


@dataclass
class TruncatedHomology:
    """``H^k(C ⊗ Λ/T^λ)`` with the data needed to map cycles into it.

    A cycle ``x`` has coordinates ``y = V^{-1} x``; coordinate ``j`` of the
    presentation is ``y_j / T^{λ - b_j}`` for pivot columns of the outgoing
    differential and ``y_j`` for the rest.
    """

    module: FPModule
    lam: Fraction
    V: Matrix
    V_inv: Matrix
    shifts: List[Optional[Fraction]]  # per column: λ - b_j, 0 for free, None if dropped
    gens: List[int]

    def coordinates(self, x: Sequence[NovikovElement]) -> List[NovikovElement]:
        lam = self.lam
        xs = [_as_element(v).truncate(lam) for v in x]
        n = len(xs)
        y = []
        for i in range(n):
            acc = ZERO
            for t in range(n):
                if self.V_inv[i][t].terms and xs[t].terms:
                    acc = acc + self.V_inv[i][t] * xs[t]
            y.append(acc.truncate(lam))
        out = []
        for j in self.gens:
            s = self.shifts[j]
            if y[j].terms and y[j].val < s:
                raise NovikovError("vector is not a cycle")
            out.append(y[j].shift(-s) if y[j].terms else ZERO)
        return out


def _truncated(c: NovikovComplex, lam, degree: int) -> TruncatedHomology:
    lam = _frac(lam)
    if lam <= 0:
        raise NovikovError("λ must be positive")
    r = c.rank(degree)
    d_out = c.diff(degree)
    d_in = c.diff(degree - 1)
    if r == 0:
        return TruncatedHomology(FPModule.free(0), lam, [], [], [], [])
    if d_out and d_out[0]:
        res = smith_form(d_out, lam)
        V, Vinv, exps = res.V, res.V_inv, res.exponents
    else:
        V, Vinv, exps = identity_matrix(r), identity_matrix(r), []
    shifts: List[Optional[Fraction]] = []
    for j in range(r):
        if j < len(exps):
            b = exps[j]
            shifts.append(None if b == 0 else lam - b)
        else:
            shifts.append(Fraction(0))
    gens = [j for j in range(r) if shifts[j] is not None]
    rels = []
    for idx, j in enumerate(gens):
        row = [ZERO] * len(gens)
        row[idx] = T(lam - shifts[j]) if j < len(exps) else T(lam)
        rels.append(row)
    th = TruncatedHomology(FPModule([], len(gens)), lam, V, Vinv, shifts, gens)
    if d_in and d_in[0]:
        for col in zip(*d_in):
            coords = th.coordinates(col)
            if any(x.terms for x in coords):
                rels.append(coords)
    th.module = FPModule(rels, len(gens))
    return th


def truncated_homology(c: NovikovComplex, lam, degree: int) -> FPModule:
    """``H^degree(C ⊗ Λ/T^λ)`` computed from the Smith data of the truncated differentials."""
    return _truncated(c, lam, degree).module


def truncation_map(c: NovikovComplex, lam_hi, lam_lo, degree: int):
    """Matrix of the map ``H(C ⊗ Λ/T^{λ'}) -> H(C ⊗ Λ/T^λ)`` on presentation generators.

    Returns ``(source, target, matrix)`` with the matrix acting on columns.
    """
    lam_hi, lam_lo = _frac(lam_hi), _frac(lam_lo)
    if lam_hi < lam_lo:
        raise NovikovError("truncation maps go from larger λ to smaller λ")
    src = _truncated(c, lam_hi, degree)
    tgt = _truncated(c, lam_lo, degree)
    return src.module, tgt.module, _induced_map(src, tgt, c.rank(degree))


def _induced_map(src: TruncatedHomology, tgt: TruncatedHomology, r: int) -> Matrix:
    cols = []
    for j in src.gens:
        # cycle representing generator j: V e_j scaled by T^{shift}
        x = [src.V[i][j].shift(src.shifts[j]).truncate(src.lam) for i in range(r)]
        cols.append(tgt.coordinates(x))
    return [[cols[j][i] for j in range(len(cols))] for i in range(len(tgt.gens))]


def cycles(c: NovikovComplex, degree: int) -> List[List[NovikovElement]]:
    """A basis of the cycle module ``ker d`` over ``Λ`` (as column vectors)."""
    r = c.rank(degree)
    d_out = c.diff(degree)
    if not (d_out and d_out[0]):
        return [[ONE if i == j else ZERO for i in range(r)] for j in range(r)]
    res = smith_form(d_out)
    return [[res.V[i][j] for i in range(r)] for j in range(res.rank, r)]


# ---------------------------------------------------------------- UCT


@dataclass
class UCTReport:
    degree: int
    lam: Fraction
    left: FPModule
    middle: FPModule
    right: FPModule

    @property
    def length_additive(self) -> bool:
        return self.middle.length() == self.left.length() + self.right.length()

    @property
    def divisors_match(self) -> bool:
        merged = tuple(sorted(self.left.torsion + self.right.torsion))
        return self.middle.torsion == merged and self.middle.free_rank == 0

    @property
    def generators_bounded(self) -> bool:
        mu = lambda m: len(m.torsion) + m.free_rank  # noqa: E731
        return max(mu(self.left), mu(self.right)) <= mu(self.middle) <= mu(self.left) + mu(self.right)

    @property
    def exact(self) -> bool:
        return self.length_additive and self.generators_bounded

    def to_json(self) -> dict:
        return {
            "degree": self.degree,
            "lambda": str(self.lam),
            "left": self.left.to_json(),
            "middle": self.middle.to_json(),
            "right": self.right.to_json(),
            "length_additive": self.length_additive,
            "divisors_match": self.divisors_match,
            "exact": self.exact,
        }


def uct_verify(c: NovikovComplex, lam, degree: int) -> UCTReport:
    """Compare ``H^i(C) ⊗ Λ/T^λ``, ``H^i(C ⊗ Λ/T^λ)`` and ``Tor^1(H^{i+1}(C), Λ/T^λ)``.

    The outer terms come from homology over ``Λ``; the middle term from the
    truncated differentials.  Exactness of ``0 -> left -> middle -> right -> 0``
    is checked through additivity of length and generator counts.
    """
    lam = _frac(lam)
    left = tensor_truncation(homology(c, degree), lam)
    middle = truncated_homology(c, lam, degree)
    right = tor1(homology(c, degree + 1), lam)
    return UCTReport(degree, lam, left, middle, right)


# ---------------------------------------------------------------- inverse systems


def _quotient_invariants(target: FPModule, image_cols: Matrix):
    """Invariants of ``target / (submodule spanned by the given columns)``."""
    rels = [list(r) for r in target.relations]
    for col in image_cols:
        if any(x.terms for x in col):
            rels.append(list(col))
    return FPModule(rels, target.generators).invariants()


def _columns(mat: Matrix, ncols: int) -> List[List[NovikovElement]]:
    if not mat:
        return [[] for _ in range(ncols)]
    return [list(col) for col in zip(*mat)]


@dataclass
class InverseSystem:
    """Modules sampled at ``λ_1 > λ_2 > ... > λ_k`` with maps ``M_j -> M_{j+1}``."""

    params: List[Fraction]
    modules: List[FPModule]
    maps: List[Matrix]

    def __post_init__(self):
        self.params = [_frac(p) for p in self.params]
        if len(self.modules) != len(self.params) or len(self.maps) != max(len(self.params) - 1, 0):
            raise NovikovError("inconsistent system: counts of modules, parameters and maps differ")
        if any(a <= b for a, b in zip(self.params, self.params[1:])):
            raise NovikovError("inconsistent system: parameters must be strictly decreasing")
        for j, f in enumerate(self.maps):
            src, tgt = self.modules[j], self.modules[j + 1]
            if len(f) != tgt.generators or any(len(r) != src.generators for r in f):
                raise NovikovError(f"inconsistent system: map {j} has the wrong shape")
            # relations of the source must land in the relations of the target
            moved = [
                [sum((f[i][t] * rel[t] for t in range(src.generators)), ZERO) for i in range(tgt.generators)]
                for rel in src.relations
            ]
            if _quotient_invariants(tgt, moved) != tgt.invariants():
                raise NovikovError(f"inconsistent system: map {j} is not well defined")

    def composite(self, r: int, s: int) -> Matrix:
        """Map ``M_r -> M_s`` for indices ``r <= s``."""
        n = self.modules[r].generators
        m = identity_matrix(n)
        for j in range(r, s):
            m = matmul(self.maps[j], m, inner=self.modules[j].generators)
        return m

    def image_invariants(self, r: int, s: int):
        cols = _columns(self.composite(r, s), self.modules[r].generators)
        return _quotient_invariants(self.modules[s], cols)

    def surjective(self, r: int, s: int) -> bool:
        return self.image_invariants(r, s) == ((), 0)


def mittag_leffler(system: InverseSystem, strong: bool = True, threshold=None) -> bool:
    """Mittag-Leffler verdict on the sampled system.

    ``strong=True`` asks that every map between samples above ``threshold``
    be surjective.  ``strong=False`` asks only that images stabilize: for each
    sample, the images of the two largest samples above it agree.  Both are
    statements about the finite sample only.
    """
    idx = [j for j, p in enumerate(system.params) if threshold is None or p > _frac(threshold)]
    if strong:
        return all(system.surjective(a, b) for a, b in zip(idx, idx[1:]))
    for pos, s in enumerate(idx):
        above = idx[:pos]
        if len(above) < 2:
            continue
        if system.image_invariants(above[0], s) != system.image_invariants(above[1], s):
            return False
    return True


def truncation_system(c: NovikovComplex, degree: int, samples: Sequence) -> InverseSystem:
    """The sampled system ``λ -> H^degree(C ⊗ Λ/T^λ)`` with truncation maps."""
    params = sorted({_frac(s) for s in samples}, reverse=True)
    data = [_truncated(c, lam, degree) for lam in params]
    r = c.rank(degree)
    maps = [_induced_map(hi, lo, r) for hi, lo in zip(data, data[1:])]
    return InverseSystem(params, [d.module for d in data], maps)


# ---------------------------------------------------------------- telescopes


@dataclass
class OneRay:
    """Complexes ``C_1 -> C_2 -> ...`` with chain maps, all with the same degree range."""

    complexes: List[NovikovComplex]
    maps: List[List[Matrix]] = field(default_factory=list)

    def __post_init__(self):
        if len(self.maps) != max(len(self.complexes) - 1, 0):
            raise NovikovError("a ray of n complexes needs n-1 maps")
        if self.complexes:
            degs = list(self.complexes[0].degrees)
            if any(list(c.degrees) != degs for c in self.complexes):
                raise NovikovError("complexes in a ray must share their degree range")
        self.maps = [[as_matrix(m) for m in f] for f in self.maps]
        for i, f in enumerate(self.maps):
            a, b = self.complexes[i], self.complexes[i + 1]
            if len(f) != len(a.ranks):
                raise NovikovError(f"map {i} needs one matrix per degree")
            for k, deg in enumerate(a.degrees):
                if len(f[k]) != b.rank(deg) or any(len(r) != a.rank(deg) for r in f[k]):
                    if not (b.rank(deg) == 0 and f[k] == []):
                        raise NovikovError(f"map {i} has the wrong shape in degree {deg}")
            for k, deg in enumerate(list(a.degrees)[:-1]):
                lhs = matmul(b.diff(deg), f[k], inner=b.rank(deg))
                rhs = matmul(f[k + 1], a.diff(deg), inner=a.rank(deg + 1))
                if any((x - y).terms for r1, r2 in zip(lhs, rhs) for x, y in zip(r1, r2)):
                    raise NovikovError(f"map {i} is not a chain map in degree {deg}")


def telescope(ray: OneRay) -> NovikovComplex:
    """Finite telescope ``⊕_{i<n} C_i[1] ⊕ ⊕_{i<=n} C_i``.

    The ray is regarded as continuing by identities after its last complex;
    that tail contracts, so only the shifted copies ``C_i[1]`` for ``i < n``
    remain.  A shifted element ``x`` has differential ``(-dx, x, f_i x)``.
    """
    if not ray.complexes:
        return NovikovComplex([])
    n = len(ray.complexes)
    first = ray.complexes[0]
    lo, hi = first.start - 1, first.start + len(first.ranks) - 1

    def blocks(deg):
        out = []
        for i, c in enumerate(ray.complexes):
            if i < n - 1:
                out.append(("shift", i, c.rank(deg + 1)))
            out.append(("plain", i, c.rank(deg)))
        return out

    ranks, diffs = [], []
    for deg in range(lo, hi + 1):
        ranks.append(sum(b[2] for b in blocks(deg)))
    for deg in range(lo, hi):
        src, tgt = blocks(deg), blocks(deg + 1)
        M = zero_matrix(ranks[deg + 1 - lo], ranks[deg - lo])
        offs_t = {}
        acc = 0
        for kind, i, size in tgt:
            offs_t[(kind, i)] = acc
            acc += size
        col = 0
        for kind, i, size in src:
            c = ray.complexes[i]
            if kind == "plain":
                _place(M, offs_t[("plain", i)], col, c.diff(deg), 1)
            else:
                _place(M, offs_t[("shift", i)], col, c.diff(deg + 1), -1)
                _place(M, offs_t[("plain", i)], col, identity_matrix(size), 1)
                k = deg + 1 - c.start
                if 0 <= k < len(ray.maps[i]):
                    _place(M, offs_t[("plain", i + 1)], col, ray.maps[i][k], 1)
            col += size
        diffs.append(M)
    return NovikovComplex(ranks, diffs, lo)


def _place(M: Matrix, r0: int, c0: int, block: Matrix, sign: int):
    for i, row in enumerate(block):
        for j, x in enumerate(row):
            if x.terms:
                M[r0 + i][c0 + j] = M[r0 + i][c0 + j] + (x if sign > 0 else -x)


# ---------------------------------------------------------------- relative vs reduced


@dataclass
class RelRedReport:
    degree: int
    samples: List[Fraction]
    relative: FPModule
    truncated: List[FPModule]
    max_torsion: object
    ml_strong: bool
    ml_images: bool
    limit_surjective: bool

    @property
    def iso(self) -> bool:
        # injectivity: R^1 lim of degree i-1 vanishes; surjectivity: the limit adds nothing
        return self.ml_images and self.limit_surjective

    def to_json(self) -> dict:
        mt = self.max_torsion
        return {
            "degree": self.degree,
            "samples": [str(s) for s in self.samples],
            "relative": self.relative.to_json(),
            "truncated": [m.to_json() for m in self.truncated],
            "max_torsion": str(mt) if isinstance(mt, Fraction) else repr(mt),
            "mittag_leffler_strong": self.ml_strong,
            "mittag_leffler_images": self.ml_images,
            "limit_surjective": self.limit_surjective,
            "iso": self.iso,
        }


def rel_vs_red(ray: OneRay, degree: int, samples: Sequence) -> RelRedReport:
    """Compare ``H^i`` of the telescope with the sampled limit of its truncations.

    The comparison map is injective on samples when the degree ``i-1``
    truncated system has stabilizing images (so its ``lim^1`` vanishes), and
    surjective on samples when the image of the largest sample in the smallest
    one is already the image of the untruncated cycles.
    """
    params = sorted({_frac(s) for s in samples}, reverse=True)
    if not params or params[-1] <= 0:
        raise NovikovError("samples must be positive")
    tel = telescope(ray)
    relative = homology(tel, degree)
    sys_lo = truncation_system(tel, degree - 1, params)
    sys_i = truncation_system(tel, degree, params)
    strong = mittag_leffler(sys_lo, strong=True)
    weak = mittag_leffler(sys_lo, strong=False)
    surj = True
    if len(params) >= 2:
        bottom = _truncated(tel, params[-1], degree)
        cyc = [bottom.coordinates(z) for z in cycles(tel, degree)]
        from_cycles = _quotient_invariants(bottom.module, cyc)
        surj = sys_i.image_invariants(0, len(params) - 1) == from_cycles
    return RelRedReport(
        degree,
        params,
        relative,
        sys_i.modules,
        max_torsion(relative),
        strong,
        weak,
        surj,
    )
