"""Random generators shared by the test modules."""
from __future__ import annotations

import random
from fractions import Fraction
from math import gcd
from typing import List, Optional

from hypothesis import strategies as st

from eigenray.affine import IntegralAffineMap, compose
from eigenray.diagram import EigenrayDiagram, Node, Ray, validate


def rand_rational(rng: random.Random, lo=-10, hi=10, max_den=8) -> Fraction:
    den = rng.randint(1, max_den)
    return Fraction(rng.randint(lo * den, hi * den), den)


def rand_primitive(rng: random.Random, bound=4):
    while True:
        x, y = rng.randint(-bound, bound), rng.randint(-bound, bound)
        if (x, y) != (0, 0) and gcd(x, y) == 1:
            return (x, y)


def _outward(rng: random.Random, base, center):
    """A primitive direction roughly pointing from ``center`` through ``base``."""
    dx, dy = base[0] - center[0], base[1] - center[1]
    if dx == 0 and dy == 0:
        return rand_primitive(rng)
    scale_ = 4 / max(abs(dx), abs(dy))
    x, y = round(dx * scale_) + rng.randint(-1, 1), round(dy * scale_) + rng.randint(-1, 1)
    if (x, y) == (0, 0):
        return rand_primitive(rng)
    g = gcd(x, y)
    return (x // g, y // g)


def random_diagram(rng: random.Random, max_rays: int = 6, exact: bool = False, tries: int = 200) -> EigenrayDiagram:
    """A valid diagram with at most ``max_rays`` rays and coordinates in [-10, 10] / 8."""
    for _ in range(tries):
        n = rng.randint(0, max_rays)
        center = (rand_rational(rng, -3, 3), rand_rational(rng, -3, 3))
        rays: List[Ray] = []
        for _ in range(n):
            if exact:
                e = rand_primitive(rng)
                t = Fraction(rng.randint(1, 40), rng.randint(1, 8))
                base = (center[0] + t * e[0], center[1] + t * e[1])
                if max(abs(base[0]), abs(base[1])) > 10:
                    continue
            else:
                base = (rand_rational(rng), rand_rational(rng))
                e = _outward(rng, base, center)
            nodes = [Node(base, rng.randint(1, 3))]
            if rng.random() < 0.3:
                t = Fraction(rng.randint(1, 16), rng.randint(1, 8))
                nodes.append(Node((base[0] + t * e[0], base[1] + t * e[1]), rng.randint(1, 2)))
            rays.append(Ray(base, e, tuple(nodes)))
        d = EigenrayDiagram(tuple(rays))
        if validate(d).valid:
            return d
    return EigenrayDiagram()


def diagrams(max_rays: int = 6, exact: bool = False):
    return st.integers(0, 2**32 - 1).map(lambda s: random_diagram(random.Random(s), max_rays, exact))


ELEMENTARY = [((1, 1), (0, 1)), ((1, 0), (1, 1)), ((0, -1), (1, 0)), ((1, 0), (0, -1))]


def random_affine(rng: random.Random, length: int = 4) -> IntegralAffineMap:
    m = IntegralAffineMap(((1, 0), (0, 1)), (rand_rational(rng, -5, 5), rand_rational(rng, -5, 5)))
    for _ in range(rng.randint(0, length)):
        step = IntegralAffineMap(rng.choice(ELEMENTARY))
        m = compose(step, m) if rng.random() < 0.5 else compose(step.inverse(), m)
    return m


def affine_maps():
    return st.integers(0, 2**32 - 1).map(lambda s: random_affine(random.Random(s)))


def first_node(d: EigenrayDiagram) -> Optional[Node]:
    return d.rays[0].nodes[0] if d.rays else None


# ---------------------------------------------------------------- Novikov data

EXPONENTS = [Fraction(0), Fraction(1, 2), Fraction(1), Fraction(3, 2), Fraction(2), Fraction(3)]


def _nov():
    from eigenray import novikov

    return novikov


def random_unimodular(rng: random.Random, n: int, steps: int = 6):
    """``(A, A^{-1})`` as products of elementary matrices ``I + c T^b E_ij`` and swaps."""
    nv = _nov()
    a, ainv = nv.identity_matrix(n), nv.identity_matrix(n)
    if n < 2:
        return a, ainv
    for _ in range(steps):
        i, j = rng.sample(range(n), 2)
        if rng.random() < 0.2:
            a[i], a[j] = a[j], a[i]
            for row in ainv:
                row[i], row[j] = row[j], row[i]
            continue
        x = nv.T(rng.choice([0, Fraction(1, 2), 1]), rng.choice([-2, -1, 1, 2]))
        # row op r_i += x r_j on A; column op c_j -= x c_i on A^{-1}
        a[i] = [a[i][t] + x * a[j][t] for t in range(n)]
        for row in ainv:
            row[j] = row[j] - x * row[i]
    return a, ainv


def random_complex(rng: random.Random, max_rank: int = 4, max_degrees: int = 4):
    """A complex with known homology.

    Each degree splits as incoming boundaries, free homology and outgoing
    generators; the standard differential sends outgoing generator ``j`` to
    ``T^{a_j}`` times incoming generator ``j`` of the next degree.  Everything
    is then conjugated by random unimodular matrices.  Returns the complex and
    a dict with the exponents used.
    """
    nv = _nov()
    n = rng.randint(1, max_degrees)
    start = rng.randint(-1, 1)
    incoming = [0] * n
    free = [0] * n
    exps = []
    for k in range(n):
        room = max_rank - incoming[k]
        free[k] = rng.randint(0, min(room, 2))
        room -= free[k]
        out = rng.randint(0, room) if k < n - 1 else 0
        exps.append([rng.choice(EXPONENTS) for _ in range(out)])
        if k < n - 1:
            incoming[k + 1] = out
    ranks = [incoming[k] + free[k] + len(exps[k]) for k in range(n)]
    bases = [random_unimodular(rng, r) for r in ranks]
    diffs = []
    for k in range(n - 1):
        d = nv.zero_matrix(ranks[k + 1], ranks[k])
        for j, a in enumerate(exps[k]):
            d[j][incoming[k] + free[k] + j] = nv.T(a)
        a_next, _ = bases[k + 1]
        _, a_inv = bases[k]
        d = nv.matmul(nv.matmul(a_next, d, inner=ranks[k + 1]), a_inv, inner=ranks[k])
        diffs.append(d)
    c = nv.NovikovComplex(ranks, diffs, start)
    truth = {"start": start, "free": free, "incoming": [[]] + exps[:-1], "outgoing": exps}
    return c, truth


def expected_homology(truth, degree):
    """``(torsion, free_rank)`` of ``H^degree`` over ``Λ``."""
    k = degree - truth["start"]
    if not 0 <= k < len(truth["free"]):
        return (), 0
    return tuple(sorted(a for a in truth["incoming"][k] if a > 0)), truth["free"][k]


def expected_truncated(truth, lam, degree):
    """``(torsion, 0)`` of ``H^degree(C ⊗ Λ/T^λ)``."""
    k = degree - truth["start"]
    if not 0 <= k < len(truth["free"]):
        return (), 0
    parts = [min(a, lam) for a in truth["incoming"][k] + truth["outgoing"][k] if a > 0]
    parts += [lam] * truth["free"][k]
    return tuple(sorted(parts)), 0


def random_element(rng: random.Random, zero_ok: bool = True):
    nv = _nov()
    if zero_ok and rng.random() < 0.25:
        return nv.ZERO
    terms = [(rng.choice(EXPONENTS), rng.choice([-3, -2, -1, 1, 2, 3])) for _ in range(rng.randint(1, 2))]
    return nv.NovikovElement(terms)


def random_matrix(rng: random.Random, rows: int, cols: int):
    return [[random_element(rng) for _ in range(cols)] for _ in range(rows)]
