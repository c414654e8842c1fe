"""Floating-point checks of the four-dimensional local models.

Points of C^2 are handled as complex pairs ``(z1, z2)``; the real coordinates
are ``(x1, y1, x2, y2)`` with symplectic form ``dx1^dy1 + dx2^dy2``.  The
circle ``S`` acts by ``(e^{2 pi i t} z1, e^{-2 pi i t} z2)`` with moment map
``mu = pi (|z1|^2 - |z2|^2)``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

__all__ = [
    "LocalModelError",
    "hopf",
    "moment",
    "circle_action",
    "omega",
    "SubmersionSpec",
    "FiberReport",
    "lagrangian_fiber_check",
    "slide_psi",
    "slide_map",
    "flux_integral",
    "flat_moment",
    "flat_annulus_lift",
    "hopf_annulus_lift",
    "boundary_flux",
    "AreaProbeReport",
    "infinite_area_probe",
]


class LocalModelError(ValueError):
    """Raised when a local-model precondition fails."""


# ---------------------------------------------------------------- Hopf model


def moment(z1, z2):
    return np.pi * (np.abs(z1) ** 2 - np.abs(z2) ** 2)


def hopf(z1, z2):
    """``(2 pi z1 z2, mu(z1, z2))``; works elementwise on arrays."""
    return 2 * np.pi * z1 * z2, moment(z1, z2)


def circle_action(t, z1, z2):
    phase = np.exp(2j * np.pi * t)
    return phase * z1, np.conj(phase) * z2


def omega(u, v) -> float:
    """Standard symplectic pairing of two real 4-vectors ``(x1, y1, x2, y2)``."""
    return u[0] * v[1] - u[1] * v[0] + u[2] * v[3] - u[3] * v[2]


def _to_real(z1, z2) -> np.ndarray:
    return np.array([z1.real, z1.imag, z2.real, z2.imag], dtype=float)


def _to_complex(x) -> Tuple[complex, complex]:
    return complex(x[0], x[1]), complex(x[2], x[3])


# ---------------------------------------------------------------- Lagrangian criterion


@dataclass(frozen=True)
class SubmersionSpec:
    """First component ``g(w, t)`` of ``f = (g, pr_R)`` on ``C x R``, with a difference step."""

    g: Callable[[complex, float], float]
    h: float = 1e-5


@dataclass(frozen=True)
class FiberReport:
    status: str
    rank: int
    omega_on_kernel: Optional[float]
    passed: bool
    g_submersive: Optional[bool] = None

    def to_json(self) -> dict:
        return asdict(self)


def _cross4(a, b, c) -> np.ndarray:
    """The vector ``k`` with ``<k, x> = det(a, b, c, x)``; orthogonal to a, b, c."""
    m = np.array([a, b, c], dtype=float)
    out = np.empty(4)
    for i in range(4):
        minor = np.delete(m, i, axis=1)
        out[i] = (-1) ** (i + 3) * np.linalg.det(minor)
    return out


def _kernel_pair(a, b) -> Tuple[np.ndarray, np.ndarray]:
    basis = np.eye(4)
    k1 = max((_cross4(a, b, e) for e in basis), key=np.linalg.norm)
    k1 = k1 / np.linalg.norm(k1)
    k2 = _cross4(a, b, k1)
    return k1, k2 / np.linalg.norm(k2)


def _gradient(fn, x, h) -> np.ndarray:
    grad = np.empty((2, 4))
    for i in range(4):
        step = np.zeros(4)
        step[i] = h
        grad[:, i] = (np.asarray(fn(x + step)) - np.asarray(fn(x - step))) / (2 * h)
    return grad


def _rank(a, b, zero_tol: float, angle_tol: float) -> int:
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    big = max(na, nb)
    if big < zero_tol:
        return 0
    if min(na, nb) < zero_tol:
        return 1
    gram_det = na * na * nb * nb - float(np.dot(a, b)) ** 2
    return 2 if gram_det > angle_tol * na * na * nb * nb else 1


def lagrangian_fiber_check(
    spec: SubmersionSpec,
    z1: complex,
    z2: complex,
    tol: float = 1e-8,
    zero_tol: float = 1e-8,
    angle_tol: float = 1e-12,
) -> FiberReport:
    """Test whether the fiber of ``f o hopf`` through ``(z1, z2)`` is Lagrangian there.

    The differential is taken by central differences.  Its kernel is spanned
    by two generalized cross products of the gradient rows, and ``omega`` is
    evaluated on the normalized pair.
    """
    x = _to_real(complex(z1), complex(z2))
    h = float(spec.h)
    scale = max(1.0, float(np.max(np.abs(x))))
    if not math.isfinite(h) or h <= 64 * np.finfo(float).eps * scale:
        return FiberReport("degenerate-step", 0, None, False)

    def composite(pt):
        w, mu = hopf(*_to_complex(pt))
        return float(spec.g(w, mu)), float(mu)

    try:
        grad = _gradient(composite, x, h)
    except (ArithmeticError, ValueError):
        return FiberReport("degenerate-step", 0, None, False)
    if not np.all(np.isfinite(grad)):
        return FiberReport("degenerate-step", 0, None, False)

    a, b = grad
    rank = _rank(a, b, zero_tol, angle_tol)
    if rank == 0 and np.linalg.norm(x) <= h:
        w0, mu0 = hopf(*_to_complex(x))
        dg = np.array([
            (spec.g(w0 + h, mu0) - spec.g(w0 - h, mu0)) / (2 * h),
            (spec.g(w0 + 1j * h, mu0) - spec.g(w0 - 1j * h, mu0)) / (2 * h),
        ])
        submersive = bool(np.linalg.norm(dg) > zero_tol)
        status = "focus-focus-candidate" if submersive else "rank-drop"
        return FiberReport(status, 0, None, False, submersive)
    if rank < 2:
        return FiberReport("rank-drop", rank, None, False)

    k1, k2 = _kernel_pair(a, b)
    w = float(omega(k1, k2))
    ok = abs(w) < tol
    return FiberReport("lagrangian" if ok else "not-lagrangian", 2, w, ok)


# ---------------------------------------------------------------- sliding diffeomorphism


def _phi(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos])
    return out


def _step(t):
    """Smooth step: 0 for t <= 0, 1 for t >= 1."""
    a, b = _phi(t), _phi(1.0 - np.asarray(t, dtype=float))
    return a / (a + b)


def _check_slide_params(a, b, c):
    if not (c > 0 and a > c and b > c):
        raise LocalModelError("slide parameters need a, b > c > 0")


def slide_psi(a: float, b: float, c: float, x, y, z):
    """Shift function: nonnegative, zero off ``(-c, inf) x (-c, c)^2``, infinite on the ray."""
    _check_slide_params(a, b, c)
    x, y, z = (np.asarray(v, dtype=float) for v in (x, y, z))
    r = np.hypot(y, z)
    with np.errstate(divide="ignore", invalid="ignore"):
        along = np.where(r > 0, 1.0 + x / np.where(r > 0, r, 1.0), np.where(x >= 0, 1.0, 0.0))
        rho = _step(along) * _step((c - r) / (c / 2))
        log_term = np.where(r > 0, np.log(c * c / np.where(r > 0, r * r, 1.0)), np.inf)
    out = np.where(rho > 0, rho * np.maximum(log_term, 0.0), 0.0)
    return out if out.ndim else float(out)


def slide_map(a: float, b: float, c: float, point) -> Tuple[float, float, float]:
    """``(x, y, z) -> (x + psi, y, z)`` on ``U`` minus the nonnegative x-axis."""
    _check_slide_params(a, b, c)
    x, y, z = (float(v) for v in point)
    if not (x > -b and abs(y) < a and abs(z) < a):
        raise LocalModelError(f"point {point} lies outside the slide domain")
    if y == 0 and z == 0 and x >= 0:
        raise LocalModelError(f"point {point} lies on the removed ray")
    return (x + slide_psi(a, b, c, x, y, z), y, z)


# ---------------------------------------------------------------- flux integrals

Lift = Callable[[np.ndarray, np.ndarray], Tuple[np.ndarray, np.ndarray]]

_DERIV_STEP = 1e-3


def _lift_real(lift: Lift, s, t) -> np.ndarray:
    z1, z2 = lift(s, t)
    z1 = np.broadcast_to(np.asarray(z1, dtype=complex), np.shape(s))
    z2 = np.broadcast_to(np.asarray(z2, dtype=complex), np.shape(s))
    return np.stack([z1.real, z1.imag, z2.real, z2.imag])


def _partial(lift: Lift, s, t, along_s: bool, span: float) -> np.ndarray:
    # fourth-order central difference in the parameter
    d = _DERIV_STEP * span

    def at(k):
        return _lift_real(lift, s + k * d, t) if along_s else _lift_real(lift, s, t + k * d)

    return (8 * (at(1) - at(-1)) - (at(2) - at(-2))) / (12 * d)


def _flux_at(lift: Lift, s0: float, s1: float, ns: int, nt: int) -> float:
    ds, dt = (s1 - s0) / ns, 1.0 / nt
    s = s0 + (np.arange(ns) + 0.5) * ds
    t = (np.arange(nt) + 0.5) * dt
    S, T = np.meshgrid(s, t, indexing="ij")
    ps = _partial(lift, S, T, True, abs(s1 - s0))
    pt = _partial(lift, S, T, False, 1.0)
    dens = ps[0] * pt[1] - ps[1] * pt[0] + ps[2] * pt[3] - ps[3] * pt[2]
    return float(dens.sum() * ds * dt)


def _check_level(lift: Lift, s0: float, s1: float, level: float, tol: float, moment_map):
    t = np.linspace(0.0, 1.0, 17)
    for s in (s0, s1):
        z1, z2 = lift(np.full_like(t, s), t)
        err = np.max(np.abs(moment_map(np.asarray(z1), np.asarray(z2)) - level))
        if err > tol * max(1.0, abs(level)):
            raise LocalModelError(f"boundary at s={s} leaves the level set (error {err:.3g})")


def flux_integral(
    level: float,
    lift: Lift,
    s_range: Tuple[float, float] = (0.0, 1.0),
    tol: float = 1e-7,
    max_cells: int = 2**20,
    level_tol: float = 1e-8,
    signed: bool = False,
    moment_map=moment,
) -> float:
    """Integrate ``omega`` over the lifted surface ``lift(s, t)``.

    ``lift`` maps parameter arrays ``s`` in ``s_range`` and periodic ``t`` in
    ``[0, 1)`` to ``(z1, z2)`` inside the level set ``mu = level``; the curves
    ``s = s0`` and ``s = s1`` are the two boundary loops.  The midpoint grid is
    doubled in both directions, each pair of levels is Richardson-combined,
    and refinement stops once successive combined values differ by less than
    ``tol``.  Returns the absolute value unless ``signed``.  ``moment_map``
    is used only to check that the boundary loops sit on the level set.
    """
    s0, s1 = map(float, s_range)
    if s0 == s1:
        return 0.0
    _check_level(lift, s0, s1, level, level_tol, moment_map)
    ns = nt = 8
    raw = _flux_at(lift, s0, s1, ns, nt)
    prev = None
    while True:
        if 4 * ns * nt > max_cells:
            warnings.warn(f"flux quadrature stopped at {ns * nt} cells before reaching tol={tol}")
            break
        ns, nt = 2 * ns, 2 * nt
        cur = _flux_at(lift, s0, s1, ns, nt)
        # the midpoint error is h^2 in s (t is periodic), so one Richardson step removes it
        est = (4 * cur - raw) / 3
        raw = cur
        if prev is not None and abs(est - prev) < tol:
            prev = est
            break
        prev = est
    return prev if signed else abs(prev)


def flat_moment(z1, z2):
    """Moment map of the circle rotating ``z2`` alone."""
    return np.pi * np.abs(z2) ** 2


def flat_annulus_lift(r_inner: float, r_outer: float, level: float, gauge=None) -> Lift:
    """Annulus in the ``z1`` plane with ``z2`` on the circle ``flat_moment = level``.

    In this flat product model the reduced space is the ``z1`` plane with its
    Euclidean area, so the flux over the annulus is ``pi (r_outer^2 - r_inner^2)``.
    """
    if level < 0:
        raise LocalModelError("flat model level must be nonnegative")
    rho = math.sqrt(level / math.pi)

    def lift(s, t):
        r = r_inner + (r_outer - r_inner) * s
        z1 = r * np.exp(2j * np.pi * t)
        phase = 0.0 if gauge is None else gauge(s, t)
        return z1, rho * np.exp(2j * np.pi * phase) * np.ones_like(z1)

    return lift


def hopf_annulus_lift(level: float, r_inner: float, r_outer: float, gauge=None) -> Lift:
    """Section over the reduced annulus ``r_inner <= |w| <= r_outer`` at ``mu = level``.

    ``w = 2 pi z1 z2`` is the reduced coordinate.  ``gauge(s, t)`` is an
    S-phase; different gauges give lifts that differ by reparameterizing along
    orbits.
    """
    lvl = level / math.pi

    def lift(s, t):
        rho = (r_inner + (r_outer - r_inner) * s) / (2 * math.pi)
        m1 = np.sqrt((lvl + np.sqrt(lvl * lvl + 4 * rho * rho)) / 2)
        m2 = np.sqrt(np.maximum(m1 * m1 - lvl, 0.0))
        alpha = 0.0 if gauge is None else 2 * np.pi * gauge(s, t)
        theta = 2 * np.pi * t
        return m1 * np.exp(1j * alpha), m2 * np.exp(1j * (theta - alpha))

    return lift


def boundary_flux(level: float, r_inner: float, r_outer: float, samples: int = 1 << 16) -> float:
    """Reduced annulus area by Stokes: Liouville form around the two lifted loops.

    Independent of :func:`flux_integral`; exact for the polygonal loops and
    second-order accurate in ``samples``.
    """
    def loop_action(r):
        t = np.arange(samples) / samples
        z1, z2 = hopf_annulus_lift(level, r, r)(np.zeros_like(t), t)
        x = _to_real(z1, z2)
        xn = np.roll(x, -1, axis=1)
        return 0.5 * float(np.sum(x[0] * xn[1] - x[1] * xn[0] + x[2] * xn[3] - x[3] * xn[2]))

    return abs(loop_action(r_outer) - loop_action(r_inner))


@dataclass(frozen=True)
class AreaProbeReport:
    radii: List[float]
    fluxes: List[float]
    strictly_increasing: bool
    min_increment: float

    def to_json(self) -> dict:
        return asdict(self)


def infinite_area_probe(
    level: float,
    direction: float,
    radii: Sequence[float],
    fixed_radius: float = 0.5,
    tol: float = 1e-9,
) -> AreaProbeReport:
    """Reduced area between the loop ``|w| = fixed_radius`` and loops ``|w| = R``.

    ``direction`` is the angle (in turns) of a ray in the reduced plane; the
    angular grid starts on it so no quadrature node lies on the ray.
    """
    radii = [float(r) for r in radii]
    if any(b < a for a, b in zip(radii, radii[1:])):
        raise LocalModelError("radii must be nondecreasing")
    fluxes = []
    for r in radii:
        base = hopf_annulus_lift(level, fixed_radius, r)

        def rotated(s, t, base=base):
            return base(s, t + direction)

        fluxes.append(flux_integral(level, rotated, tol=tol, signed=True))
    inc = [b - a for a, b in zip(fluxes, fluxes[1:])]
    return AreaProbeReport(
        radii,
        fluxes,
        all(d > 0 for d in inc),
        min(inc) if inc else 0.0,
    )
