"""Named batches of local-model checks, shared by the CLI and the acceptance run."""
from __future__ import annotations

import math
from typing import Callable, Dict, List

import numpy as np

from .local_models import (
    SubmersionSpec,
    circle_action,
    flat_annulus_lift,
    flat_moment,
    flux_integral,
    hopf,
    hopf_annulus_lift,
    infinite_area_probe,
    lagrangian_fiber_check,
    slide_map,
)

__all__ = ["SUITES", "run_suites"]


def _random_points(rng: np.random.Generator, n: int):
    v = rng.normal(size=(n, 4))
    return v[:, 0] + 1j * v[:, 1], v[:, 2] + 1j * v[:, 3]


def hopf_suite(rng, tol, samples: int = 1000) -> dict:
    z1, z2 = _random_points(rng, samples)
    w0, m0 = hopf(z1, z2)
    worst = 0.0
    for t in np.linspace(0.0, 1.0, 16, endpoint=False):
        w, m = hopf(*circle_action(t, z1, z2))
        worst = max(worst, float(np.max(np.abs(w - w0))), float(np.max(np.abs(m - m0))))
    return {"passed": worst < 1e-12, "max_orbit_deviation": worst}


def lagrangian_suite(rng, tol, samples: int = 1000) -> dict:
    spec = SubmersionSpec(lambda w, t: w.real, 1e-5)
    z1, z2 = _random_points(rng, samples)
    worst, failures = 0.0, 0
    for a, b in zip(z1, z2):
        r = lagrangian_fiber_check(spec, a, b, tol=tol)
        if not r.passed:
            failures += 1
        else:
            worst = max(worst, abs(r.omega_on_kernel))
    drop = lagrangian_fiber_check(SubmersionSpec(lambda w, t: abs(w) ** 2), 1.0, 0.0, tol=tol)
    origin = lagrangian_fiber_check(spec, 0.0, 0.0, tol=tol)
    return {
        "passed": failures == 0 and drop.status == "rank-drop" and origin.status == "focus-focus-candidate",
        "failures": failures,
        "max_omega": worst,
        "non_submersive": drop.status,
        "origin": origin.status,
    }


def slide_suite(rng, tol, samples: int = 10_000) -> dict:
    a = b = 2.0
    c = 1.0
    pts = np.column_stack([
        rng.uniform(-b, 4.0, samples),
        rng.uniform(-a, a, samples) * 0.999,
        rng.uniform(-a, a, samples) * 0.999,
    ])
    moved = np.array([slide_map(a, b, c, p) for p in pts])
    preserved = bool(np.all(moved[:, 1:] == pts[:, 1:]))
    outside = (pts[:, 0] <= -c) | (np.abs(pts[:, 1]) >= c) | (np.abs(pts[:, 2]) >= c)
    identity_off_v = bool(np.all(moved[outside] == pts[outside]))
    # G only moves x, so injectivity reduces to monotonicity along each line
    h = 1e-6
    jac = [(slide_map(a, b, c, p + [h, 0, 0])[0] - slide_map(a, b, c, p - [h, 0, 0])[0]) / (2 * h) for p in pts[:500]]
    return {
        "passed": preserved and identity_off_v and min(jac) > 0,
        "yz_preserved": preserved,
        "identity_off_support": identity_off_v,
        "min_jacobian": float(min(jac)),
    }


def flux_suite(rng, tol) -> dict:
    errs = []
    for r0, r1, lvl in ((1.0, 2.0, 1.0), (0.5, 3.0, 0.25), (2.0, 2.5, 4.0)):
        got = flux_integral(lvl, flat_annulus_lift(r0, r1, lvl), moment_map=flat_moment)
        errs.append(abs(got - math.pi * (r1 * r1 - r0 * r0)))
    base = flux_integral(0.5, hopf_annulus_lift(0.5, 1.0, 3.0))
    gauged = flux_integral(
        0.5, hopf_annulus_lift(0.5, 1.0, 3.0, gauge=lambda s, t: 0.3 * np.sin(2 * np.pi * t) + s * s)
    )
    return {
        "passed": max(errs) < 1e-6 and abs(base - gauged) < 1e-6,
        "max_annulus_error": max(errs),
        "lift_difference": abs(base - gauged),
    }


def probe_suite(rng, tol) -> dict:
    r = infinite_area_probe(0.0, 0.0, range(1, 11))
    return {"passed": r.strictly_increasing, **r.to_json()}


SUITES: Dict[str, Callable] = {
    "hopf": hopf_suite,
    "lagrangian": lagrangian_suite,
    "slide": slide_suite,
    "flux": flux_suite,
    "probe": probe_suite,
}


def run_suites(names: List[str], seed: int = 0, tol: float = 1e-8) -> Dict[str, dict]:
    rng = np.random.default_rng(seed)
    return {name: SUITES[name](rng, tol) for name in names}
