"""Command-line front end.

Exit codes: 0 success, 1 a check ran and came out negative, 2 unparsable
input, 3 failed precondition, 4 I/O error.  Errors are printed to stderr as a
JSON object with ``error`` and ``message`` keys.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from fractions import Fraction
from typing import Any, Callable, Dict, List, Optional

from .affine import AffineError, q, vec
from .charts import five_charts_report
from .diagram import (
    DiagramError,
    EigenrayDiagram,
    branch_move,
    is_exact,
    nodal_slide,
    node_removal,
    seed_data,
    validate,
)
from .ks import KSElement, KSError, RationalPolygon, ks_val
from .nodal import AtlasError, ChartAtlas, Loop, holonomy, trace_geodesic
from .novikov import (
    FPModule,
    NovikovComplex,
    NovikovError,
    homology,
    matrix_from_json,
    max_torsion,
    tensor_truncation,
    tor1,
    truncated_homology,
    uct_verify,
)
from .render import render_svg

EXIT_OK, EXIT_CHECK, EXIT_PARSE, EXIT_PRECONDITION, EXIT_IO = 0, 1, 2, 3, 4


class CliError(Exception):
    def __init__(self, code: int, kind: str, message: str, **extra):
        super().__init__(message)
        self.code, self.kind, self.extra = code, kind, extra

    def payload(self) -> dict:
        return {"error": self.kind, "message": str(self), **self.extra}


def _parse_error(msg: str, **extra) -> CliError:
    return CliError(EXIT_PARSE, "parse", msg, **extra)


def _precondition(msg: str, **extra) -> CliError:
    return CliError(EXIT_PRECONDITION, "precondition", msg, **extra)


# ---------------------------------------------------------------- I/O


def _read_text(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise CliError(EXIT_IO, "io", f"cannot read {path}: {exc.strerror}") from exc


def _read_json(path: str) -> Any:
    try:
        return json.loads(_read_text(path))
    except json.JSONDecodeError as exc:
        raise _parse_error(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from exc


def _write_text(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    try:
        fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except OSError as exc:
        raise CliError(EXIT_IO, "io", f"cannot write {path}: {exc.strerror}") from exc


def _load_diagram(path: str) -> EigenrayDiagram:
    data = _read_json(path)
    try:
        return EigenrayDiagram.from_json(data)
    except (DiagramError, AffineError) as exc:
        raise _parse_error(f"{path}: {exc}") from exc


def _emit(obj: Any) -> None:
    sys.stdout.write(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _point(text: str):
    try:
        parts = [p for p in text.replace(" ", "").split(",") if p]
        if len(parts) != 2:
            raise ValueError
        return vec(*parts)
    except (ValueError, ZeroDivisionError, AffineError) as exc:
        raise _parse_error(f"expected a point 'x,y', got {text!r}") from exc


def _points(text: str) -> List:
    return [_point(p) for p in text.split(";") if p.strip()]


def _rational(text: str) -> Fraction:
    try:
        return q(str(text))
    except (ValueError, ZeroDivisionError, AffineError) as exc:
        raise _parse_error(f"expected a rational number, got {text!r}") from exc


def _str_point(p) -> List[str]:
    return [str(c) for c in p]


def _map_json(m) -> dict:
    return {"linear": [list(r) for r in m.linear], "translate": _str_point(m.translate), "trace": m.trace}


# ---------------------------------------------------------------- operation scripts

_FIELDS: Dict[str, List[str]] = {
    "slide": ["node", "to"],
    "remove": ["node"],
    "branch": ["node"],
    "validate": [],
    "trace": ["start", "dir", "budget"],
    "holonomy": ["loop"],
    "seed": [],
    "exact": [],
}


def _json_point(value, where: str):
    try:
        if not isinstance(value, (list, tuple)) or len(value) != 2:
            raise ValueError
        return vec(*value)
    except (ValueError, TypeError, ZeroDivisionError, AffineError) as exc:
        raise _parse_error(f"{where}: expected a point [x, y] of integers or 'p/q' strings") from exc


def _parse_script(data) -> List[dict]:
    cmds = data.get("commands") if isinstance(data, dict) else data
    if not isinstance(cmds, list):
        raise _parse_error("script must be a list of commands or {\"commands\": [...]}")
    parsed = []
    for i, cmd in enumerate(cmds):
        where = f"command {i}"
        if not isinstance(cmd, dict) or cmd.get("op") not in _FIELDS:
            raise _parse_error(f"{where}: unknown or missing 'op'", command=i)
        missing = [f for f in _FIELDS[cmd["op"]] if f not in cmd]
        if missing:
            raise _parse_error(f"{where}: missing {', '.join(missing)}", command=i)
        out = {"op": cmd["op"]}
        for key in ("node", "to", "start", "dir"):
            if key in cmd:
                out[key] = _json_point(cmd[key], f"{where}.{key}")
        if "budget" in cmd:
            out["budget"] = _rational(cmd["budget"])
        if "loop" in cmd:
            if not isinstance(cmd["loop"], list):
                raise _parse_error(f"{where}.loop: expected a list of points", command=i)
            out["loop"] = [_json_point(p, f"{where}.loop") for p in cmd["loop"]]
        parsed.append(out)
    return parsed


def _run_command(d: EigenrayDiagram, cmd: dict):
    op = cmd["op"]
    if op == "slide":
        return nodal_slide(d, cmd["node"], cmd["to"]), None
    if op == "remove":
        return node_removal(d, cmd["node"]), None
    if op == "branch":
        return branch_move(d, cmd["node"]), None
    if op == "validate":
        report = validate(d)
        if not report.valid:
            raise DiagramError("diagram is invalid: " + "; ".join(v.detail for v in report.violations))
        return d, {"valid": True}
    if op == "trace":
        path = trace_geodesic(ChartAtlas.from_diagram(d), cmd["start"], cmd["dir"], cmd["budget"])
        return d, path.to_json()
    if op == "holonomy":
        return d, _map_json(holonomy(ChartAtlas.from_diagram(d), Loop(tuple(cmd["loop"]))))
    if op == "seed":
        return d, [{"dir": list(e), "flux": str(f)} for e, f in seed_data(d)]
    point = is_exact(d)
    return d, {"exact": point is not None, "point": None if point is None else _str_point(point)}


def run_script(d: EigenrayDiagram, commands: List[dict]):
    """Run every command on a working copy; raise before anything is committed."""
    results = []
    for i, cmd in enumerate(commands):
        try:
            d, res = _run_command(d, cmd)
        except (DiagramError, AtlasError, AffineError) as exc:
            raise _precondition(str(exc), command=i, op=cmd["op"]) from exc
        if res is not None:
            results.append({"command": i, "op": cmd["op"], "result": res})
    return d, results


# ---------------------------------------------------------------- commands


def cmd_validate(args) -> int:
    report = validate(_load_diagram(args.diagram))
    _emit(report.to_json())
    return EXIT_OK if report.valid else EXIT_CHECK


def cmd_apply(args) -> int:
    d = _load_diagram(args.diagram)
    commands = _parse_script(_read_json(args.script))
    d, results = run_script(d, commands)
    text = d.dumps() + "\n"
    if args.out:
        _write_text(args.out, text)
        _emit({"results": results, "written": args.out})
    else:
        _emit({"results": results, "diagram": d.to_json()})
    return EXIT_OK


def cmd_render(args) -> int:
    d = _load_diagram(args.diagram)
    atlas = ChartAtlas.from_diagram(d)
    paths = []
    for spec in args.geodesic or []:
        pts = _points(spec)
        if len(pts) != 2:
            raise _parse_error(f"--geodesic expects 'x,y;dx,dy', got {spec!r}")
        try:
            paths.append(trace_geodesic(atlas, pts[0], pts[1], _rational(args.budget)))
        except AtlasError as exc:
            raise _precondition(str(exc)) from exc
    svg = render_svg(d, paths)
    if args.out:
        _write_text(args.out, svg)
    else:
        sys.stdout.write(svg)
    return EXIT_OK


def cmd_trace(args) -> int:
    d = _load_diagram(args.diagram)
    try:
        path = trace_geodesic(ChartAtlas.from_diagram(d), _point(args.start), _point(args.dir), _rational(args.budget))
    except AtlasError as exc:
        raise _precondition(str(exc)) from exc
    _emit(path.to_json())
    return EXIT_OK


def cmd_holonomy(args) -> int:
    d = _load_diagram(args.diagram)
    try:
        m = holonomy(ChartAtlas.from_diagram(d), Loop(tuple(_points(args.loop))))
    except AtlasError as exc:
        raise _precondition(str(exc)) from exc
    _emit(_map_json(m))
    return EXIT_OK


def cmd_seed(args) -> int:
    d = _load_diagram(args.diagram)
    _emit([{"dir": list(e), "flux": str(f)} for e, f in seed_data(d)])
    return EXIT_OK


def cmd_exact(args) -> int:
    point = is_exact(_load_diagram(args.diagram))
    _emit({"exact": point is not None, "point": None if point is None else _str_point(point)})
    return EXIT_OK


def _module_report(v: FPModule, lam) -> dict:
    tau = max_torsion(v)
    out = {"module": v.to_json(), "max_torsion": str(tau) if tau != float("-inf") else "-inf"}
    if lam is not None:
        out["truncation"] = tensor_truncation(v, lam).to_json()
        out["tor1"] = tor1(v, lam).to_json()
    return out


def cmd_torsion(args) -> int:
    data = _read_json(args.input)
    lam = _rational(args.precision) if args.precision is not None else None
    try:
        if isinstance(data, dict) and "ranks" in data:
            c = NovikovComplex.from_json(data)
            degrees = [args.degree] if args.degree is not None else list(c.degrees)
            report = {}
            for k in degrees:
                entry = _module_report(homology(c, k), lam)
                if lam is not None:
                    entry["truncated_homology"] = truncated_homology(c, lam, k).to_json()
                    uct = uct_verify(c, lam, k)
                    entry["uct_exact"] = uct.exact
                report[str(k)] = entry
            _emit({"homology": report})
        elif isinstance(data, dict) and "relations" in data:
            rel = matrix_from_json(data["relations"])
            gens = int(data.get("generators", len(rel[0]) if rel else 0))
            _emit(_module_report(FPModule(rel, gens), lam))
        else:
            raise _parse_error("expected a module {relations, generators} or a complex {ranks, differentials}")
    except NovikovError as exc:
        raise _parse_error(str(exc)) from exc
    except ValueError as exc:
        if isinstance(exc, CliError):
            raise
        raise _precondition(str(exc)) from exc
    return EXIT_OK


def cmd_ksval(args) -> int:
    data = _read_json(args.element)
    try:
        x = KSElement.from_json(data)
        if args.precision is not None:
            x = KSElement(x.terms, _rational(args.precision))
        poly = RationalPolygon(tuple(_points(args.polygon)))
    except KSError as exc:
        raise _parse_error(str(exc)) from exc
    v = ks_val(x, poly)
    _emit({"val": "inf" if v == float("inf") else str(v), "truncated": x.truncated(poly).to_json()})
    return EXIT_OK


def cmd_localcheck(args) -> int:
    from .suites import SUITES, run_suites

    unknown = [s for s in args.suites if s not in SUITES]
    if unknown:
        raise _parse_error(f"unknown suite(s): {', '.join(unknown)}; choose from {', '.join(SUITES)}")
    report = run_suites(args.suites or list(SUITES), seed=args.seed_rng, tol=args.tol)
    _emit(report)
    return EXIT_OK if all(r["passed"] for r in report.values()) else EXIT_CHECK


def cmd_fivecharts(args) -> int:
    report = five_charts_report(_rational(args.budget))
    out = report.to_json()
    if args.out:
        _write_text(args.out, json.dumps(out, indent=2, sort_keys=True) + "\n")
    else:
        _emit(out)
    sys.stderr.write(report.tally + "\n")
    for blocked in report.blocked:
        for hit in blocked.to_json()["intersections"]:
            sys.stderr.write(f"blocked {hit['pair'][0]} x {hit['pair'][1]} at ({', '.join(hit['point'])})\n")
    return EXIT_OK if report.ok else EXIT_CHECK


# ---------------------------------------------------------------- argument parsing


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="eigenray", description="Eigenray diagrams, nodal affine geometry and friends.")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name: str, fn: Callable, help_: str) -> argparse.ArgumentParser:
        sp = sub.add_parser(name, help=help_)
        sp.set_defaults(func=fn)
        return sp

    sp = add("validate", cmd_validate, "check a diagram for overlaps and crossings")
    sp.add_argument("diagram")

    sp = add("apply", cmd_apply, "run an operation script on a diagram (all or nothing)")
    sp.add_argument("diagram")
    sp.add_argument("script")
    sp.add_argument("--out")

    sp = add("render", cmd_render, "draw a diagram as SVG")
    sp.add_argument("diagram")
    sp.add_argument("--out")
    sp.add_argument("--geodesic", action="append", metavar="X,Y;DX,DY", help="overlay a traced geodesic")
    sp.add_argument("--budget", default="10")

    sp = add("trace", cmd_trace, "trace a geodesic through the cut plane")
    sp.add_argument("diagram")
    sp.add_argument("--start", required=True, metavar="X,Y")
    sp.add_argument("--dir", required=True, metavar="DX,DY")
    sp.add_argument("--budget", default="100")

    sp = add("holonomy", cmd_holonomy, "holonomy around a polygonal loop")
    sp.add_argument("diagram")
    sp.add_argument("--loop", required=True, metavar="X,Y;X,Y;...")

    sp = add("seed", cmd_seed, "per-node direction and flux")
    sp.add_argument("diagram")

    sp = add("exact", cmd_exact, "common point of all ray lines, if any")
    sp.add_argument("diagram")

    sp = add("torsion", cmd_torsion, "invariants of a Novikov module or complex")
    sp.add_argument("input")
    sp.add_argument("--precision", help="truncation level")
    sp.add_argument("--degree", type=int)

    sp = add("ksval", cmd_ksval, "valuation of a KS element on a polygon")
    sp.add_argument("element")
    sp.add_argument("--polygon", required=True, metavar="X,Y;X,Y;...")
    sp.add_argument("--precision")

    sp = add("localcheck", cmd_localcheck, "numerical checks of the local models")
    sp.add_argument("suites", nargs="*")
    sp.add_argument("--seed-rng", type=int, default=0)
    sp.add_argument("--tol", type=float, default=1e-8)

    sp = add("fivecharts", cmd_fivecharts, "eigenray choices in the two-node example")
    sp.add_argument("--budget", default="20")
    sp.add_argument("--out")
    return p


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        sys.stderr.write(json.dumps(exc.payload(), sort_keys=True) + "\n")
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
