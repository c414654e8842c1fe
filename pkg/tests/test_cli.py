import json
import time
from fractions import Fraction
from xml.etree import ElementTree

import pytest

from eigenray.charts import Eigenray, eigenray_choices, eigenray_polyline, five_charts_report, polylines_meet
from eigenray.cli import main
from eigenray.diagram import EigenrayDiagram, Node, Ray, five_charts
from eigenray.nodal import ChartAtlas, trace_geodesic
from eigenray.render import render_svg

SVG = "{http://www.w3.org/2000/svg}"


def write(tmp_path, name, obj):
    p = tmp_path / name
    p.write_text(obj if isinstance(obj, str) else json.dumps(obj), encoding="utf-8")
    return str(p)


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture
def five(tmp_path):
    return write(tmp_path, "five.json", five_charts().to_json())


# ---------------------------------------------------------------- five charts


class TestFiveCharts:
    def test_tally(self):
        t = time.perf_counter()
        rep = five_charts_report(20)
        assert time.perf_counter() - t < 1
        assert rep.direct_count == 3 and len(rep.blocked) == 1 and rep.slide_count == 2
        assert rep.tally == "3 direct + 2 after slides = 5" and rep.ok

    def test_blocked_pair_meets_at_origin(self):
        (blocked,) = five_charts_report(20).blocked
        assert [h[2] for h in blocked.meetings] == [(0, 0)]
        assert {e.sign for e in blocked.choice} == {-1}

    def test_deterministic(self):
        assert five_charts_report(20).to_json() == five_charts_report(20).to_json()

    def test_post_slide_opposites_disjoint(self):
        slid = EigenrayDiagram((Ray((0, 1), (0, 1)), Ray((-1, 0), (1, 0))))
        atlas = ChartAtlas.from_diagram(slid)
        a = eigenray_polyline(atlas, Eigenray((-1, 0), -1))
        b = eigenray_polyline(atlas, Eigenray((0, 1), -1))
        assert polylines_meet(a, b) is None

    def test_opposite_eigenray_bends_across_cut(self):
        slid = EigenrayDiagram((Ray((0, 1), (0, 1)), Ray((-1, 0), (1, 0))))
        line = eigenray_polyline(ChartAtlas.from_diagram(slid), Eigenray((0, 1), -1))
        assert len(line) >= 3  # lead-in, then a bend at the crossing of y = 0
        assert line[-1][1][0] != 0

    def test_choices_on_single_ray(self):
        reps = eigenray_choices(EigenrayDiagram((Ray((0, 0), (1, 0)),)), 5)
        assert len(reps) == 2 and all(r.disjoint for r in reps)

    def test_cli(self, capsys, tmp_path):
        code, out, err = run(capsys, "fivecharts")
        assert code == 0 and json.loads(out)["tally"] == "3 direct + 2 after slides = 5"
        assert "blocked" in err and "(0, 0)" in err

    def test_cli_out(self, capsys, tmp_path):
        target = tmp_path / "five.json"
        code, out, _ = run(capsys, "fivecharts", "--out", target)
        assert code == 0 and out == ""
        assert json.loads(target.read_text())["ok"] is True


# ---------------------------------------------------------------- apply


class TestApply:
    def test_empty_script_round_trips(self, capsys, tmp_path, five):
        script = write(tmp_path, "s.json", [])
        out_path = tmp_path / "out.json"
        code, _, _ = run(capsys, "apply", five, script, "--out", out_path)
        assert code == 0
        assert out_path.read_text() == five_charts().dumps() + "\n"
        assert EigenrayDiagram.from_json(json.loads(out_path.read_text())) == five_charts()

    def test_slide_gives_expected_diagram(self, capsys, tmp_path, five):
        script = write(tmp_path, "s.json", {"commands": [{"op": "slide", "node": [1, 0], "to": [-1, 0]}]})
        out_path = tmp_path / "out.json"
        assert run(capsys, "apply", five, script, "--out", out_path)[0] == 0
        got = EigenrayDiagram.from_json(json.loads(out_path.read_text()))
        assert got == EigenrayDiagram((Ray((0, 1), (0, 1)), Ray((-1, 0), (1, 0))))

    def test_non_mutable_branch_is_transactional(self, capsys, tmp_path):
        d = EigenrayDiagram((Ray((0, 0), (1, 0), (Node((0, 0), 1), Node((2, 0), 1))),))
        src = write(tmp_path, "d.json", d.to_json())
        script = write(
            tmp_path,
            "s.json",
            [{"op": "slide", "node": [2, 0], "to": [3, 0]}, {"op": "branch", "node": [0, 0]}],
        )
        out_path = tmp_path / "out.json"
        code, out, err = run(capsys, "apply", src, script, "--out", out_path)
        assert code == 3 and out == ""
        payload = json.loads(err)
        assert payload["error"] == "precondition" and payload["command"] == 1
        assert not out_path.exists()
        assert json.loads((tmp_path / "d.json").read_text()) == d.to_json()

    def test_results_reported(self, capsys, tmp_path, five):
        script = write(
            tmp_path,
            "s.json",
            [
                {"op": "validate"},
                {"op": "exact"},
                {"op": "seed"},
                {"op": "trace", "start": [-1, -1], "dir": [0, 1], "budget": 5},
                {"op": "holonomy", "loop": [["1/2", "-1/2"], [3, "-1/2"], [3, "1/2"], ["1/2", "1/2"]]},
            ],
        )
        code, out, _ = run(capsys, "apply", five, script)
        assert code == 0
        res = {r["op"]: r["result"] for r in json.loads(out)["results"]}
        assert res["validate"] == {"valid": True}
        assert res["exact"] == {"exact": True, "point": ["0", "0"]}
        assert res["trace"]["status"] == "extended-to-budget"
        assert res["holonomy"]["trace"] == 2

    def test_remove_and_branch(self, capsys, tmp_path, five):
        script = write(tmp_path, "s.json", [{"op": "remove", "node": [0, 1]}, {"op": "branch", "node": [1, 0]}])
        code, out, _ = run(capsys, "apply", five, script)
        assert code == 0 and len(json.loads(out)["diagram"]["rays"]) == 1

    @pytest.mark.parametrize(
        "script",
        [
            [{"op": "fly"}],
            [{"op": "slide", "node": [1, 0]}],
            [{"op": "slide", "node": [1, "x"], "to": [0, 0]}],
            {"nope": 1},
            [{"op": "holonomy", "loop": "1,2"}],
        ],
    )
    def test_parse_errors(self, capsys, tmp_path, five, script):
        code, _, err = run(capsys, "apply", five, write(tmp_path, "s.json", script))
        assert code == 2 and json.loads(err)["error"] == "parse"

    def test_bad_json(self, capsys, tmp_path, five):
        code, _, err = run(capsys, "apply", five, write(tmp_path, "s.json", "[{"))
        assert code == 2

    def test_missing_file(self, capsys, tmp_path, five):
        code, _, err = run(capsys, "apply", five, tmp_path / "missing.json")
        assert code == 4 and json.loads(err)["error"] == "io"

    def test_unwritable_output(self, capsys, tmp_path, five):
        script = write(tmp_path, "s.json", [])
        code, _, _ = run(capsys, "apply", five, script, "--out", tmp_path / "no" / "dir" / "x.json")
        assert code == 4


# ---------------------------------------------------------------- render


class TestRender:
    def test_byte_identical(self, capsys, tmp_path, five):
        a, b = tmp_path / "a.svg", tmp_path / "b.svg"
        assert run(capsys, "render", five, "--out", a, "--geodesic", "1,-1;1,1")[0] == 0
        assert run(capsys, "render", five, "--out", b, "--geodesic", "1,-1;1,1")[0] == 0
        assert a.read_bytes() == b.read_bytes()

    def test_empty_diagram_axes_only(self):
        root = ElementTree.fromstring(render_svg(EigenrayDiagram()))
        assert root.findall(f".//{SVG}polygon") == [] and root.findall(f".//{SVG}text") == []
        assert len(root.findall(f".//{SVG}line")) == 2

    def test_five_charts_figure(self):
        root = ElementTree.fromstring(render_svg(five_charts()))
        labels = [t.text for t in root.findall(f".//{SVG}text")]
        assert labels == ["1", "1"]  # two crosses with multiplicity labels
        assert len(root.findall(f".//{SVG}polygon")) == 2  # two arrowheads

    def test_geodesic_overlay(self):
        g = trace_geodesic(ChartAtlas.from_diagram(five_charts()), (Fraction(3, 2), -1), (1, 1), 4)
        root = ElementTree.fromstring(render_svg(five_charts(), [g]))
        assert len(root.findall(f".//{SVG}polyline")) == 1

    def test_stdout(self, capsys, five):
        code, out, _ = run(capsys, "render", five)
        assert code == 0 and "<svg" in out and out.rstrip().endswith("</svg>")

    def test_bad_geodesic(self, capsys, five):
        assert run(capsys, "render", five, "--geodesic", "1,2")[0] == 2

    def test_geodesic_on_cut(self, capsys, five):
        assert run(capsys, "render", five, "--geodesic", "3,0;0,1")[0] == 3


# ---------------------------------------------------------------- other commands


class TestDiagramCommands:
    def test_validate_ok(self, capsys, five):
        code, out, _ = run(capsys, "validate", five)
        assert code == 0 and json.loads(out)["valid"] is True

    def test_validate_crossing(self, capsys, tmp_path):
        bad = {"rays": [
            {"base": ["0", "-1"], "dir": [0, 1], "nodes": [{"t": "0", "mult": 1}]},
            {"base": ["-1", "0"], "dir": [1, 0], "nodes": [{"t": "0", "mult": 1}]},
        ]}
        code, out, _ = run(capsys, "validate", write(tmp_path, "bad.json", bad))
        assert code == 1 and json.loads(out)["valid"] is False

    def test_malformed_diagram(self, capsys, tmp_path):
        code, _, err = run(capsys, "validate", write(tmp_path, "d.json", {"rays": [{"base": [0]}]}))
        assert code == 2

    def test_trace(self, capsys, tmp_path):
        path = write(tmp_path, "d.json", EigenrayDiagram((Ray((0, 0), (1, 0)),)).to_json())
        code, out, _ = run(capsys, "trace", path, "--start=1,-1", "--dir", "1,1", "--budget", "10")
        data = json.loads(out)
        assert code == 0 and data["crossings"][0]["point"] == ["2", "0"]

    def test_trace_from_node(self, capsys, five):
        assert run(capsys, "trace", five, "--start", "1,0", "--dir", "0,1")[0] == 3

    def test_trace_bad_point(self, capsys, five):
        assert run(capsys, "trace", five, "--start", "a,b", "--dir", "0,1")[0] == 2

    def test_holonomy(self, capsys, five):
        code, out, _ = run(capsys, "holonomy", five, "--loop", "1/2,-1/2;3,-1/2;3,1/2;1/2,1/2")
        data = json.loads(out)
        assert code == 0 and data["trace"] == 2 and data["linear"] != [[1, 0], [0, 1]]

    def test_holonomy_through_node(self, capsys, five):
        assert run(capsys, "holonomy", five, "--loop", "0,-1;2,1;0,1")[0] == 3

    def test_seed(self, capsys, five):
        code, out, _ = run(capsys, "seed", five)
        assert code == 0 and sorted(tuple(e["dir"]) for e in json.loads(out)) == [(0, 1), (1, 0)]

    def test_exact(self, capsys, five):
        code, out, _ = run(capsys, "exact", five)
        assert json.loads(out) == {"exact": True, "point": ["0", "0"]}


class TestAlgebraCommands:
    def test_torsion_module(self, capsys, tmp_path):
        mod = {"relations": [[[["2", "1"]], []]], "generators": 2}
        code, out, _ = run(capsys, "torsion", write(tmp_path, "m.json", mod), "--precision", "1")
        data = json.loads(out)
        assert code == 0 and data["max_torsion"] == "2"
        assert data["tor1"]["torsion"] == ["1"]
        assert data["truncation"]["torsion"] == ["1", "1"]

    def test_torsion_complex(self, capsys, tmp_path):
        cx = {"ranks": [1, 1], "differentials": [[[[["1", "1"]]]]]}
        code, out, _ = run(capsys, "torsion", write(tmp_path, "c.json", cx), "--precision", "2", "--degree", "0")
        data = json.loads(out)["homology"]["0"]
        assert code == 0 and data["uct_exact"] is True
        assert data["truncated_homology"]["torsion"] == ["1"]

    def test_torsion_free_module(self, capsys, tmp_path):
        code, out, _ = run(capsys, "torsion", write(tmp_path, "m.json", {"relations": [], "generators": 2}))
        assert json.loads(out)["max_torsion"] == "-inf"

    @pytest.mark.parametrize("bad", [{"foo": 1}, {"ranks": [1, 1], "differentials": [[[[["1", "1"]]]], [[1]]]}])
    def test_torsion_parse(self, capsys, tmp_path, bad):
        assert run(capsys, "torsion", write(tmp_path, "m.json", bad))[0] == 2

    def test_ksval(self, capsys, tmp_path):
        el = {"precision": "20", "terms": [{"char": [-1, 0], "coeff": [["0", "1"]]}]}
        code, out, _ = run(capsys, "ksval", write(tmp_path, "k.json", el), "--polygon", "0,0;1,0;1,1;0,1")
        assert code == 0 and json.loads(out)["val"] == "-1"

    def test_ksval_truncates(self, capsys, tmp_path):
        el = {"terms": [{"char": [1, 0], "coeff": [["0", "1"], ["5", "2"]]}]}
        code, out, _ = run(capsys, "ksval", write(tmp_path, "k.json", el), "--polygon", "0,0;1,0;0,1", "--precision", "3")
        assert json.loads(out)["truncated"]["terms"] == [{"char": [1, 0], "coeff": [["0", "1"]]}]

    def test_ksval_bad_polygon(self, capsys, tmp_path):
        el = {"terms": []}
        assert run(capsys, "ksval", write(tmp_path, "k.json", el), "--polygon", "0,0;1,1;2,2")[0] == 2

    def test_localcheck(self, capsys):
        code, out, _ = run(capsys, "localcheck", "hopf", "probe", "--seed-rng", "4")
        data = json.loads(out)
        assert code == 0 and set(data) == {"hopf", "probe"} and all(v["passed"] for v in data.values())

    def test_localcheck_unknown(self, capsys):
        assert run(capsys, "localcheck", "nonsense")[0] == 2
