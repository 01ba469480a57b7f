import io as stdio
import json
import os

import numpy as np
import pytest

from pseudospec import InputFormatError, MonicPolynomial, StructurePattern, StructureError, grid_pseudospectrum, track
from pseudospec import io
from pseudospec.cli import run
from pseudospec.pseudospectrum import GridRegion, connected_components

from helpers import jordan2


def _call(argv):
    out, err = stdio.StringIO(), stdio.StringIO()
    code = run(argv, stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


@pytest.fixture
def files(tmp_path):
    io.write_matrix(tmp_path / "j2.json", jordan2())
    io.write_matrix(tmp_path / "d05.json", np.diag([0.0, 5.0]))
    io.write_structure(tmp_path / "s21.json", StructurePattern(2, [(2, 1)]))
    io.write_structure(tmp_path / "s11.json", StructurePattern(2, [(1, 1)]))
    io.write_json(tmp_path / "z.json", {"z": [[1.0, 0.0]]})
    io.write_json(tmp_path / "p.json", io.polynomial_to_json(MonicPolynomial.from_roots([1, 1, -2])))
    return tmp_path


def test_matrix_round_trip(tmp_path):
    A = np.array([[1 + 2j, -3], [0.5j, 4]])
    io.write_matrix(tmp_path / "a.json", A)
    assert np.array_equal(io.read_matrix(tmp_path / "a.json"), A)
    obj = json.loads((tmp_path / "a.json").read_text())
    assert obj["n"] == 2 and obj["entries"][0] == [1.0, 2.0]


def test_matrix_length_mismatch():
    with pytest.raises(InputFormatError, match="expected n\\*n = 4"):
        io.parse_matrix({"n": 2, "entries": [[0, 0]] * 3})


@pytest.mark.parametrize("obj,msg", [
    ({"entries": []}, "missing field 'n'"),
    ({"n": 1, "entries": [[0]]}, "entries\\[0\\]"),
    ({"n": 1, "entries": [["a", 0]]}, "expected a number"),
    ([1, 2], "JSON object"),
])
def test_matrix_schema_errors(obj, msg):
    with pytest.raises(InputFormatError, match=msg):
        io.parse_matrix(obj)


def test_malformed_json_reports_line(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{"n": 2,\n "entries": [[0, 0],, ]}')
    with pytest.raises(InputFormatError, match="line 2"):
        io.read_matrix(p)


def test_structure_file_sorted_and_duplicates(tmp_path):
    S = io.parse_structure({"n": 3, "positions": [[3, 1], [1, 2]]})
    assert S.positions == [(1, 2), (3, 1)]
    with pytest.raises(StructureError):
        io.parse_structure({"n": 3, "positions": [[1, 2], [1, 2]]})
    io.write_structure(tmp_path / "s.json", S)
    assert io.read_structure(tmp_path / "s.json") == S


def test_polynomial_round_trip():
    f = MonicPolynomial([1, 2j])
    g = io.parse_polynomial(io.polynomial_to_json(f))
    assert isinstance(g, MonicPolynomial) and np.array_equal(g.a, f.a)
    h = io.parse_polynomial({"monic": False, "coeffs": [[0, 0], [2, 0], [1, 0]]})
    assert h.degree == 1
    with pytest.raises(InputFormatError):
        io.parse_polynomial({"coeffs": []})


def test_atomic_write_leaves_no_temp(tmp_path):
    io.atomic_write(tmp_path / "x.txt", "hello")
    assert sorted(os.listdir(tmp_path)) == ["x.txt"]


def _two_discs():
    return grid_pseudospectrum(np.diag([0.0, 5.0]), None, 1.0, box=(-2, 7, -2, 2), resolution=90)


def test_pgm_layout():
    r = _two_discs()
    data = io.pgm_bytes(r)
    header = b"P5\n90 90\n255\n"
    assert data.startswith(header)
    body = np.frombuffer(data[len(header):], dtype=np.uint8).reshape(90, 90)
    assert body.size == 90 * 90
    assert set(np.unique(body).tolist()) == {0, 128 + 63, 128 + 126}
    # top image row is the largest imaginary part
    assert np.array_equal(body[::-1].T > 0, r.inside)


def test_svg_paths():
    svg = io.svg_text(_two_discs())
    assert svg.count("<path ") == 2
    assert svg.startswith('<?xml version="1.0"') and 'version="1.1"' in svg
    empty = connected_components(GridRegion((0, 1, 0, 1), (20, 20), np.zeros((20, 20), bool), 0.1,
                                            "unstructured", None))
    assert io.svg_text(empty).count("<path ") == 0


def test_svg_trajectory_overlay():
    S = StructurePattern(2, [(2, 1)])
    region = grid_pseudospectrum(jordan2(), S, 1.5, resolution=61, samples=300)
    svg = io.svg_text(region, track(jordan2(), S, [1.0]))
    assert svg.count("<polyline") == 2


def test_cli_rootcount(files):
    code, out, _ = _call(["rootcount", "--poly", str(files / "p.json"), "--out", str(files)])
    assert code == 0
    rep = json.loads(out)
    assert rep["u"] == 2 and rep["N"] == [2, 1, 0] and rep["rho"] == [1, 1, 0]
    assert json.loads((files / "rootcount.json").read_text()) == rep


def test_cli_conserve_check(files):
    argv = ["conserve-check", "--matrix", str(files / "j2.json"), "--structure", str(files / "s21.json"),
            "--eps", "0.25", "--samples", "50", "--seed", "7", "--out", str(files), "--svg", "--pgm"]
    code, out, _ = _call(argv)
    rep = json.loads(out)
    assert code == 0 and rep["ok"] and rep["conserved"]
    assert len(rep["components"]) == 1 and rep["components"][0]["sums"] == [2]
    assert (files / "conserve-check.svg").exists() and (files / "conserve-check.pgm").exists()


def test_cli_missing_eps(files):
    code, out, err = _call(["conserve-check", "--matrix", str(files / "j2.json")])
    assert code == 2 and out == ""
    assert err.count("\n") == 1 and "--eps" in err


@pytest.mark.parametrize("argv", [
    [],
    ["nonsense"],
    ["pseudospectrum", "--eps", "abc"],
    ["pseudospectrum", "--matrix", "missing.json", "--eps", "1"],
    ["pseudospectrum", "--matrix", "MAT", "--eps", "-1"],
    ["pseudospectrum", "--matrix", "MAT", "--eps", "1", "--grid", "8"],
])
def test_cli_usage_errors(files, argv):
    argv = [str(files / "d05.json") if a == "MAT" else a for a in argv]
    code, _, err = _call(argv + ["--out", str(files)] if argv[:1] == ["pseudospectrum"] else argv)
    assert code == 2
    assert err.count("\n") == 1 and err.startswith("pseudospec: error:")


def test_cli_malformed_matrix(files):
    (files / "bad.json").write_text('{"n": 2, "entries": [[0, 0]]}')
    code, _, err = _call(["pseudospectrum", "--matrix", str(files / "bad.json"), "--eps", "1", "--out", str(files)])
    assert code == 2 and "entries" in err


def test_cli_local_check_exit_codes(files):
    io.write_matrix(files / "dp.json", np.diag([0.01, 5.02]))
    io.write_matrix(files / "far.json", np.diag([0.5, 5.0]))
    base = ["local-check", "--matrix", str(files / "d05.json"), "--out", str(files)]
    code, out, _ = _call(base + ["--matrix-prime", str(files / "dp.json"), "--eta", "1"])
    assert code == 0 and json.loads(out)["ball_sums"] == [1, 1]
    code, out, err = _call(base + ["--matrix-prime", str(files / "far.json"), "--eta", "0.2"])
    assert code == 3 and not json.loads(out)["passed"]
    assert not json.loads((files / "local-check.json").read_text())["passed"]
    code, _, _ = _call(base + ["--matrix-prime", str(files / "far.json"), "--eta", "3"])
    assert code == 2


def test_cli_conserve_check_violation_exit_3(files):
    # one ball sample and no refinement leave the region far too small:
    # perturbed eigenvalues land outside every component
    argv = ["conserve-check", "--matrix", str(files / "d05.json"), "--structure", str(files / "s11.json"),
            "--eps", "1", "--samples", "20", "--grid-samples", "1", "--no-refine", "--box", "-1.5", "6.5", "-2", "2",
            "--grid", "200", "--out", str(files)]
    code, out, err = _call(argv)
    rep = json.loads(out)
    assert code == 3 and not rep["ok"] and rep["coverage_violations"]
    assert "invariant violated" in err
    assert json.loads((files / "conserve-check.json").read_text()) == rep


def test_cli_pseudospectrum_and_components(files):
    argv = ["--matrix", str(files / "d05.json"), "--eps", "1", "--grid", "101", "--out", str(files)]
    code, out, _ = _call(["pseudospectrum"] + argv + ["--pgm"])
    rep = json.loads(out)
    assert code == 0 and rep["region"]["component_count"] == 2
    assert rep["files"] == {"pgm": "pseudospectrum.pgm"}
    code, out, _ = _call(["components"] + argv)
    rows = json.loads(out)["eigenvalues"]
    assert [r["component"] for r in rows] == [1, 2]


def test_cli_track_and_bifurcations(files):
    common = ["--matrix", str(files / "j2.json"), "--structure", str(files / "s21.json"),
              "--z", str(files / "z.json"), "--out", str(files)]
    code, out, _ = _call(["track"] + common + ["--eps", "1.5", "--svg", "--grid", "61"])
    rep = json.loads(out)
    assert code == 0 and rep["constancy"]["ok"]
    assert sorted(p[0] for p in rep["endpoints"]) == pytest.approx([-1, 1])
    assert (files / "track.svg").read_text().count("<polyline") == 2
    code, out, _ = _call(["bifurcations"] + common)
    rep = json.loads(out)
    assert code == 0 and rep["candidates"] == [0.0]
    assert rep["refined"][0]["found"] and abs(rep["refined"][0]["t_star"]) <= 1e-6


def test_cli_distance_bound(files):
    code, out, _ = _call(["distance-bound", "--matrix", str(files / "d05.json"), "--k", "1", "--out", str(files)])
    rep = json.loads(out)
    assert code == 0 and rep["inequality_ok"]
    assert abs(rep["eps_star"] - 2.5) <= 0.05 and rep["witness_distance"] == pytest.approx(2.5)
    assert set(rep) >= {"eps_star", "bracket", "witness_distance", "inequality_ok"}


def test_cli_deterministic_bytes(files, tmp_path_factory):
    outs = []
    for _ in range(2):
        d = tmp_path_factory.mktemp("run")
        argv = ["pseudospectrum", "--matrix", str(files / "j2.json"), "--structure", str(files / "s21.json"),
                "--eps", "0.25", "--grid", "61", "--samples", "300", "--out", str(d), "--svg", "--pgm"]
        assert _call(argv)[0] == 0
        outs.append([(d / f).read_bytes() for f in ("pseudospectrum.json", "pseudospectrum.svg", "pseudospectrum.pgm")])
    assert outs[0] == outs[1]


def test_reports_reparse(files):
    for name in ("pseudospectrum", "conserve-check"):
        argv = [name, "--matrix", str(files / "j2.json"), "--structure", str(files / "s21.json"),
                "--eps", "0.25", "--grid", "41", "--out", str(files)]
        if name == "pseudospectrum":
            argv += ["--samples", "100"]
        _call(argv)
        rep = json.loads((files / f"{name}.json").read_text())
        reg = rep["region"]
        assert set(reg) >= {"box", "resolution", "epsilon", "component_count", "components"}
        assert len(reg["components"]) == reg["component_count"]
