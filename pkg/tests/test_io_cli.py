import json
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from simpoints import asymmetric_profile, convex_hull
from simpoints.cli import main, sub_seed
from simpoints.errors import ParseError
from simpoints.io import dump_body, dumps_body, load_body, parse_body, polygon_loop, polyline_csv

SQUARE = [[0, 0], [1, 0], [1, 1], [0, 1]]


def write(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


@pytest.fixture
def square_file(tmp_path):
    return write(tmp_path / "square.json", {"dim": 2, "vertices": SQUARE})


def test_load_square_and_redundant_point(tmp_path, square_file):
    assert len(load_body(square_file).vertices) == 4
    five = write(tmp_path / "five.json", {"dim": 2, "vertices": SQUARE + [[0.5, 0.5]]})
    assert len(load_body(five).vertices) == 4


def test_parse_errors_name_the_problem(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"dim": 2,\n "vertices": [[0, 0], ]}')
    with pytest.raises(ParseError, match="line 2"):
        load_body(bad)
    with pytest.raises(ParseError, match="vertices"):
        parse_body({"dim": 2})
    with pytest.raises(ParseError, match=r"vertices\[1\]"):
        parse_body({"dim": 2, "vertices": [[0, 0], [1], [0, 1]]})
    with pytest.raises(ParseError, match="dim"):
        parse_body({"dim": "2", "vertices": []})
    with pytest.raises(ParseError):
        load_body(tmp_path / "missing.json")


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31), st.integers(2, 3))
def test_body_json_round_trip(seed, n):
    rng = np.random.default_rng(seed)
    body = convex_hull(rng.standard_normal((9, n)))
    text = dumps_body(body)
    data = json.loads(text)
    assert data["vertices"] == sorted(data["vertices"])
    again = parse_body(data)
    assert again == body or sorted(again.vertices.tolist()) == sorted(body.vertices.tolist())
    assert dumps_body(again) == text


def test_polyline_csv_format():
    loop = polygon_loop(convex_hull(SQUARE))
    assert np.array_equal(loop[0], loop[-1]) and len(loop) == 5
    text = polyline_csv([loop, loop])
    lines = text.splitlines()
    assert lines[0] == "x,y"
    assert lines.count("") == 1
    x, y = loop[:-1].T - 0.5
    assert np.all(np.diff(np.unwrap(np.arctan2(y, x))) > 0)


def test_sub_seed_depends_on_name():
    assert sub_seed(0, "compute") != sub_seed(0, "blend")
    assert sub_seed(3, "blend") == sub_seed(3, "blend")


def test_compute_centroid(square_file, capsys):
    assert main(["compute", "--functional", "centroid", "--body", square_file]) == 0
    assert json.loads(capsys.readouterr().out)["point"] == [0.5, 0.5]


def test_malformed_input_exits_2(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{nope")
    assert main(["compute", "--body", str(bad)]) == 2
    err = json.loads(capsys.readouterr().err)
    assert err["error"]["code"] == "ParseError"
    flat = write(tmp_path / "flat.json", {"dim": 2, "vertices": [[0, 0], [1, 1], [2, 2]]})
    assert main(["compute", "--body", flat]) == 2
    assert json.loads(capsys.readouterr().err)["error"]["code"] == "DegenerateInput"


def test_nonpositive_tolerance_rejected(square_file, capsys):
    assert main(["test-equivariance", "--bodies", square_file, "--tol", "0"]) == 2


def test_equivariance_battery(tmp_path, capsys):
    d = tmp_path / "bodies"
    d.mkdir()
    rng = np.random.default_rng(0)
    for i in range(3):
        dump_body(convex_hull(rng.standard_normal((8, 2))), d / f"b{i}.json")
    out = tmp_path / "res.csv"
    code = main(["test-equivariance", "--functional", "mvee", "--bodies", str(d), "--maps", "50",
                 "--seed", "3", "--tol", "1e-5", "--out", str(out)])
    assert code == 0
    rows = out.read_text().splitlines()
    assert rows[0] == "body_id,map_id,residual,membership" and len(rows) == 151
    summary = json.loads(capsys.readouterr().err)
    assert summary["passed"] and summary["count"] == 150


def test_equivariance_failure_exits_1(square_file, capsys):
    # iterative MVEE residuals sit well above 1e-30
    code = main(["test-equivariance", "--functional", "mvee", "--bodies", square_file, "--maps", "3", "--tol", "1e-30"])
    summary = json.loads(capsys.readouterr().err)
    assert code == 1 and not summary["passed"] and summary["max_residual"] > 1e-30


def test_suspend_and_plot(tmp_path, capsys):
    base = tmp_path / "tri.json"
    dump_body(convex_hull([[0, 0], [4, 0], [1, 2.5]]), base)
    plot = tmp_path / "slices.csv"
    assert main(["suspend", "--body", str(base), "--plot", str(plot)]) == 0
    body = json.loads(capsys.readouterr().out)
    assert body["dim"] == 3 and len(body["vertices"]) == 5
    assert plot.read_text().count("\n\n") == 6


def test_blend_command(tmp_path, capsys):
    anchor = tmp_path / "tri.json"
    dump_body(convex_hull([[0, 0], [4, 0], [1, 2.5]]), anchor)
    spec_out = tmp_path / "spec.json"
    assert main(["blend", "--anchor", str(anchor), "--target", "1.6,0.8", "--spec-out", str(spec_out)]) == 0
    res = json.loads(capsys.readouterr().out)
    assert np.allclose(res["results"][0]["point"], [1.6, 0.8], atol=1e-6)
    assert json.loads(spec_out.read_text())["mode"] == "hard"


def test_verify_suspension_fails_on_square(square_file, capsys):
    assert main(["verify-suspension", "--base", square_file, "--grid", "2"]) == 1
    report = json.loads(capsys.readouterr().out)
    assert report["error"]["clause"] == "i"


def test_verify_suspension_passes(tmp_path, capsys):
    base = tmp_path / "profile.json"
    dump_body(asymmetric_profile(64, 7), base)
    assert main(["verify-suspension", "--base", str(base), "--grid", "2"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["group_order"] == 2 and report["fixed_dim"] == 2 and report["passed"]


def test_console_entry_point(square_file):
    res = subprocess.run([sys.executable, "-m", "simpoints.cli", "compute", "--body", square_file],
                         capture_output=True, text=True, check=False)
    assert res.returncode == 0
    assert json.loads(res.stdout)["point"] == [0.5, 0.5]
