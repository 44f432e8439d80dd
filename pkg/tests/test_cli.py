import csv
import json
import subprocess
import sys

import pytest

from shiftcover.approximator import ApproxCertificate
from shiftcover.cli import dumps, main
from shiftcover.covering import CoveringPlan, NonexistenceCertificate, recheck_certificate, verify_covering

LIN = '{"kind": "linear", "params": {"c": 1, "d": 0}, "horizon": 100000}'
GEO = '{"kind": "geometric", "params": {"b": 2}, "horizon": 60}'


def run(tmp_path, *argv, name="out"):
    out = tmp_path / name
    code = main([*argv, "--out", str(out)])
    return code, out


def read(path):
    return json.loads(path.read_text())


def test_cover_example(tmp_path):
    code, out = run(tmp_path, "cover", "--seq", LIN, "--interval", "2,4", "--epsilon", "0.5", "--start", "1")
    assert code == 0
    data = read(out / "plan.json")
    assert data["schema"] == "shiftcover/v1"
    assert data["plan"]["block_count"] == 3
    with open(out / "grid.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["lambda", "block", "error"] and len(rows) == 10_001
    # the emitted plan re-parses and re-verifies to the same status
    plan = CoveringPlan.from_dict(data["plan"])
    assert verify_covering(plan, 10_000).passed == data["grid"]["passed"]
    manifest = read(out / "manifest.json")
    assert manifest["command"] == "cover" and "timestamp" in manifest and "numpy" in manifest["versions"]


@pytest.mark.parametrize(
    "argv, code",
    [
        (["cover", "--seq", LIN, "--interval", "2,4", "--epsilon", "1.5"], 2),
        (["cover", "--seq", '{"kind": "linear", "params": {}}', "--interval", "2,4", "--epsilon", "0.5"], 2),
        (["cover", "--seq", GEO, "--interval", "2,4", "--epsilon", "0.5", "--start", "1"], 4),
        (["nonexist", "--seq", LIN, "--interval", "2,3"], 3),
        (["nonexist", "--seq", '{"kind": ', "--interval", "2,3"], 2),
        (["nonexist", "--seq", GEO, "--interval", "2,3", "--samples", "3"], 2),
        (["weyl", "--seq", LIN, "--theta", "0", "--N", "-1"], 2),
        (["cover", "--bogus"], 2),
    ],
)
def test_exit_codes(tmp_path, argv, code):
    got, out = run(tmp_path, *argv)
    assert got == code
    if code not in (0, 2) or (out / "error.json").exists():
        err = read(out / "error.json")
        assert err["exit_code"] == code and "message" in err


def test_nonexist_certificate(tmp_path):
    code, out = run(tmp_path, "nonexist", "--seq", GEO, "--interval", "2,3", "--samples", "10", "--seed", "5")
    assert code == 0
    data = read(out / "nonexistence.json")
    cert = NonexistenceCertificate.from_dict(data["certificate"])
    assert cert.valid and recheck_certificate(cert)
    assert data["coverage"]["within_bound"] and data["coverage"]["seed"] == 5


def test_construct_round_trip(tmp_path):
    code, out = run(
        tmp_path, "construct", "--seq", LIN, "--interval", "1.5,1.52",
        "--target", "[[1, 1, 0]]", "--center", "[[1, 0.001, 0]]", "--accuracy", "1/10",
    )
    assert code == 0
    data = read(out / "certificate.json")
    cert = ApproxCertificate.from_dict(data)
    assert cert.passed == data["grid_report"]["passed"] is True
    with open(out / "grid.csv") as fh:
        assert next(csv.reader(fh)) == ["lambda", "best_v", "error"]


def test_construct_infeasible_interval_is_exit_4(tmp_path):
    code, out = run(
        tmp_path, "construct", "--seq", GEO, "--interval", "1.5,2.5", "--target", "[[1, 1, 0]]",
    )
    assert code == 4
    assert read(out / "error.json")["error"] == "InsufficientHorizon"


def test_common_with_no_conditions(tmp_path):
    code, out = run(tmp_path, "common", "--seq", LIN, "--initial", "[[2, 0.5, 0.25]]")
    assert code == 0
    assert read(out / "common.json")["vector"] == [[2, 0.5, 0.25]]


def test_common_and_joint(tmp_path):
    conds = [
        {"target": [[1, 1, 0]], "interval": [2, 3], "accuracy": 0.2},
        {"target": [[2, 1, 0]], "interval": [2, 3], "accuracy": 0.2},
    ]
    cfile = tmp_path / "conds.json"
    cfile.write_text(json.dumps(conds))
    seq = '{"kind": "linear", "params": {}, "horizon": 3000}'
    code, out = run(tmp_path, "common", "--seq", seq, "--conditions", f"@{cfile}", "--stage-growth", "1.5")
    assert code == 0
    common = out / "common.json"
    code, out2 = run(
        tmp_path, "joint", "--seq", seq, "--vector", str(common),
        "--vector-targets", "[[[1, 1, 0]], [[2, 1, 0]]]", "--theta", "0.6180339887498949",
        "--phases", "2", "--s", "1", name="joint",
    )
    data = read(out2 / "joint.json")
    assert code == (0 if data["passed"] else 1)
    assert len(data["pairs"]) == 4


def test_weyl(tmp_path):
    code, out = run(tmp_path, "weyl", "--seq", LIN, "--theta", "0", "--N", "100", "--targets", "2")
    assert code == 0
    data = read(out / "weyl.json")
    assert data["discrepancy"]["star_discrepancy"] == 1
    assert data["circle"]["witnesses"] == [1, None]
    with open(out / "discrepancy.csv") as fh:
        assert next(csv.reader(fh)) == ["N", "star_discrepancy"]


def test_artifacts_are_byte_identical(tmp_path):
    argv = ["nonexist", "--seq", GEO, "--interval", "2,3", "--samples", "5", "--seed", "1"]
    _, a = run(tmp_path, *argv, name="a")
    _, b = run(tmp_path, *argv, name="b")
    assert (a / "nonexistence.json").read_bytes() == (b / "nonexistence.json").read_bytes()


def test_float_formatting():
    assert dumps(0.1) == "0.10000000000000001"
    assert dumps({"x": [float("inf"), 1.5, True, None]}) == '{\n  "x": [Infinity, 1.5, true, null]\n}'
    assert json.loads(dumps({"v": 1 / 3}))["v"] == 1 / 3


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "shiftcover", "weyl", "--seq", LIN, "--theta", "0.5", "--N", "2",
         "--out", str(tmp_path)],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["star_discrepancy"] == 0.5
