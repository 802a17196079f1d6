import csv
import json

import numpy as np

from combs.theta_space import Theta
from dynamics.classical_cover import escape_check, exact_point, orbit
from dynamics.propagator import eigenphases, matrix_F
from harness import reports
from harness.invariance_scan import ScanRecord, summarize, theorem_verdict


def _records():
    return [
        ScanRecord(N=2, theta=Theta.of(0, 0), m=0, rx=0.0, ry=0.0, doubling=0.0, tol=1e-8, invariant=True),
        ScanRecord(N=2, theta=Theta.of(0, 0), m=1, rx=1e-12, ry=0.0, doubling=0.0, tol=1e-8, invariant=True),
        ScanRecord(N=3, theta=Theta.of("1/2", "1/3"), m=0, rx=2.0, ry=0.7, tol=1e-8, invariant=False),
    ]


def test_scan_jsonl_is_stamped_and_readable(tmp_path):
    path = reports.write_scan_jsonl(_records(), tmp_path / "out" / "scan.jsonl")
    lines = path.read_text().splitlines()
    assert len(lines) == 3
    first = json.loads(lines[0])
    assert first["schema"] == reports.SCHEMA
    assert first["theta"] == {"theta1": "0/1", "theta2": "0/1"}
    assert reports.read_scan_jsonl(path) == _records()


def test_scan_csv(tmp_path):
    path = reports.write_scan_csv(summarize(_records()), tmp_path / "scan.csv")
    with path.open() as f:
        rows = list(csv.reader(f))
    assert rows[0] == ["N", "theta1", "theta2", "max_rx", "max_ry", "invariant"]
    assert rows[1][:3] == ["2", "0/1", "0/1"] and rows[1][-1] == "true"
    assert rows[2][:3] == ["3", "1/2", "1/3"] and rows[2][-1] == "false"


def test_verdict_json(tmp_path):
    path = reports.write_model(theorem_verdict(_records()), tmp_path / "verdict.json")
    payload = json.loads(path.read_text())
    assert payload["schema"] == "bakerlab/1"
    assert payload["passed"] is True


def test_matrix_csv_round_trip(tmp_path):
    m = matrix_F(4).entries
    path = reports.write_matrix_csv(m, tmp_path / "m.csv")
    np.testing.assert_array_equal(reports.read_matrix_csv(path), m)
    payload = reports.matrix_payload(m)
    assert payload["dim"] == 4 and len(payload["re"]) == 4
    phases = reports.write_eigenphases_csv(eigenphases(matrix_F(4)), tmp_path / "e.csv")
    assert phases.read_text().splitlines()[0] == "index,eigenphase"


def test_orbit_and_escape_outputs(tmp_path):
    path = reports.write_orbit_csv(orbit(exact_point("1/3", "1/5"), 2), tmp_path / "orbit.csv")
    assert path.read_text().splitlines() == ["step,x,p,region", "1,2/3,1/10,r&e_p", "2,1/3,11/20,l&e_p"]
    floats = reports.write_orbit_csv(orbit(exact_point("1/4", 0), 1, exact=False), tmp_path / "f.csv")
    assert floats.read_text().splitlines()[1] == "1,0.5,0.0,r&e_p"
    esc = json.loads(reports.write_model(escape_check(2, "1/2"), tmp_path / "esc.json").read_text())
    assert esc["theta2"] == "1/2" and esc["per_n"]["0"] == 1.0


def test_run_log_appends(tmp_path):
    reports.append_run_log({"command": "scan", "exit_code": 0}, tmp_path)
    reports.append_run_log({"command": "matrix", "exit_code": 2}, tmp_path)
    lines = [json.loads(x) for x in (tmp_path / reports.RUN_LOG).read_text().splitlines()]
    assert [e["command"] for e in lines] == ["scan", "matrix"]
    assert all(e["ts"].endswith("Z") and e["schema"] == reports.SCHEMA for e in lines)
