from __future__ import annotations

import csv
import json
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, Iterable, List, Sequence

import numpy as np
from pydantic import BaseModel

from combs.comb_calculus import fraction_str
from dynamics.classical_cover import OrbitRow
from harness.invariance_scan import PairSummary, ScanRecord

SCHEMA = "bakerlab/1"
RUN_LOG = "runs.log"


def _prepare(path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def _cell(value: Any) -> str:
    if isinstance(value, complex):
        return f"{value.real!r},{value.imag!r}"
    return str(value)


def with_schema(payload: Dict[str, Any]) -> Dict[str, Any]:
    return {"schema": SCHEMA, **payload}


def write_json(payload: Dict[str, Any], path: Path) -> Path:
    _prepare(path).write_text(json.dumps(with_schema(payload), indent=2, sort_keys=True) + "\n")
    return path


def write_model(model: BaseModel, path: Path) -> Path:
    return write_json(model.model_dump(mode="json"), path)


def write_scan_jsonl(records: Iterable[ScanRecord], path: Path) -> Path:
    with _prepare(path).open("w") as f:
        for r in records:
            f.write(json.dumps(with_schema(r.model_dump(mode="json")), sort_keys=True) + "\n")
    return path


def read_scan_jsonl(path: Path) -> List[ScanRecord]:
    records: List[ScanRecord] = []
    with path.open() as f:
        for line in f:
            if line.strip():
                payload = json.loads(line)
                payload.pop("schema", None)
                records.append(ScanRecord.model_validate(payload))
    return records


def write_scan_csv(summaries: Sequence[PairSummary], path: Path) -> Path:
    with _prepare(path).open("w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["N", "theta1", "theta2", "max_rx", "max_ry", "invariant"])
        for s in summaries:
            writer.writerow([
                s.N,
                fraction_str(s.theta.theta1),
                fraction_str(s.theta.theta2),
                repr(s.max_rx),
                repr(s.max_ry),
                str(s.invariant).lower(),
            ])
    return path


def write_matrix_csv(matrix: np.ndarray, path: Path) -> Path:
    """Row-major; each cell holds "re,im"."""
    with _prepare(path).open("w", newline="") as f:
        writer = csv.writer(f)
        for row in matrix:
            writer.writerow([_cell(complex(v)) for v in row])
    return path


def read_matrix_csv(path: Path) -> np.ndarray:
    rows: List[List[complex]] = []
    with path.open(newline="") as f:
        for row in csv.reader(f):
            rows.append([complex(*(float(part) for part in cell.split(","))) for cell in row])
    return np.array(rows, dtype=complex)


def matrix_payload(matrix: np.ndarray) -> Dict[str, Any]:
    return {
        "dim": int(matrix.shape[0]),
        "re": matrix.real.tolist(),
        "im": matrix.imag.tolist(),
    }


def write_eigenphases_csv(phases: Sequence[float], path: Path) -> Path:
    with _prepare(path).open("w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["index", "eigenphase"])
        for i, a in enumerate(phases):
            writer.writerow([i, repr(a)])
    return path


def write_orbit_csv(rows: Sequence[OrbitRow], path: Path) -> Path:
    with _prepare(path).open("w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["step", "x", "p", "region"])
        for r in rows:
            writer.writerow([r.step, _coord(r.x), _coord(r.p), r.region])
    return path


def _coord(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return fraction_str(value)


def append_run_log(entry: Dict[str, Any], output_dir: Path) -> None:
    entry = with_schema(entry)
    entry["ts"] = datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%S.%fZ")
    with _prepare(output_dir / RUN_LOG).open("a") as f:
        f.write(json.dumps(entry, default=str) + "\n")
