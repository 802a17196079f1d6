from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path
from typing import List, Literal, Optional, Sequence

from dotenv import load_dotenv
from pydantic import BaseModel, Field, ValidationError, field_validator

# Robust import so this file works both as a module and as a script
_root = Path(__file__).resolve().parent.parent
if str(_root) not in sys.path:
    sys.path.append(str(_root))

from combs.comb_calculus import CombError, as_fraction, fraction_str  # noqa: E402
from combs.theta_space import Theta  # noqa: E402
from dynamics.classical_cover import escape_check, exact_point, orbit  # noqa: E402
from dynamics.propagator import eigenphases, matrix_F, matrix_vs_comb_check  # noqa: E402
from harness import acceptance, reports  # noqa: E402
from harness.invariance_scan import (  # noqa: E402
    DEFAULT_SCAN_TOL,
    grid_thetas,
    scan_theta,
    summarize,
    theorem_verdict,
)

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2

DEFAULT_OUTPUT_DIR = "data/reports"


def get_env(key: str, default: str) -> str:
    return os.environ.get(key, default)


def parse_n_range(text: str) -> List[int]:
    """"4" -> [4]; "1..8" -> [1, ..., 8]; "2,4,6" -> [2, 4, 6]."""
    text = text.strip()
    try:
        if ".." in text:
            lo, hi = (int(v) for v in text.split("..", 1))
            values = list(range(lo, hi + 1))
        else:
            values = [int(v) for v in text.split(",")]
    except ValueError as e:
        raise CombError(f"cannot parse N range {text!r}") from e
    if not values:
        raise CombError(f"empty N range {text!r}")
    return values


class RunConfig(BaseModel):
    command: Literal["scan", "matrix", "classical", "verify"]
    n_values: List[int] = []
    thetas: List[Theta] = []
    tol: float = Field(default=DEFAULT_SCAN_TOL, gt=0, lt=1)
    output: Path
    format: Literal["json", "csv"] = "json"
    workers: int = Field(default=1, ge=1)

    @field_validator("n_values")
    @classmethod
    def _positive(cls, v: List[int]) -> List[int]:
        if any(n < 1 for n in v):
            raise ValueError("N must be >= 1")
        return v


def _output_dir(args: argparse.Namespace) -> Path:
    return Path(args.output or get_env("BAKERLAB_OUTPUT_DIR", DEFAULT_OUTPUT_DIR))


# ---- Commands ----
def cmd_scan(args: argparse.Namespace) -> int:
    thetas = [Theta.parse(t) for t in args.theta or []]
    if args.theta_denom or not thetas:
        thetas = grid_thetas(args.theta_denom or 8, extra=thetas)
    config = RunConfig(
        command="scan",
        n_values=parse_n_range(args.n),
        thetas=thetas,
        tol=args.tol,
        output=_output_dir(args),
        format=args.format,
        workers=args.workers,
    )
    print(f"Scanning N={config.n_values} over {len(config.thetas)} theta points (tol={config.tol:g})")
    records = scan_theta(config.n_values, config.thetas, tol=config.tol, workers=config.workers, progress=args.progress)
    verdict = theorem_verdict(records)
    summaries = summarize(records)

    if config.format == "json":
        reports.write_scan_jsonl(records, config.output / "scan_records.jsonl")
    else:
        reports.write_scan_csv(summaries, config.output / "scan_summary.csv")
    reports.write_model(verdict, config.output / "scan_verdict.json")

    for s in summaries:
        if len(summaries) <= 16 or s.invariant:
            status = "invariant" if s.invariant else "not invariant"
            print(f"  N={s.N} theta=({s.theta.label}) {status} max_rx={s.max_rx:.3e} max_ry={s.max_ry:.3e}")
    for v in verdict.violations:
        print(f"  violation: N={v.N} theta=({v.theta.label}) {v.kind} rx={v.max_rx:.3e} ry={v.max_ry:.3e}")
    print(f"Verdict: {verdict.label} ({verdict.scanned_pairs} pairs, outputs in {config.output})")
    return EXIT_OK if verdict.passed else EXIT_FAIL


def cmd_matrix(args: argparse.Namespace) -> int:
    config = RunConfig(command="matrix", n_values=parse_n_range(args.n), output=_output_dir(args), format=args.format)
    status = EXIT_OK
    for N in config.n_values:
        if N % 2:
            print(f"N must be even for the matrix form (got N={N})", file=sys.stderr)
            return EXIT_USAGE
        m = matrix_F(N)
        phases = eigenphases(m)
        payload = {"N": N, "unitarity_deviation": m.unitarity_deviation()}
        if config.format == "csv":
            reports.write_matrix_csv(m.entries, config.output / f"matrix_N{N}.csv")
            reports.write_eigenphases_csv(phases, config.output / f"eigenphases_N{N}.csv")
        else:
            payload.update({"matrix": reports.matrix_payload(m.entries), "eigenphases": phases})
        print(f"N={N}: unitarity deviation {m.unitarity_deviation():.3e}")
        if args.check:
            check = matrix_vs_comb_check(N)
            payload.update({"matrix_vs_comb": check.deviation, "fitted_phase": check.phase})
            print(f"N={N}: matrix vs comb deviation {check.deviation:.3e} (fitted phase {check.phase:+.3e})")
            if check.deviation >= 1e-8 or m.unitarity_deviation() >= 1e-12:
                status = EXIT_FAIL
        reports.write_json(payload, config.output / f"matrix_N{N}.json")
    return status


def cmd_classical(args: argparse.Namespace) -> int:
    config = RunConfig(command="classical", output=_output_dir(args))
    if not args.escape and not args.orbit:
        print("classical needs --escape and/or --orbit", file=sys.stderr)
        return EXIT_USAGE
    if args.escape:
        theta2 = as_fraction(args.theta2)
        for N in parse_n_range(args.n):
            report = escape_check(N, theta2, range(-args.k_max, args.k_max + 1))
            reports.write_model(report, config.output / f"escape_N{N}_theta2_{theta2.numerator}-{theta2.denominator}.json")
            print(f"N={N} theta2={fraction_str(theta2)}: escaped fraction {report.fraction:g} (all n: {report.overall:g})")
    if args.orbit:
        parts = args.orbit.split(",")
        if len(parts) != 2:
            raise CombError(f"orbit start must look like 'x,p', got {args.orbit!r}")
        rows = orbit(exact_point(parts[0], parts[1]), args.steps, exact=not args.float)
        path = reports.write_orbit_csv(rows, config.output / "orbit.csv")
        print(f"Wrote {len(rows)} orbit rows to {path}")
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    output = _output_dir(args)
    results = acceptance.run_all(workers=args.workers, progress=args.progress, max_denom=args.theta_denom or 8)
    print("Acceptance summary")
    print("-" * 60)
    for r in results:
        mark = "PASS" if r.passed else "FAIL"
        print(f"[{mark}] {r.name:<28} value={r.value:.3e} {r.detail}")
    passed = all(r.passed for r in results)
    reports.write_json({"passed": passed, "checks": [r.model_dump() for r in results]}, output / "verify.json")
    print("-" * 60)
    print("ALL PASS" if passed else "FAILURES PRESENT")
    return EXIT_OK if passed else EXIT_FAIL


COMMANDS = {"scan": cmd_scan, "matrix": cmd_matrix, "classical": cmd_classical, "verify": cmd_verify}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bakerlab", description="Quantum baker's map invariance lab.")
    parser.add_argument("--output", type=str, default=None, help="Output directory (overrides BAKERLAB_OUTPUT_DIR)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("scan", help="Scan the theta-torus for invariant fibers")
    p.add_argument("--n", type=str, default="1..8", help='N value or range, e.g. "4" or "1..8"')
    p.add_argument("--theta", action="append", help='Theta point "p/q,p/q" (repeatable)')
    p.add_argument("--theta-denom", type=int, default=None, help="Add all theta with denominators <= this")
    p.add_argument("--tol", type=float, default=DEFAULT_SCAN_TOL, help="Invariance tolerance")
    p.add_argument("--format", choices=["json", "csv"], default="json", help="Record format")
    p.add_argument("--workers", type=int, default=1, help="Worker processes")
    p.add_argument("--progress", action="store_true", help="Show a progress bar")

    p = sub.add_parser("matrix", help="Build the periodic-fiber matrix form of F")
    p.add_argument("--n", type=str, required=True, help="Even N (or range)")
    p.add_argument("--check", action="store_true", help="Cross-check against the comb pipeline")
    p.add_argument("--format", choices=["json", "csv"], default="csv",
                   help="csv: matrix and eigenphase CSV files; json: both embedded in matrix_N<N>.json")

    p = sub.add_parser("classical", help="Classical covering dynamics")
    p.add_argument("--escape", action="store_true", help="Run the momentum-center escape check")
    p.add_argument("--n", type=str, default="2", help="N value or range for --escape")
    p.add_argument("--theta2", type=str, default="1/2", help="theta2 as p/q")
    p.add_argument("--k-max", type=int, default=4, help="Use k in [-k_max, k_max]")
    p.add_argument("--orbit", type=str, default=None, help='Start point "x,p" as rationals')
    p.add_argument("--steps", type=int, default=10, help="Orbit length")
    p.add_argument("--float", action="store_true", help="Iterate the orbit in floating point")

    p = sub.add_parser("verify", help="Run the acceptance suite")
    p.add_argument("--workers", type=int, default=None, help="Worker processes for the theorem scan (default: all CPUs)")
    p.add_argument("--theta-denom", type=int, default=8, help="Theta grid denominator bound")
    p.add_argument("--progress", action="store_true", help="Show a progress bar")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        code = COMMANDS[args.command](args)
    except (CombError, ValidationError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        code = EXIT_USAGE
    try:
        reports.append_run_log({"command": args.command, "argv": list(argv or sys.argv[1:]), "exit_code": code},
                               _output_dir(args))
    except OSError:
        pass
    return code


if __name__ == "__main__":
    load_dotenv()
    sys.exit(main())
