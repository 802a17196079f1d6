"""Sweeps (N, theta) and checks which fibers the propagator maps onto themselves."""
from __future__ import annotations

import warnings
from collections import OrderedDict
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator
from tqdm import tqdm
from tqdm.contrib.concurrent import process_map

from combs.comb_calculus import (
    DEFAULT_AMP_EPSILON,
    DEFAULT_KERNEL_TOL,
    ModelParams,
    ZeroStateError,
    norm,
    scale,
    subtract,
    turns_phase,
    x_center,
)
from combs.theta_space import Theta, position_basis, xy_residual
from dynamics.propagator import apply_F

DEFAULT_SCAN_TOL = 1e-8
DEFAULT_THETA_DENOM = 8
LOST_IMAGE_RESIDUAL = 1.0


class ScanRecord(BaseModel):
    model_config = ConfigDict(frozen=True)

    N: int = Field(ge=1)
    theta: Theta
    m: int = Field(ge=0)
    rx: float = Field(ge=0)
    ry: float = Field(ge=0)
    doubling: Optional[float] = None
    tol: float = Field(gt=0, lt=1)
    invariant: bool

    @model_validator(mode="after")
    def _verdict_matches(self) -> "ScanRecord":
        if self.invariant != (max(self.rx, self.ry) < self.tol):
            raise ValueError("invariant flag must equal max(rx, ry) < tol")
        return self


class PairSummary(BaseModel):
    N: int
    theta: Theta
    max_rx: float
    max_ry: float
    max_doubling: Optional[float] = None
    invariant: bool


class Violation(BaseModel):
    N: int
    theta: Theta
    kind: str
    max_rx: float
    max_ry: float


class Verdict(BaseModel):
    passed: bool
    scanned_pairs: int
    invariant_points: List[Tuple[int, str]]
    violations: List[Violation] = []
    max_doubling: Optional[float] = None

    @property
    def label(self) -> str:
        return "PASS" if self.passed else "FAIL"


def grid_thetas(max_denom: int = DEFAULT_THETA_DENOM, extra: Iterable[Theta] = ()) -> List[Theta]:
    """All rational theta in [0,1)^2 with denominators <= max_denom, plus ``extra``."""
    values = sorted({Fraction(p, q) for q in range(1, max_denom + 1) for p in range(q)})
    thetas = [Theta(theta1=a, theta2=b) for a in values for b in values]
    seen = set(thetas)
    for t in extra:
        if t not in seen:
            thetas.append(t)
            seen.add(t)
    return thetas


def doubling_residual(image, theta: Theta) -> float:
    size = norm(image)
    if size == 0.0:
        raise ZeroStateError("doubling check needs a nonzero image")
    return norm(subtract(x_center(image), scale(image, turns_phase(2 * theta.theta1)))) / size


def doubling_check(N: int, theta: Theta, m: int, params: Optional[ModelParams] = None) -> float:
    """||X F Phi_m - exp(4 pi i theta1) F Phi_m|| / ||F Phi_m||."""
    params = params or ModelParams(N=N)
    return doubling_residual(apply_F(position_basis(params, theta, m)), theta)


def _scan_task(task: Tuple[int, Theta, int, float, float, float]) -> ScanRecord:
    N, theta, m, tol, amp_epsilon, kernel_tol = task
    params = ModelParams(N=N, amp_epsilon=amp_epsilon, kernel_tol=kernel_tol)
    image = apply_F(position_basis(params, theta, m))
    try:
        rx, ry = xy_residual(image, theta)
        doubling: Optional[float] = doubling_residual(image, theta)
    except ZeroStateError:
        # F is unitary, so a vanishing image means the engine lost the state
        warnings.warn(f"F Phi_{m} measured zero at N={N}, theta=({theta.label}); recorded as not invariant")
        rx, ry, doubling = LOST_IMAGE_RESIDUAL, LOST_IMAGE_RESIDUAL, None
    return ScanRecord(
        N=N,
        theta=theta,
        m=m,
        rx=rx,
        ry=ry,
        doubling=doubling,
        tol=tol,
        invariant=max(rx, ry) < tol,
    )


def scan_theta(
    n_set: Sequence[int],
    theta_set: Sequence[Theta],
    tol: float = DEFAULT_SCAN_TOL,
    amp_epsilon: float = DEFAULT_AMP_EPSILON,
    kernel_tol: float = DEFAULT_KERNEL_TOL,
    workers: int = 1,
    progress: bool = False,
) -> List[ScanRecord]:
    if not (0 < tol < 1):
        raise ValueError(f"tol must lie in (0, 1), got {tol}")
    tasks = [
        (N, theta, m, tol, amp_epsilon, kernel_tol)
        for N in n_set
        for theta in theta_set
        for m in range(N)
    ]
    if workers > 1:
        return list(
            process_map(_scan_task, tasks, max_workers=workers, chunksize=max(1, len(tasks) // (8 * workers)),
                        desc="Scanning", disable=not progress)
        )
    return [_scan_task(t) for t in tqdm(tasks, desc="Scanning", disable=not progress)]


def summarize(records: Iterable[ScanRecord]) -> List[PairSummary]:
    """Aggregate per (N, theta); a pair is invariant only if every m passes."""
    groups: "OrderedDict[Tuple[int, Theta], List[ScanRecord]]" = OrderedDict()
    for r in records:
        groups.setdefault((r.N, r.theta), []).append(r)
    out: List[PairSummary] = []
    for (N, theta), rows in groups.items():
        doubling = [r.doubling for r in rows if r.doubling is not None]
        out.append(
            PairSummary(
                N=N,
                theta=theta,
                max_rx=max(r.rx for r in rows),
                max_ry=max(r.ry for r in rows),
                max_doubling=max(doubling) if doubling else None,
                invariant=all(r.invariant for r in rows),
            )
        )
    return out


def theorem_verdict(records: Iterable[ScanRecord]) -> Verdict:
    """PASS iff the invariant pairs are exactly the scanned (N even, theta = (0,0)) pairs."""
    summaries = summarize(records)
    violations: List[Violation] = []
    invariant_points: List[Tuple[int, str]] = []
    for s in summaries:
        expected = s.N % 2 == 0 and s.theta.is_periodic
        if s.invariant:
            invariant_points.append((s.N, s.theta.label))
        if s.invariant != expected:
            violations.append(
                Violation(
                    N=s.N,
                    theta=s.theta,
                    kind="unexpected_invariant" if s.invariant else "missing_invariant",
                    max_rx=s.max_rx,
                    max_ry=s.max_ry,
                )
            )
    doubling = [s.max_doubling for s in summaries if s.max_doubling is not None]
    return Verdict(
        passed=not violations,
        scanned_pairs=len(summaries),
        invariant_points=invariant_points,
        violations=violations,
        max_doubling=max(doubling) if doubling else None,
    )


def invariant_pairs(records: Iterable[ScanRecord]) -> Dict[Tuple[int, str], bool]:
    return {(s.N, s.theta.label): s.invariant for s in summarize(records)}
