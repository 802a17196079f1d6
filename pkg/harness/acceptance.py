"""Acceptance checks driven by ``bakerlab verify``; each returns a CheckResult."""
from __future__ import annotations

import os
from fractions import Fraction
from typing import Callable, List, Optional, Sequence

import numpy as np
from pydantic import BaseModel

from combs.comb_calculus import (
    HALF,
    Comb,
    CombState,
    ModelParams,
    allclose,
    distance,
    even_p,
    fourier_comb,
    left,
    make_state,
    norm,
    odd_p,
    right,
    scale,
    x_center,
    y_center,
)
from combs.theta_space import Theta, build_fiber, gram_matrix
from dynamics.classical_cover import escape_check, momentum_center_image
from dynamics.propagator import (
    ODD_DEFECT_THETA,
    matrix_F,
    matrix_vs_comb_check,
    odd_residual_state,
    y_defect,
)
from harness.invariance_scan import grid_thetas, scan_theta, theorem_verdict

DEFAULT_WORKERS = max(1, os.cpu_count() or 1)

_SPACINGS = [Fraction(1, 3), Fraction(1, 2), Fraction(2, 3), Fraction(1), Fraction(3, 2), Fraction(2)]


class CheckResult(BaseModel):
    name: str
    passed: bool
    value: float
    threshold: float
    detail: str = ""


def random_rational(rng: np.random.Generator, max_denom: int = 12) -> Fraction:
    q = int(rng.integers(1, max_denom + 1))
    return Fraction(int(rng.integers(0, q)), q)


def random_state(rng: np.random.Generator, params: ModelParams, max_terms: int = 3) -> CombState:
    terms: List[Comb] = []
    for _ in range(int(rng.integers(1, max_terms + 1))):
        spacing = _SPACINGS[int(rng.integers(len(_SPACINGS)))]
        offset = random_rational(rng) * spacing
        amp = complex(rng.normal(), rng.normal())
        terms.append(Comb(spacing, offset, random_rational(rng), amp))
    return make_state(params, terms)


COMMUTATORS: List[tuple] = [
    ("Y^1/2 L = R Y^1/2", lambda s: y_center(left(s), HALF), lambda s: right(y_center(s, HALF))),
    ("Y^1/2 X = (-1)^N X Y^1/2",
     lambda s: y_center(x_center(s), HALF),
     lambda s: scale(x_center(y_center(s, HALF)), (-1.0) ** s.params.N)),
    ("X^-1 E_p = O_p X^-1", lambda s: x_center(even_p(s), -1), lambda s: odd_p(x_center(s, -1))),
    ("LR = 0", lambda s: left(right(s)), lambda s: scale(s, 0.0)),
    ("E_p O_p = 0", lambda s: even_p(odd_p(s)), lambda s: scale(s, 0.0)),
]


def check_theorem(n_max: int = 8, max_denom: int = 8, tol: float = 1e-8, workers: Optional[int] = None,
                  progress: bool = False) -> CheckResult:
    workers = workers or DEFAULT_WORKERS
    records = scan_theta(range(1, n_max + 1), grid_thetas(max_denom), tol=tol, workers=workers, progress=progress)
    verdict = theorem_verdict(records)
    doubling = verdict.max_doubling or 0.0
    return CheckResult(
        name="theorem reproduction",
        passed=verdict.passed and doubling < 1e-10,
        value=float(len(verdict.violations)),
        threshold=0.0,
        detail=f"invariant points {verdict.invariant_points}; doubling max {doubling:.2e}",
    )


def check_commutators(n_max: int = 8, samples: int = 100, seed: int = 7, threshold: float = 1e-12) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    worst_name = ""
    for N in range(1, n_max + 1):
        params = ModelParams(N=N)
        for _ in range(samples):
            s = random_state(rng, params)
            for name, lhs, rhs in COMMUTATORS:
                r = distance(lhs(s), rhs(s))
                if r > worst:
                    worst, worst_name = r, f"{name} at N={N}"
    return CheckResult(name="commutator suite", passed=worst < threshold, value=worst, threshold=threshold,
                       detail=worst_name)


def check_odd_residual(n_values: Sequence[int] = (1, 3, 5, 7), threshold: float = 1e-10) -> CheckResult:
    worst = 0.0
    weakest = float("inf")
    for N in n_values:
        params = ModelParams(N=N)
        fiber = build_fiber(params, ODD_DEFECT_THETA)
        norms = []
        for m, phi in enumerate(fiber.basis):
            residual = odd_residual_state(N, m, params)
            worst = max(worst, distance(y_defect(phi, ODD_DEFECT_THETA.theta2), residual))
            norms.append(norm(residual))
        weakest = min(weakest, max(norms))
    return CheckResult(
        name="odd-N residual",
        passed=worst < threshold and weakest > 1e-3,
        value=worst,
        threshold=threshold,
        detail=f"smallest max_m norm {weakest:.3e}",
    )


def check_orthonormality(n_max: int = 16, samples: int = 20, seed: int = 11, threshold: float = 1e-8) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for N in range(1, n_max + 1):
        params = ModelParams(N=N)
        for _ in range(samples):
            theta = Theta(theta1=random_rational(rng), theta2=random_rational(rng))
            g = gram_matrix(build_fiber(params, theta))
            worst = max(worst, float(np.max(np.abs(g - np.eye(N)))))
    return CheckResult(name="orthonormality", passed=worst < threshold, value=worst, threshold=threshold)


def check_matrix(n_values: Sequence[int] = (2, 4, 6, 8), n_unitary: int = 32, threshold: float = 1e-8) -> CheckResult:
    deviation = max(matrix_vs_comb_check(N).deviation for N in n_values)
    unitarity = max(matrix_F(N).unitarity_deviation() for N in range(2, n_unitary + 1, 2))
    expected = np.array([[1, 1], [1j, -1j]]) / np.sqrt(2)
    two = matrix_F(2).entries
    overlap = np.sum(np.conj(expected) * two)
    hand = float(np.max(np.abs(two - np.exp(1j * np.angle(overlap)) * expected)))
    return CheckResult(
        name="matrix/comb agreement",
        passed=deviation < threshold and unitarity < 1e-12 and hand < 1e-12,
        value=deviation,
        threshold=threshold,
        detail=f"unitarity {unitarity:.2e}; N=2 hand matrix {hand:.2e}",
    )


def check_escape(n_max: int = 8) -> CheckResult:
    antiperiodic = min(escape_check(N, HALF).fraction for N in range(1, n_max + 1))
    periodic = max(escape_check(N, 0).fraction for N in range(1, n_max + 1))
    exact = all(
        momentum_center_image(N, t2, 0, k, mode="halving") == t2 / (2 * N) + Fraction(k, 2)
        for N in range(1, n_max + 1)
        for t2 in (Fraction(0), HALF)
        for k in range(-3, 4)
    )
    return CheckResult(
        name="classical escape",
        passed=antiperiodic > 0 and periodic == 0 and exact,
        value=antiperiodic,
        threshold=0.0,
        detail=f"theta2=0 fraction {periodic}",
    )


def check_fourier(samples: int = 1000, seed: int = 3) -> CheckResult:
    rng = np.random.default_rng(seed)
    failures = 0
    for i in range(samples):
        params = ModelParams(N=1 + i % 8)
        s = random_state(rng, params, max_terms=1)
        back = fourier_comb(fourier_comb(fourier_comb(fourier_comb(s))))
        same_geometry = [t[:3] for t in back.terms] == [t[:3] for t in s.terms]
        if not (same_geometry and allclose(back, s, atol=1e-12)):
            failures += 1
    return CheckResult(name="fourier fourfold identity", passed=failures == 0, value=float(failures), threshold=0.0)


CHECKS: List[Callable[[], CheckResult]] = [
    check_commutators,
    check_odd_residual,
    check_orthonormality,
    check_matrix,
    check_escape,
    check_fourier,
]


def run_all(workers: Optional[int] = None, progress: bool = False, max_denom: int = 8) -> List[CheckResult]:
    results = [check_theorem(max_denom=max_denom, workers=workers, progress=progress)]
    results.extend(check() for check in CHECKS)
    return results
