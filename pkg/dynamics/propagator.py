"""Quantum baker propagator F = S (L + X^{-1} R)(E_p + Y^{-1/2} O_p).

Two realizations: the exact pipeline on comb states (``apply_F``) and the
N x N matrix on the periodic fiber (``matrix_F``), tied together by
``matrix_vs_comb_check``.
"""
from __future__ import annotations

import math
from fractions import Fraction
from typing import List, NamedTuple, Optional

import numpy as np
from scipy.linalg import block_diag

from combs.comb_calculus import (
    HALF,
    CombError,
    CombState,
    ModelParams,
    POSITION,
    add,
    even_p,
    kernel_form,
    left,
    odd_p,
    phase_mult,
    right,
    scale,
    squeeze,
    subtract,
    translate,
    turns_phase,
    y_center,
)
from combs.theta_space import Theta, position_basis

PERIODIC = Theta.of(0, 0)
ODD_DEFECT_THETA = Theta.of(0, HALF)


class OddDimensionError(CombError):
    pass


class EvenDimensionError(CombError):
    pass


class UnitaryMatrix(NamedTuple):
    entries: np.ndarray

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def unitarity_deviation(self) -> float:
        m = self.entries
        return float(np.max(np.abs(m.conj().T @ m - np.eye(self.dim))))


class MatrixCheck(NamedTuple):
    deviation: float
    phase: float
    comb_matrix: np.ndarray


# ---- Comb pipeline ----
def momentum_stage(s: CombState) -> CombState:
    """(E_p + Y^{-1/2} O_p) s."""
    return add(even_p(s), translate(odd_p(s), HALF))


def apply_F(s: CombState) -> CombState:
    if s.rep != POSITION:
        raise CombError("apply_F expects a position-representation state")
    if s.is_empty:
        return s
    t = momentum_stage(s)
    u = add(left(t), phase_mult(right(t), -s.params.N))
    return squeeze(u)


def y_defect(s: CombState, theta2: Fraction) -> CombState:
    """(Y F - exp(2 pi i theta2) F) s."""
    fs = apply_F(s)
    return subtract(y_center(fs), scale(fs, turns_phase(theta2)))


def defect_terms(s: CombState, theta2: Fraction) -> CombState:
    """Three-term expansion of the Y-defect for theta1 = 0.

    ((-1)^N - e) S L E_p s + (1 - e) S X^{-1} R E_p s + e((-1)^N - 1) S X^{-1} R Y^{-1/2} O_p s,
    with e = exp(2 pi i theta2). It vanishes identically at N even, theta2 = 0
    and reduces to ``odd_residual_state`` at N odd, theta2 = 1/2; elsewhere it
    is only compared against ``y_defect`` numerically.
    """
    N = s.params.N
    e = turns_phase(theta2)
    sign = -1.0 if N % 2 else 1.0
    ev = even_p(s)
    first = scale(squeeze(left(ev)), sign - e)
    second = scale(squeeze(phase_mult(right(ev), -N)), 1.0 - e)
    third = scale(squeeze(phase_mult(right(translate(odd_p(s), HALF)), -N)), e * (sign - 1.0))
    return add(add(first, second), third)


def odd_residual_state(N: int, m: int, params: Optional[ModelParams] = None) -> CombState:
    """2 S X^{-1} R (E_p + Y^{-1/2} O_p) Phi_m^{(0,1/2)} for odd N."""
    if N % 2 == 0:
        raise EvenDimensionError(f"odd residual is defined for odd N only, got N={N}")
    params = params or ModelParams(N=N)
    phi = position_basis(params, ODD_DEFECT_THETA, m)
    return scale(squeeze(phase_mult(right(momentum_stage(phi)), -N)), 2.0)


# ---- Matrix form ----
def dft(N: int) -> UnitaryMatrix:
    if N < 1:
        raise CombError(f"N must be positive, got {N}")
    n = np.arange(N)
    return UnitaryMatrix(np.exp(2j * np.pi * np.outer(n, n) / N) / np.sqrt(N))


def z_entry(n: int, N: int) -> complex:
    """exp(i pi (n/N - [n/N])) with [.] the integer part (floor), valid for any integer n."""
    frac = Fraction(n, N) - math.floor(Fraction(n, N))
    return turns_phase(frac / 2)


def z_phase(N: int, power: int = 1) -> UnitaryMatrix:
    if N < 1:
        raise CombError(f"N must be positive, got {N}")
    diag = np.array([z_entry(n, N) for n in range(N)], dtype=complex)
    return UnitaryMatrix(np.diag(diag**power))


def matrix_F(N: int, dft_power: int = 1, block_power: int = -1) -> UnitaryMatrix:
    """Z (F^N)^{dft_power} diag(G, -G) Z^{-2} on the periodic fiber, G = (F^{N/2})^{block_power}.

    The defaults reproduce comb_matrix up to a global phase.
    """
    if N < 2 or N % 2:
        raise OddDimensionError(f"matrix form defined for N even only (N must be even, got {N})")
    if dft_power not in (1, -1) or block_power not in (1, -1):
        raise CombError(f"dft_power and block_power must be +1 or -1, got {dft_power}, {block_power}")
    full = dft(N).entries
    if dft_power == -1:
        full = full.conj().T
    half = dft(N // 2).entries
    if block_power == -1:
        half = half.conj().T
    blocks = block_diag(half, -half)
    return UnitaryMatrix(z_phase(N).entries @ full @ blocks @ z_phase(N, -2).entries)


def comb_matrix(N: int, params: Optional[ModelParams] = None) -> np.ndarray:
    """C[n][m] = (Phi_n, F Phi_m) on the periodic fiber."""
    params = params or ModelParams(N=N)
    basis = [position_basis(params, PERIODIC, m) for m in range(N)]
    images = [apply_F(phi) for phi in basis]
    return np.array([[kernel_form(bn, fm) for fm in images] for bn in basis], dtype=complex)


def matrix_vs_comb_check(
    N: int, params: Optional[ModelParams] = None, dft_power: int = 1, block_power: int = -1
) -> MatrixCheck:
    """Max entrywise deviation between the comb pipeline and matrix_F after one fitted global phase."""
    target = matrix_F(N, dft_power, block_power).entries
    comb = comb_matrix(N, params)
    overlap = np.sum(np.conj(target) * comb)
    phase = float(np.angle(overlap)) if abs(overlap) > 0 else 0.0
    deviation = float(np.max(np.abs(comb - np.exp(1j * phase) * target)))
    return MatrixCheck(deviation, phase, comb)


def eigenphases(m: UnitaryMatrix) -> List[float]:
    return sorted(float(a) for a in np.angle(np.linalg.eigvals(m.entries)))
