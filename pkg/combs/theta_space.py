"""N-dimensional fibers H(theta) of the center generated by X = U^N and Y = V^N."""
from __future__ import annotations

import math
import warnings
from fractions import Fraction
from typing import List, NamedTuple, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_serializer, field_validator

from combs.comb_calculus import (
    MOMENTUM,
    POSITION,
    Comb,
    CombState,
    CombStateRecord,
    CombError,
    ModelParams,
    RationalLike,
    ZeroStateError,
    add,
    as_fraction,
    empty_state,
    fraction_str,
    kernel_form,
    make_state,
    norm,
    scale,
    state_from_record,
    state_to_record,
    subtract,
    to_position,
    turns_phase,
    x_center,
    y_center,
)

RESIDUAL_CLAMP = 1e-12


class BasisIndexError(CombError):
    pass


class ProjectionError(CombError):
    pass


class Theta(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    theta1: Fraction
    theta2: Fraction

    @field_validator("theta1", "theta2", mode="before")
    @classmethod
    def _reduce(cls, v):
        return as_fraction(v) % 1

    @field_serializer("theta1", "theta2")
    def _dump(self, v: Fraction) -> str:
        return fraction_str(v)

    @classmethod
    def of(cls, theta1: RationalLike, theta2: RationalLike) -> "Theta":
        return cls(theta1=theta1, theta2=theta2)

    @classmethod
    def parse(cls, text: str) -> "Theta":
        """Parse ``"p/q,p/q"``; components must already lie in [0, 1)."""
        parts = [p for p in text.replace(" ", "").split(",")]
        if len(parts) != 2:
            raise CombError(f"theta must look like 'p/q,p/q', got {text!r}")
        values = [as_fraction(p) for p in parts]
        if any(not (0 <= v < 1) for v in values):
            raise CombError(f"theta components must lie in [0, 1), got {text!r}")
        return cls(theta1=values[0], theta2=values[1])

    @property
    def label(self) -> str:
        return f"{fraction_str(self.theta1)},{fraction_str(self.theta2)}"

    @property
    def is_periodic(self) -> bool:
        return self.theta1 == 0 and self.theta2 == 0


class FiberBasis(NamedTuple):
    params: ModelParams
    theta: Theta
    basis: Tuple[CombState, ...]
    momentum: Optional[Tuple[CombState, ...]] = None

    @property
    def dim(self) -> int:
        return len(self.basis)


class Projection(NamedTuple):
    coeffs: np.ndarray
    residual: float
    consistent: bool


def _check_index(params: ModelParams, index: int) -> None:
    if not (0 <= index < params.N):
        raise BasisIndexError(f"basis index {index} outside 0..{params.N - 1}")


def position_basis(params: ModelParams, theta: Theta, m: int) -> CombState:
    _check_index(params, m)
    N = params.N
    amp = turns_phase(theta.theta2 * m / N) / math.sqrt(N)
    return make_state(params, [Comb(Fraction(1), (theta.theta1 + m) / N, theta.theta2, amp)], POSITION)


def momentum_basis(params: ModelParams, theta: Theta, n: int) -> CombState:
    """Momentum-representation comb centred at p = (theta2 + n)/N + k, normalized like position_basis."""
    _check_index(params, n)
    N = params.N
    amp = turns_phase(-n * theta.theta1 / N) / math.sqrt(N)
    return make_state(params, [Comb(Fraction(1), (theta.theta2 + n) / N, (-theta.theta1) % 1, amp)], MOMENTUM)


def build_fiber(params: ModelParams, theta: Theta, with_momentum: bool = False) -> FiberBasis:
    basis = tuple(position_basis(params, theta, m) for m in range(params.N))
    momentum = tuple(momentum_basis(params, theta, n) for n in range(params.N)) if with_momentum else None
    return FiberBasis(params, theta, basis, momentum)


def gram_matrix(fb: FiberBasis, states: Optional[Tuple[CombState, ...]] = None) -> np.ndarray:
    """G[m][n] = (Phi_m, Phi_n); pass ``states`` to pair the basis against other states."""
    rows = fb.basis
    cols = tuple(to_position(s) for s in (states if states is not None else fb.basis))
    return np.array([[kernel_form(r, c) for c in cols] for r in rows], dtype=complex)


def fiber_project(s: CombState, fb: FiberBasis, strict: bool = False) -> Projection:
    """Coefficients against the position basis and the leftover norm.

    A residual^2 below -RESIDUAL_CLAMP raises ProjectionError when ``strict``,
    otherwise it is reported with ``consistent=False``.
    """
    s = to_position(s)
    coeffs = np.array([kernel_form(phi, s) for phi in fb.basis], dtype=complex)
    raw = kernel_form(s, s).real - float(np.sum(np.abs(coeffs) ** 2))
    consistent = True
    if raw < -RESIDUAL_CLAMP:
        message = f"negative residual^2 {raw:.3e}: state is far outside H({fb.theta.label})"
        if strict:
            raise ProjectionError(message)
        consistent = False
        warnings.warn(message)
    return Projection(coeffs, math.sqrt(max(raw, 0.0)), consistent)


def reconstruct(coeffs: np.ndarray, fb: FiberBasis) -> CombState:
    out = empty_state(fb.params)
    for c, phi in zip(coeffs, fb.basis):
        out = add(out, scale(phi, complex(c)))
    return out


def xy_residual(s: CombState, theta: Theta, params: Optional[ModelParams] = None) -> Tuple[float, float]:
    """Relative eigen-residuals of X and Y against the eigenvalues of H(theta)."""
    s = to_position(s)
    if params is not None and params != s.params:
        s = s._replace(params=params)
    size = norm(s)
    if size == 0.0:
        raise ZeroStateError("xy_residual needs a nonzero state")
    rx = norm(subtract(x_center(s), scale(s, turns_phase(theta.theta1)))) / size
    ry = norm(subtract(y_center(s), scale(s, turns_phase(theta.theta2)))) / size
    return rx, ry


# ---- JSON codec ----
class FiberBasisRecord(BaseModel):
    N: int = Field(ge=1)
    theta: Tuple[str, str]
    basis: List[CombStateRecord]
    momentum: Optional[List[CombStateRecord]] = None


def fiber_to_json(fb: FiberBasis, indent: int | None = None) -> str:
    record = FiberBasisRecord(
        N=fb.params.N,
        theta=(fraction_str(fb.theta.theta1), fraction_str(fb.theta.theta2)),
        basis=[state_to_record(s) for s in fb.basis],
        momentum=[state_to_record(s) for s in fb.momentum] if fb.momentum is not None else None,
    )
    return record.model_dump_json(indent=indent)


def fiber_from_json(text: str, params: Optional[ModelParams] = None) -> FiberBasis:
    record = FiberBasisRecord.model_validate_json(text)
    params = params or ModelParams(N=record.N)
    momentum = tuple(state_from_record(r, params) for r in record.momentum) if record.momentum is not None else None
    return FiberBasis(
        params,
        Theta.of(record.theta[0], record.theta[1]),
        tuple(state_from_record(r, params) for r in record.basis),
        momentum,
    )
