"""Classical covering dynamics of the baker's map on R^2 and its torus reduction."""
from __future__ import annotations

from fractions import Fraction
from typing import Dict, Iterable, List, NamedTuple, Tuple, Union

from pydantic import BaseModel

from combs.comb_calculus import RationalLike, as_fraction, fraction_str

Coordinate = Union[Fraction, float]

L_REGION = "l"
R_REGION = "r"
E_P = "e_p"
O_P = "o_p"

_HALF = Fraction(1, 2)

# region -> (x shift, p shift) for x' = 2x + bx, p' = p/2 + bp
BRANCHES: Dict[Tuple[str, str], Tuple[Fraction, Fraction]] = {
    (L_REGION, E_P): (Fraction(0), Fraction(0)),
    (R_REGION, E_P): (Fraction(-1), _HALF),
    (L_REGION, O_P): (Fraction(1), _HALF),
    (R_REGION, O_P): (Fraction(0), Fraction(0)),
}
X_STRETCH = Fraction(2)
P_SHRINK = Fraction(1, 2)


class PhasePoint(NamedTuple):
    x: Coordinate
    p: Coordinate


class OrbitRow(NamedTuple):
    step: int
    x: Coordinate
    p: Coordinate
    region: str


class EscapeReport(BaseModel):
    N: int
    theta2: str
    k_range: Tuple[int, int]
    fraction: float
    per_n: Dict[int, float]
    overall: float


def exact_point(x: RationalLike, p: RationalLike) -> PhasePoint:
    return PhasePoint(as_fraction(x), as_fraction(p))


def region_of(pt: PhasePoint) -> Tuple[str, str]:
    horizontal = L_REGION if pt.x % 1 < _HALF else R_REGION
    vertical = E_P if pt.p % 2 < 1 else O_P
    return horizontal, vertical


def region_label(pt: PhasePoint) -> str:
    return "&".join(region_of(pt))


def branch_jacobian(region: Tuple[str, str]) -> Fraction:
    """Determinant of the affine branch; every branch is area preserving."""
    if region not in BRANCHES:
        raise ValueError(f"unknown region {region!r}")
    return X_STRETCH * P_SHRINK


def cover_map(pt: PhasePoint) -> PhasePoint:
    bx, bp = BRANCHES[region_of(pt)]
    return PhasePoint(X_STRETCH * pt.x + bx, P_SHRINK * pt.p + bp)


def torus_baker(pt: PhasePoint) -> PhasePoint:
    if not (0 <= pt.x < 1 and 0 <= pt.p < 1):
        raise ValueError(f"torus_baker expects x, p in [0, 1), got ({pt.x}, {pt.p})")
    image = cover_map(pt)
    return PhasePoint(image.x % 1, image.p % 1)


def orbit(pt: PhasePoint, steps: int, exact: bool = True) -> List[OrbitRow]:
    """Rows for the images 1..steps of ``pt`` under torus_baker."""
    if not exact:
        pt = PhasePoint(float(pt.x), float(pt.p))
    rows: List[OrbitRow] = []
    for step in range(1, steps + 1):
        pt = torus_baker(pt)
        rows.append(OrbitRow(step, pt.x, pt.p, region_label(pt)))
    return rows


def momentum_image(p: Fraction) -> Fraction:
    """Momentum part of the covering map, which depends on p alone."""
    return p / 2 if p % 2 < 1 else p / 2 + _HALF


def momentum_center_image(N: int, theta2: RationalLike, n: int, k: int, mode: str = "covering") -> Fraction:
    """Image of the momentum center p = (theta2 + n)/N + k.

    ``covering`` applies the branch selected by p mod 2; ``halving`` applies
    p -> p/2 unconditionally.
    """
    if N < 1:
        raise ValueError(f"N must be positive, got {N}")
    if not (0 <= n < N):
        raise ValueError(f"n must lie in 0..{N - 1}, got {n}")
    p = (as_fraction(theta2) + n) / N + k
    if mode == "covering":
        return momentum_image(p)
    if mode == "halving":
        return p / 2
    raise ValueError(f"unknown mode {mode!r}")


def in_center_lattice(p: Fraction, N: int, theta2: Fraction) -> bool:
    """Is p of the form (theta2 + n')/N + k'?"""
    return (N * p - theta2).denominator == 1


def escape_check(N: int, theta2: RationalLike, k_range: Iterable[int] = range(-4, 5)) -> EscapeReport:
    theta2 = as_fraction(theta2)
    ks = list(k_range)
    if not ks:
        raise ValueError("k_range must not be empty")
    per_n: Dict[int, float] = {}
    for n in range(N):
        escaped = sum(
            not in_center_lattice(momentum_center_image(N, theta2, n, k), N, theta2) for k in ks
        )
        per_n[n] = escaped / len(ks)
    return EscapeReport(
        N=N,
        theta2=fraction_str(theta2),
        k_range=(min(ks), max(ks)),
        fraction=per_n[0],
        per_n=per_n,
        overall=sum(per_n.values()) / N,
    )
