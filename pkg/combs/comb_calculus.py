"""Exact calculus of quasi-periodic Dirac-comb states.

A comb term ``(P, x0, phi, A)`` stands for the distribution

    A * sum_k exp(2*pi*i*phi*k) * delta(x - x0 - P*k)

in the position representation (or the same expression in ``p`` for the
momentum representation). Lattice geometry is exact (``Fraction``);
amplitudes are complex doubles.
"""
from __future__ import annotations

import cmath
import math
from fractions import Fraction
from functools import lru_cache, reduce
from typing import Dict, Iterable, List, Literal, NamedTuple, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

DEFAULT_AMP_EPSILON = 1e-15
DEFAULT_KERNEL_TOL = 1e-14

POSITION = "x"
MOMENTUM = "p"

# Fourier convention <x|p> = N^{1/2} exp(2*pi*i*N*p*x); S multiplies delta
# amplitudes by sqrt(2) so that S is unitary.
SQUEEZE_CONSTANT = math.sqrt(2.0)

RationalLike = Union[int, Fraction, str]
Window = Tuple[Fraction, Fraction]

HALF = Fraction(1, 2)
LEFT: Window = (Fraction(0), HALF)
RIGHT: Window = (HALF, Fraction(1))
EVEN_P: Window = (Fraction(0), Fraction(1))
ODD_P: Window = (Fraction(1), Fraction(2))


class CombError(ValueError):
    pass


class RepresentationError(CombError):
    pass


class ZeroStateError(CombError):
    pass


def as_fraction(value: RationalLike) -> Fraction:
    """Parse an exact rational. Floats are refused on purpose."""
    if isinstance(value, bool) or isinstance(value, float):
        raise CombError(f"exact rational required, got float {value!r}")
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as e:
            raise CombError(f"cannot parse rational {value!r}") from e
    raise CombError(f"unsupported rational type {type(value).__name__}")


def fraction_str(value: Fraction) -> str:
    return f"{value.numerator}/{value.denominator}"


@lru_cache(maxsize=1 << 16)
def turns_phase(turns: Fraction) -> complex:
    """exp(2*pi*i*turns), exact on quarter turns."""
    t = turns % 1
    if t == 0:
        return 1 + 0j
    if t == HALF:
        return -1 + 0j
    if t == Fraction(1, 4):
        return 1j
    if t == Fraction(3, 4):
        return -1j
    return cmath.exp(2j * math.pi * float(t))


def rational_lcm(values: Iterable[Fraction]) -> Fraction:
    """Least positive rational that is an integer multiple of every value."""
    def _pair(a: Fraction, b: Fraction) -> Fraction:
        num = a.numerator * b.numerator // math.gcd(a.numerator, b.numerator)
        return Fraction(num, math.gcd(a.denominator, b.denominator))

    return reduce(_pair, values)


# ---- Types ----
class ModelParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    N: int = Field(ge=1)
    amp_epsilon: float = Field(default=DEFAULT_AMP_EPSILON, gt=0, lt=1)
    kernel_tol: float = Field(default=DEFAULT_KERNEL_TOL, gt=0, lt=1)

    @property
    def hbar(self) -> float:
        return 1.0 / (2.0 * math.pi * self.N)

    @property
    def truncation_radius(self) -> int:
        """Radius R_t with exp(-(pi N / 2) R_t^2) below kernel_tol."""
        return max(1, math.ceil(math.sqrt(2.0 * math.log(1.0 / self.kernel_tol) / (math.pi * self.N))))


class Comb(NamedTuple):
    spacing: Fraction
    offset: Fraction
    step_phase: Fraction
    amplitude: complex


class CombState(NamedTuple):
    terms: Tuple[Comb, ...]
    rep: str
    params: ModelParams

    @property
    def is_empty(self) -> bool:
        return not self.terms


def anchored(spacing: Fraction, point: Fraction, step_phase: Fraction, amplitude: complex) -> Comb:
    """Comb through ``point`` re-anchored so that its offset lies in [0, spacing)."""
    if spacing <= 0:
        raise CombError(f"spacing must be positive, got {spacing}")
    q = math.floor(point / spacing)
    step_phase = step_phase % 1
    if q:
        amplitude = amplitude * turns_phase(-step_phase * q)
    return Comb(spacing, point - q * spacing, step_phase, complex(amplitude))


def make_state(params: ModelParams, terms: Iterable[Comb], rep: str = POSITION) -> CombState:
    if rep not in (POSITION, MOMENTUM):
        raise RepresentationError(f"unknown representation {rep!r}")
    return canonicalize(CombState(tuple(terms), rep, params))


def empty_state(params: ModelParams, rep: str = POSITION) -> CombState:
    return CombState((), rep, params)


def _require(s: CombState, rep: str, op: str) -> None:
    if s.rep != rep:
        raise RepresentationError(f"{op} expects {rep!r}-representation input, got {s.rep!r}")


# ---- Canonical form and algebra ----
def canonicalize(s: CombState) -> CombState:
    merged: Dict[Tuple[Fraction, Fraction, Fraction], complex] = {}
    for t in s.terms:
        key = (t.spacing, t.offset, t.step_phase)
        merged[key] = merged.get(key, 0j) + t.amplitude
    eps = s.params.amp_epsilon
    terms = tuple(
        Comb(p, x0, phi, amp)
        for (p, x0, phi), amp in sorted(merged.items())
        if abs(amp) >= eps
    )
    return CombState(terms, s.rep, s.params)


def add(s1: CombState, s2: CombState) -> CombState:
    if s1.rep != s2.rep:
        raise RepresentationError("cannot add states in different representations")
    return canonicalize(CombState(s1.terms + s2.terms, s1.rep, s1.params))


def scale(s: CombState, factor: complex) -> CombState:
    terms = tuple(t._replace(amplitude=t.amplitude * factor) for t in s.terms)
    return canonicalize(CombState(terms, s.rep, s.params))


def subtract(s1: CombState, s2: CombState) -> CombState:
    return add(s1, scale(s2, -1.0))


def refine(s: CombState, spacing: Fraction) -> CombState:
    """Split every term into sub-combs of the given spacing (a multiple of each term spacing)."""
    terms: List[Comb] = []
    for t in s.terms:
        ratio = spacing / t.spacing
        if ratio.denominator != 1:
            raise CombError(f"{spacing} is not a multiple of spacing {t.spacing}")
        terms.extend(_split(t, int(ratio)))
    return canonicalize(CombState(tuple(terms), s.rep, s.params))


def _split(t: Comb, count: int) -> List[Comb]:
    spacing = t.spacing * count
    step = (t.step_phase * count) % 1
    return [
        Comb(spacing, t.offset + t.spacing * j, step, t.amplitude * turns_phase(t.step_phase * j))
        for j in range(count)
    ]


def allclose(s1: CombState, s2: CombState, atol: float = 1e-10) -> bool:
    """Distribution-level equality: both sides refined to a common spacing."""
    if s1.rep != s2.rep:
        return False
    spacings = [t.spacing for t in s1.terms + s2.terms]
    if not spacings:
        return True
    common = rational_lcm(spacings)
    a = {t[:3]: t.amplitude for t in refine(s1, common).terms}
    b = {t[:3]: t.amplitude for t in refine(s2, common).terms}
    return all(abs(a.get(k, 0j) - b.get(k, 0j)) <= atol for k in set(a) | set(b))


# ---- Multiplication and translation ----
def phase_mult(s: CombState, a: RationalLike) -> CombState:
    """Multiply by exp(2*pi*i*a*x)."""
    _require(s, POSITION, "phase_mult")
    a = as_fraction(a)
    terms = tuple(
        Comb(t.spacing, t.offset, (t.step_phase + a * t.spacing) % 1, t.amplitude * turns_phase(a * t.offset))
        for t in s.terms
    )
    return canonicalize(CombState(terms, s.rep, s.params))


def translate(s: CombState, a: RationalLike) -> CombState:
    """Shift supports x -> x + a, i.e. apply exp(-i a p / hbar)."""
    _require(s, POSITION, "translate")
    a = as_fraction(a)
    terms = tuple(anchored(t.spacing, t.offset + a, t.step_phase, t.amplitude) for t in s.terms)
    return canonicalize(CombState(terms, s.rep, s.params))


def x_center(s: CombState, power: RationalLike = 1) -> CombState:
    """X^power with X = U^N = exp(i x / hbar)."""
    return phase_mult(s, as_fraction(power) * s.params.N)


def y_center(s: CombState, power: RationalLike = 1) -> CombState:
    """Y^power with Y = V^N = exp(i p / hbar); Y^a shifts supports by -a."""
    return translate(s, -as_fraction(power))


def squeeze(s: CombState, inverse: bool = False) -> CombState:
    """The stretching operator S (support x -> 2x), or its inverse."""
    _require(s, POSITION, "squeeze")
    if inverse:
        terms = tuple(Comb(t.spacing / 2, t.offset / 2, t.step_phase, t.amplitude / SQUEEZE_CONSTANT) for t in s.terms)
    else:
        terms = tuple(Comb(t.spacing * 2, t.offset * 2, t.step_phase, t.amplitude * SQUEEZE_CONSTANT) for t in s.terms)
    return canonicalize(CombState(terms, s.rep, s.params))


# ---- Indicators ----
def _select_residues(terms: Iterable[Comb], window: Window, modulus: Fraction) -> List[Comb]:
    lo, hi = window
    kept: List[Comb] = []
    for t in terms:
        count = (t.spacing / modulus).denominator
        for sub in _split(t, count):
            if lo <= sub.offset % modulus < hi:
                kept.append(sub)
    return kept


def _check_window(window: Window, modulus: Fraction) -> Window:
    lo, hi = as_fraction(window[0]), as_fraction(window[1])
    if not (0 <= lo < hi <= modulus):
        raise CombError(f"window [{lo}, {hi}) must lie inside [0, {modulus})")
    return lo, hi


def indicator_x(s: CombState, window: Window, modulus: RationalLike = 1) -> CombState:
    """Restrict supports to {x : x mod modulus in [a, b)}."""
    _require(s, POSITION, "indicator_x")
    modulus = as_fraction(modulus)
    window = _check_window(window, modulus)
    return canonicalize(CombState(tuple(_select_residues(s.terms, window, modulus)), s.rep, s.params))


def left(s: CombState) -> CombState:
    return indicator_x(s, LEFT, 1)


def right(s: CombState) -> CombState:
    return indicator_x(s, RIGHT, 1)


# ---- Fourier transform of combs (Poisson summation) ----
def _forward_term(t: Comb, N: int) -> Comb:
    dual = 1 / (N * t.spacing)
    amp = t.amplitude / (math.sqrt(N) * float(t.spacing)) * turns_phase(-t.step_phase * t.offset / t.spacing)
    return Comb(dual, t.step_phase * dual, (-t.offset / t.spacing) % 1, amp)


def _inverse_term(t: Comb, N: int) -> Comb:
    dual = 1 / (N * t.spacing)
    shift = (-t.step_phase) % 1
    step = t.offset / t.spacing
    amp = t.amplitude * math.sqrt(N) * float(dual) * turns_phase(step * shift)
    return Comb(dual, shift * dual, step, amp)


def fourier_comb(s: CombState, inverse: bool = False) -> CombState:
    """Transform with kernel N^{1/2} exp(-+2*pi*i*N*p*x), toggling the representation.

    The forward kernel is used in both directions, so two forward
    applications give the parity x -> -x and four give the identity.
    """
    N = s.params.N
    fn = _inverse_term if inverse else _forward_term
    rep = MOMENTUM if s.rep == POSITION else POSITION
    return canonicalize(CombState(tuple(fn(t, N) for t in s.terms), rep, s.params))


def to_momentum(s: CombState) -> CombState:
    return s if s.rep == MOMENTUM else fourier_comb(s)


def to_position(s: CombState) -> CombState:
    return s if s.rep == POSITION else fourier_comb(s, inverse=True)


def indicator_p(s: CombState, window: Window) -> CombState:
    """Restrict the momentum support to the window mod 2; position in, position out."""
    _require(s, POSITION, "indicator_p")
    window = _check_window(window, Fraction(2))
    moment = fourier_comb(s)
    kept = CombState(tuple(_select_residues(moment.terms, window, Fraction(2))), MOMENTUM, s.params)
    return fourier_comb(canonicalize(kept), inverse=True)


def even_p(s: CombState) -> CombState:
    return indicator_p(s, EVEN_P)


def odd_p(s: CombState) -> CombState:
    return indicator_p(s, ODD_P)


# ---- Kernel form ----
def eval_kernel(x: float, y: float, N: int) -> complex:
    """K(x,y) = sin(pi N d)/(pi d) * exp(-(pi N/2)(d^2 + i d)), d = x - y, K(x,x) = N."""
    d = x - y
    if d == 0:
        return complex(N)
    return math.sin(math.pi * N * d) / (math.pi * d) * cmath.exp(-(math.pi * N / 2.0) * (d * d + 1j * d))


def lattice_points(s: CombState, lo: Fraction, hi: Fraction, closed: bool = False) -> Dict[Fraction, complex]:
    """Support points of ``s`` in [lo, hi) (or [lo, hi]) with merged amplitudes."""
    points: Dict[Fraction, complex] = {}
    for t in s.terms:
        k_lo = math.ceil((lo - t.offset) / t.spacing)
        k_hi = math.floor((hi - t.offset) / t.spacing)
        for k in range(k_lo, k_hi + 1):
            x = t.offset + t.spacing * k
            if not closed and x >= hi:
                continue
            points[x] = points.get(x, 0j) + t.amplitude * turns_phase(t.step_phase * k)
    return points


def kernel_matrix(xs: List[Fraction], ys: List[Fraction], N: int) -> np.ndarray:
    """K(x_i, y_j) for exact lattice points; sin(pi N d) vanishes exactly on d in Z/N."""
    denom = reduce(lambda a, b: a * b // math.gcd(a, b), (v.denominator for v in xs + ys), 1)
    ix = [v.numerator * (denom // v.denominator) for v in xs]
    iy = [v.numerator * (denom // v.denominator) for v in ys]
    bound = max(abs(v) for v in ix + iy) if ix or iy else 0
    dtype = np.int64 if (2 * bound + 1) * N < 2**62 and 2 * denom < 2**62 else object
    diff = np.subtract.outer(np.array(ix, dtype=dtype), np.array(iy, dtype=dtype))
    turns = (diff * N) % (2 * denom)
    sine = np.sin(np.pi * (turns.astype(float) / denom))
    sine[(turns % denom) == 0] = 0.0
    d = diff.astype(float) / denom
    coincide = diff == 0
    safe = np.where(coincide, 1.0, d)
    kern = sine / (np.pi * safe) * np.exp(-(np.pi * N / 2.0) * (d * d + 1j * d))
    return np.where(coincide, complex(N), kern)


def support_period(*states: CombState) -> Fraction:
    """Smallest L >= 1 that is a multiple of 1 and of every term spacing."""
    return rational_lcm([Fraction(1)] + [t.spacing for s in states for t in s.terms])


def _phase_groups(s: CombState, period: Fraction) -> Dict[Fraction, CombState]:
    """Split ``s`` refined to ``period`` by the step phase picked up per period."""
    groups: Dict[Fraction, List[Comb]] = {}
    for t in refine(s, period).terms:
        groups.setdefault(t.step_phase, []).append(t)
    return {phase: CombState(tuple(terms), s.rep, s.params) for phase, terms in groups.items()}


def kernel_form(s1: CombState, s2: CombState) -> complex:
    """Mean of conj(s1)(x) (K s2)(x) over x, as a finite double sum per common period L.

    Both states are refined to spacing L; pieces whose step phases differ
    average to zero and are skipped. For states of one fiber (L = 1) this
    is int_0^1 conj(s1) K s2 dx.
    """
    _require(s1, POSITION, "kernel_form")
    _require(s2, POSITION, "kernel_form")
    if s1.is_empty or s2.is_empty:
        return 0j
    params = s1.params
    radius = params.truncation_radius
    period = support_period(s1, s2)
    right_groups = _phase_groups(s2, period)
    total = 0j
    for phase, g1 in _phase_groups(s1, period).items():
        g2 = right_groups.get(phase)
        if g2 is None:
            continue
        left_pts = lattice_points(g1, Fraction(0), period)
        right_pts = lattice_points(g2, Fraction(-radius), period + radius, closed=True)
        if not left_pts or not right_pts:
            continue
        xs, a = list(left_pts), np.array(list(left_pts.values()))
        ys, b = list(right_pts), np.array(list(right_pts.values()))
        total += complex(np.conj(a) @ kernel_matrix(xs, ys, params.N) @ b)
    return total / float(period)


def norm(s: CombState) -> float:
    s = to_position(s)
    return math.sqrt(max(kernel_form(s, s).real, 0.0))


def distance(s1: CombState, s2: CombState) -> float:
    return norm(subtract(to_position(s1), to_position(s2)))


# ---- JSON codec ----
class CombTermRecord(BaseModel):
    spacing: str
    offset: str
    step_phase: str
    rep: Literal["x", "p"]
    amp: Tuple[float, float]


class CombStateRecord(BaseModel):
    N: int = Field(ge=1)
    rep: Literal["x", "p"]
    terms: List[CombTermRecord] = []


def state_to_record(s: CombState) -> CombStateRecord:
    terms = [
        CombTermRecord(
            spacing=fraction_str(t.spacing),
            offset=fraction_str(t.offset),
            step_phase=fraction_str(t.step_phase),
            rep=s.rep,  # type: ignore[arg-type]
            amp=(t.amplitude.real, t.amplitude.imag),
        )
        for t in s.terms
    ]
    return CombStateRecord(N=s.params.N, rep=s.rep, terms=terms)  # type: ignore[arg-type]


def state_to_json(s: CombState, indent: int | None = None) -> str:
    return state_to_record(s).model_dump_json(indent=indent)


def state_from_record(record: CombStateRecord, params: ModelParams | None = None) -> CombState:
    params = params or ModelParams(N=record.N)
    terms = [
        anchored(as_fraction(t.spacing), as_fraction(t.offset), as_fraction(t.step_phase), complex(*t.amp))
        for t in record.terms
    ]
    return make_state(params, terms, record.rep)


def state_from_json(text: str, params: ModelParams | None = None) -> CombState:
    return state_from_record(CombStateRecord.model_validate_json(text), params)
