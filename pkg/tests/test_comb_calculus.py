import cmath
import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from pydantic import ValidationError

from combs.comb_calculus import (
    MOMENTUM,
    POSITION,
    Comb,
    CombError,
    ModelParams,
    RepresentationError,
    add,
    allclose,
    as_fraction,
    distance,
    eval_kernel,
    even_p,
    fourier_comb,
    indicator_x,
    kernel_form,
    kernel_matrix,
    left,
    make_state,
    norm,
    odd_p,
    phase_mult,
    refine,
    right,
    squeeze,
    state_from_json,
    state_to_json,
    subtract,
    support_period,
    to_momentum,
    translate,
    x_center,
)
from combs.theta_space import Theta, position_basis
from harness.acceptance import COMMUTATORS, random_state
from tests.fourier_oracle import pairing_mismatch

F = Fraction


def single(params, spacing, offset, step_phase=0, amplitude=1.0, rep=POSITION):
    return make_state(params, [Comb(F(spacing), F(offset), F(step_phase), complex(amplitude))], rep)


def test_as_fraction_refuses_floats():
    assert as_fraction("3/8") == F(3, 8)
    assert as_fraction(2) == F(2)
    with pytest.raises(CombError):
        as_fraction(0.5)
    with pytest.raises(CombError):
        as_fraction("one half")


def test_model_params_validation():
    with pytest.raises(ValidationError):
        ModelParams(N=0)
    p = ModelParams(N=4)
    assert p.hbar == pytest.approx(1 / (8 * math.pi))
    assert math.exp(-(math.pi * p.N / 2) * p.truncation_radius**2) < p.kernel_tol


def test_canonicalize_merges_and_prunes():
    params = ModelParams(N=2)
    s = make_state(params, [Comb(F(1), F(0), F(0), 1.0), Comb(F(1), F(0), F(0), -1.0), Comb(F(1), F(1, 2), F(0), 2.0)])
    assert len(s.terms) == 1
    assert s.terms[0].offset == F(1, 2)


def test_x_center_on_basis_state_gives_eigenvalue():
    params = ModelParams(N=2)
    phi = position_basis(params, Theta.of("1/4", 0), 0)
    out = x_center(phi)
    (t,) = out.terms
    assert t.step_phase == 0
    assert t.amplitude == pytest.approx(1j / math.sqrt(2))


def test_translate_without_wraparound():
    params = ModelParams(N=1)
    (t,) = translate(single(params, 1, "1/4"), "1/2").terms
    assert (t.spacing, t.offset, t.step_phase, t.amplitude) == (F(1), F(3, 4), F(0), 1.0)


def test_translate_wraparound_reanchors_phase():
    params = ModelParams(N=1)
    (t,) = translate(single(params, 1, "3/4", "1/3"), "1/2").terms
    assert t.offset == F(1, 4)
    assert t.step_phase == F(1, 3)
    assert t.amplitude == pytest.approx(cmath.exp(-2j * math.pi / 3))


def test_phase_mult_and_translate_are_invertible(rng):
    params = ModelParams(N=3)
    for _ in range(20):
        s = random_state(rng, params)
        for a in (F(1, 2), F(-3, 4), F(5, 3)):
            back = translate(translate(s, a), -a)
            assert [t[:3] for t in back.terms] == [t[:3] for t in s.terms]
            assert allclose(back, s, atol=1e-14)
            back = phase_mult(phase_mult(s, a), -a)
            assert [t[:3] for t in back.terms] == [t[:3] for t in s.terms]
            assert allclose(back, s, atol=1e-14)


def test_momentum_input_rejected():
    params = ModelParams(N=2)
    p_state = single(params, 1, 0, rep=MOMENTUM)
    with pytest.raises(RepresentationError):
        translate(p_state, 1)
    with pytest.raises(RepresentationError):
        left(p_state)
    with pytest.raises(RepresentationError):
        kernel_form(p_state, p_state)


def test_squeeze_doubles_support():
    params = ModelParams(N=2)
    (t,) = squeeze(single(params, 1, "1/4")).terms
    assert (t.spacing, t.offset) == (F(2), F(1, 2))
    assert t.amplitude == pytest.approx(math.sqrt(2))
    s = single(params, "1/3", "1/6", "1/5", 0.3 - 0.7j)
    assert allclose(squeeze(squeeze(s), inverse=True), s, atol=1e-15)


@pytest.mark.parametrize("N", [2, 4])
def test_squeeze_preserves_norm_of_half_period_comb(N):
    params = ModelParams(N=N)
    s = single(params, "1/2", 0, 0, 0.5)
    image = squeeze(s)
    assert norm(s) > 0.1
    assert abs(norm(image) - norm(s)) < 1e-10


def test_indicator_single_residue():
    params = ModelParams(N=2)
    s = single(params, 1, "1/4")
    assert left(s) == s
    assert right(s).is_empty


def test_indicator_splits_half_period_comb():
    params = ModelParams(N=2)
    s = single(params, "1/2", "1/4")
    (lt,) = left(s).terms
    (rt,) = right(s).terms
    assert (lt.spacing, lt.offset) == (F(1), F(1, 4))
    assert (rt.spacing, rt.offset) == (F(1), F(3, 4))


def test_indicator_window_checked():
    params = ModelParams(N=2)
    with pytest.raises(CombError):
        indicator_x(single(params, 1, 0), (F(1, 2), F(3, 2)), 1)


def test_partitions_of_unity(rng):
    for N in (1, 2, 3, 5):
        params = ModelParams(N=N)
        for _ in range(10):
            s = random_state(rng, params)
            assert left(right(s)).is_empty
            assert allclose(add(left(s), right(s)), s, atol=1e-12)
            assert odd_p(even_p(s)).is_empty
            assert allclose(add(even_p(s), odd_p(s)), s, atol=1e-12)


def test_fourier_uniform_comb_n2():
    params = ModelParams(N=2)
    out = fourier_comb(single(params, 1, 0))
    assert out.rep == MOMENTUM
    (t,) = out.terms
    assert (t.spacing, t.offset, t.step_phase) == (F(1, 2), F(0), F(0))
    assert t.amplitude == pytest.approx(1 / math.sqrt(2))


def test_fourier_half_step_phase_shifts_offset():
    params = ModelParams(N=2)
    (t,) = fourier_comb(single(params, 1, 0, "1/2")).terms
    assert t.spacing == F(1, 2)
    assert t.offset == F(1, 4)


def test_fourier_twice_is_parity():
    params = ModelParams(N=1)
    twice = fourier_comb(fourier_comb(single(params, 1, "1/4")))
    assert twice.rep == POSITION
    (t,) = twice.terms
    assert (t.spacing, t.offset, t.step_phase) == (F(1), F(3, 4), F(0))
    assert t.amplitude == pytest.approx(1.0)


def test_fourier_fourfold_identity(rng):
    for i in range(200):
        params = ModelParams(N=1 + i % 6)
        s = random_state(rng, params, max_terms=1)
        back = fourier_comb(fourier_comb(fourier_comb(fourier_comb(s))))
        assert [t[:3] for t in back.terms] == [t[:3] for t in s.terms]
        assert allclose(back, s, atol=1e-12)


def test_fourier_inverse_undoes_forward(rng):
    params = ModelParams(N=3)
    for _ in range(20):
        s = random_state(rng, params)
        assert allclose(fourier_comb(fourier_comb(s), inverse=True), s, atol=1e-12)


@pytest.mark.parametrize(
    "N,spacing,offset,phase",
    [(1, 1, 0, 0), (2, 1, 0, "1/2"), (2, "1/2", "1/8", "1/3"), (3, 2, "1/3", "3/4"), (4, "2/3", "1/2", "1/6")],
)
def test_fourier_matches_quadrature_oracle(N, spacing, offset, phase):
    params = ModelParams(N=N)
    s = single(params, spacing, offset, phase, 0.8 + 0.6j)
    assert pairing_mismatch(s, fourier_comb(s), sign=-1) < 1e-8
    p_state = single(params, spacing, offset, phase, 0.8 + 0.6j, rep=MOMENTUM)
    assert pairing_mismatch(p_state, fourier_comb(p_state, inverse=True), sign=+1) < 1e-8


def test_even_odd_momentum_residues_n2():
    params = ModelParams(N=2)
    s = single(params, 1, 0)
    assert {t.offset % 2 for t in to_momentum(even_p(s)).terms} == {F(0), F(1, 2)}
    assert {t.offset % 2 for t in to_momentum(odd_p(s)).terms} == {F(1), F(3, 2)}


def test_refine_keeps_distribution():
    params = ModelParams(N=2)
    s = single(params, 1, "1/4", "1/3", 1.0)
    fine = refine(s, F(3))
    assert len(fine.terms) == 3
    assert all(t.spacing == 3 for t in fine.terms)
    assert allclose(fine, s)
    with pytest.raises(CombError):
        refine(s, F(3, 2))


@pytest.mark.parametrize("N", [1, 2, 5])
def test_eval_kernel_special_values(N):
    assert eval_kernel(0.3, 0.3, N) == N
    assert abs(eval_kernel(0.0, 1.0, N)) < 1e-12


def _mp_kernel(x, y, N):
    mpmath.mp.dps = 40
    d = mpmath.mpf(x) - mpmath.mpf(y)
    if d == 0:
        return mpmath.mpc(N)
    return mpmath.sin(mpmath.pi * N * d) / (mpmath.pi * d) * mpmath.exp(-(mpmath.pi * N / 2) * (d * d + 1j * d))


@pytest.mark.parametrize("N", [1, 2, 3, 8])
def test_eval_kernel_against_high_precision(N):
    for x, y in [(0, F(1, 2 * N)), (F(1, 3), F(-2, 5)), (F(7, 8), F(1, 8)), (0, F(3, 2))]:
        ref = complex(_mp_kernel(F(x).numerator / mpmath.mpf(F(x).denominator),
                                 F(y).numerator / mpmath.mpf(F(y).denominator), N))
        assert abs(eval_kernel(float(x), float(y), N) - ref) < 1e-12
        assert abs(kernel_matrix([F(x)], [F(y)], N)[0, 0] - ref) < 1e-12


def test_kernel_matrix_exact_zeros_on_lattice():
    for N in (1, 3, 4):
        m = kernel_matrix([F(0), F(1, N)], [F(5), F(-3), F(7, N)], N)
        assert np.all(m == 0)


def test_kernel_form_unit_norm_n1(tight_params):
    phi = position_basis(tight_params, Theta.of(0, 0), 0)
    assert abs(kernel_form(phi, phi) - 1) < 1e-10


def test_norm_zero_only_for_empty(params):
    empty = make_state(params, [])
    assert norm(empty) == 0.0
    phi = position_basis(params, Theta.of("1/3", "1/5"), 0)
    assert norm(phi) == pytest.approx(1.0, abs=1e-8)


def test_commutation_identities(rng):
    for N in range(1, 6):
        params = ModelParams(N=N)
        for _ in range(25):
            s = random_state(rng, params)
            for name, lhs, rhs in COMMUTATORS:
                assert distance(lhs(s), rhs(s)) < 1e-12, name


def test_subtract_self_is_empty(rng):
    params = ModelParams(N=2)
    s = random_state(rng, params)
    assert subtract(s, s).is_empty


def test_json_codec():
    params = ModelParams(N=3)
    s = make_state(params, [Comb(F(1, 2), F(1, 6), F(2, 3), 0.25 - 1.5j), Comb(F(1), F(0), F(0), 1.0)])
    text = state_to_json(s)
    assert '"1/6"' in text
    assert state_from_json(text) == s


def test_norm_counts_support_outside_unit_cell():
    params = ModelParams(N=1)
    s = single(params, 2, 1, "1/2", 2.0)
    assert support_period(s) == 2
    assert norm(s) == pytest.approx(math.sqrt(2), abs=1e-12)


def test_kernel_form_separates_translation_phases():
    params = ModelParams(N=2)
    periodic = single(params, 1, 0)
    antiperiodic = single(params, 1, 0, "1/2")
    assert kernel_form(periodic, antiperiodic) == 0
    # refined to spacing 2, only the even sub-comb of ``periodic`` meets ``even``
    even = single(params, 2, 0)
    assert kernel_form(periodic, even) == pytest.approx(1.0, abs=1e-12)
