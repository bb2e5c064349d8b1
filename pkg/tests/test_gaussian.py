import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fint.core import Method, TimeGrid
from fint.errors import IllConditionedError, SpecError, UnsupportedCombinationError, ValidationError
from fint.gaussian import (
    Boundary,
    Continuum,
    GaussianSpec,
    QuadraticFormSpec,
    build_operator,
    char_pair,
    closed_form_z,
    covariance,
    delta_limits,
    det_gelfand_yaglom,
    det_ratio,
    mean_sum,
    normalization,
    propagator,
    propagator_by_determinant,
    propagator_closed_form,
    sqrt_det,
)


def spd(rng, d):
    A = rng.standard_normal((d, d))
    return A @ A.T + d * np.eye(d)


def test_free_operator_stencil():
    g = TimeGrid(0.0, 3.0, [1.0, 2.0, 3.0])
    f = build_operator(Continuum("free"), g)
    assert np.array_equal(f.D, [[2, -1], [-1, 2]])


def test_harmonic_zero_frequency_is_free():
    g = TimeGrid(0.0, 1.0, [0.1, 0.35, 0.6, 1.0])
    a = build_operator(Continuum("harmonic", 0.0), g).D
    b = build_operator(Continuum("free"), g).D
    assert np.array_equal(a, b)


def test_neumann_needs_uniform_grid():
    with pytest.raises(UnsupportedCombinationError):
        build_operator(Continuum("free"), TimeGrid(0.0, 1.0, [0.3, 1.0]), Boundary.NEUMANN_AT_TB)


def test_det_ratio_tends_to_sinh():
    r = det_ratio(1.0, TimeGrid.uniform(0.0, 1.0, 2001))
    assert abs(r - math.sinh(1.0)) < 1e-3


def test_gelfand_yaglom_oracle():
    assert det_gelfand_yaglom(0.0, 2.0) == 1.0
    assert abs(det_gelfand_yaglom(1.0, 1.0) - 1.1752011936438014) < 1e-10
    assert abs(det_gelfand_yaglom(2.0, 0.5) - math.sinh(1.0)) < 1e-10
    with pytest.raises(ValidationError):
        det_gelfand_yaglom(1.0, 0.0)


def test_covariance_examples():
    assert np.allclose(covariance(QuadraticFormSpec(np.eye(3))), np.eye(3))
    assert np.allclose(covariance(QuadraticFormSpec(np.diag([2.0, 4.0]))), np.diag([0.5, 0.25]))


def test_covariance_is_bridge_kernel():
    # pinned at both ends, the discrete free covariance is t_i (T - t_j) / T
    g = TimeGrid.uniform(0.0, 1.0, 4)
    W = covariance(build_operator(Continuum("free"), g))
    t = np.array([0.25, 0.5, 0.75])
    lo, hi = np.minimum.outer(t, t), np.maximum.outer(t, t)
    assert np.allclose(W, lo * (1 - hi), atol=1e-14)
    D = build_operator(Continuum("free"), g).D
    assert np.allclose(D @ W, np.eye(3), atol=1e-10)


def test_covariance_ill_conditioned():
    with pytest.raises(IllConditionedError):
        covariance(QuadraticFormSpec(np.diag([1.0, 1e-15])))


def test_form_validation():
    with pytest.raises(ValidationError):
        QuadraticFormSpec([[1.0, 0.5], [0.0, 1.0]])
    with pytest.raises(ValidationError):
        QuadraticFormSpec([[1.0, 0.0], [0.0, -1.0]])


def test_char_pair_unit():
    r, z = char_pair(GaussianSpec.simple([[1.0]]), [0.0])
    assert abs(r.value - 1) < 1e-12 and abs(z - 1) < 1e-15


def test_char_pair_fourier_oracle():
    for k in (0.3, 1.0, 1.7):
        r, z = char_pair(GaussianSpec.simple([[1.0]]), [k])
        assert abs(z - math.exp(-math.pi * k * k)) < 1e-15
        assert r.within(z, floor=1e-14)


def test_char_pair_frozen_complex_scale():
    # reference from arbitrary-precision quadrature of the defining integral
    spec = GaussianSpec.simple([[2.0, 0.3], [0.3, 1.0]], s=1.5 + 0.5j, mean=[0.1, -0.2], boundary_value=0.3)
    ref = 1.781133815823203696 + 0.16752520612473686333j
    r, z = char_pair(spec, [0.2, 0.1])
    assert abs(z - ref) < 1e-13
    assert abs(r.value - ref) < 1e-11


def test_char_pair_random_spd():
    rng = np.random.default_rng(5)
    spec = GaussianSpec.simple(spd(rng, 2), s=2.0, mean=rng.standard_normal(2))
    r, z = char_pair(spec, rng.standard_normal(2))
    assert r.within(z, floor=1e-13)


def test_char_pair_high_dimension_uses_monte_carlo():
    spec = GaussianSpec.simple(np.eye(8))
    r, z = char_pair(spec, np.zeros(8), seed=3)
    assert r.method is Method.MONTE_CARLO and r.seed == 3
    assert abs(r.value - z) < 5 * r.abs_error_estimate + 1e-12


def test_char_pair_rejects_bad_scale():
    with pytest.raises(SpecError):
        GaussianSpec.simple([[1.0]], s=-1.0)
    with pytest.raises(SpecError):
        GaussianSpec.simple([[1.0]], s=1j)
    # Re(1/s) > 0 always holds in the right half plane, so non-integrable
    # cases only come from non-real forms
    herm = GaussianSpec(np.zeros(2), QuadraticFormSpec([[2, 1j], [-1j, 2]]))
    with pytest.raises(SpecError):
        closed_form_z(herm, [0, 0])


def test_normalization_examples():
    assert abs(normalization(GaussianSpec.simple([[1.0]], s=4.0)) - 2.0) < 1e-15
    assert abs(normalization(GaussianSpec.simple(np.eye(3))) - 1.0) < 1e-15
    assert abs(normalization(GaussianSpec.simple(np.diag([1.0, 2.0]))) - 2**-0.5) < 1e-15


def test_normalization_translation_invariant():
    rng = np.random.default_rng(2)
    Q = spd(rng, 3)
    a = normalization(GaussianSpec.simple(Q, s=0.7 + 0.2j))
    b = normalization(GaussianSpec.simple(Q, s=0.7 + 0.2j, mean=rng.standard_normal(3)))
    assert abs(a - b) < 1e-10


def test_mean_sum_adds_members():
    specs = [GaussianSpec.simple([[1.0]], s=4.0), GaussianSpec.simple([[1.0]], s=4.0, mean=[3.0])]
    assert abs(mean_sum(specs) - 4.0) < 1e-14


def test_sqrt_det_branch_continuity():
    rng = np.random.default_rng(9)
    W = np.linalg.inv(spd(rng, 3))
    args = np.radians(np.arange(-89, 90, 2.0))
    vals = [sqrt_det(cmath.rect(1.3, a) * W) for a in args]
    jumps = np.abs(np.diff(vals)) / np.abs(vals[:-1])
    assert np.max(jumps) < 0.1


def test_free_propagator_semigroup():
    s = 0.8 + 0.3j
    one = propagator("free", s, TimeGrid(0.0, 1.0, [1.0]), 0.2, -0.4).value
    for n in (2, 7, 64):
        val = propagator("free", s, TimeGrid.uniform(0.0, 1.0, n), 0.2, -0.4).value
        assert abs(val - one) < 1e-12
    rng = np.random.default_rng(0)
    g = TimeGrid(0.0, 1.0, np.append(np.sort(rng.uniform(0, 1, 9)), 1.0))
    assert abs(propagator("free", s, g, 0.2, -0.4).value - one) < 1e-12
    assert abs(one - propagator_closed_form("free", s, 1.0, 0.2, -0.4)) < 1e-14


def test_harmonic_propagator_prefactor():
    g = TimeGrid.uniform(0.0, 1.0, 2000)
    h = propagator("harmonic", 1.0, g, 0.0, 0.0, omega=1.0).value
    f = propagator("free", 1.0, g, 0.0, 0.0).value
    assert abs(h / f - math.sinh(1.0) ** -0.5) < 1e-3


def test_harmonic_continuum_frozen():
    # arbitrary-precision evaluation of the Mehler kernel
    ref = 0.21151952982317716345
    assert abs(propagator_closed_form("harmonic", 1.0, 0.8, 0.4, -0.2, omega=1.3) - ref) < 1e-14
    r = propagator("harmonic", 1.0, TimeGrid.uniform(0.0, 0.8, 512), 0.4, -0.2, omega=1.3)
    assert abs(r.value - ref) < max(2 * r.abs_error_estimate, 1e-6)


def test_propagator_routes_agree():
    g = TimeGrid(0.0, 1.0, [0.2, 0.45, 0.7, 1.0])
    for kind, om in (("free", 0.0), ("harmonic", 1.7)):
        a = propagator(kind, 0.9 + 0.4j, g, 0.3, 0.5, mass=1.3, omega=om).value
        b = propagator_by_determinant(kind, 0.9 + 0.4j, g, 0.3, 0.5, mass=1.3, omega=om)
        assert abs(a - b) < 1e-12 * abs(a)


def test_propagator_continuation():
    g = TimeGrid.uniform(0.0, 1.0, 8)
    with pytest.raises(SpecError):
        propagator("free", 1j, g, 0.0, 0.5)
    val = propagator("free", 1j, g, 0.0, 0.5, continuation=True).value
    assert abs(val - propagator_closed_form("free", 1j, 1.0, 0.0, 0.5)) < 1e-12


def test_delta_limits_to_zero():
    rep = delta_limits(GaussianSpec.simple([[1.0]]), [0.0], 10.0 ** -np.arange(1, 7))
    assert rep.direction == "zero"
    assert np.all(rep.normalized == 1)
    rep = delta_limits(GaussianSpec.simple([[1.0]]), [1.0], 10.0 ** -np.linspace(0.3, 1.5, 6))
    oracle = np.exp(-np.pi / rep.s_values) * rep.s_values**-0.5
    assert np.allclose(rep.dual_delta, oracle, rtol=1e-12)
    assert np.all(np.diff(np.abs(rep.dual_delta)) < 0)


def test_delta_limits_to_infinity():
    rep = delta_limits(GaussianSpec.simple([[1.0]]), [1.0], np.linspace(1, 20, 12))
    assert rep.direction == "infinity"
    assert np.all(np.diff(np.abs(rep.z_values)) < 0)
    # log|Z| carries a (1/2) log|s| term the linear fit absorbs
    assert rep.slope_rel_error < 0.05
    rep = delta_limits(GaussianSpec.simple(np.eye(2)), [0.0, 0.0], np.linspace(1, 20, 12))
    assert abs(rep.fitted_slope - 1.0) < 1e-10


def test_delta_limits_validation():
    with pytest.raises(ValidationError):
        delta_limits(GaussianSpec.simple([[1.0]]), [0.0], [1.0, 3.0, 2.0])
    with pytest.raises(SpecError):
        delta_limits(GaussianSpec.simple([[1.0]]), [0.0], [1.0, -3.0])


@settings(max_examples=40, deadline=None)
@given(
    d=st.integers(1, 4),
    seed=st.integers(0, 2**31),
    arg=st.floats(-1.4, 1.4),
    mag=st.floats(0.1, 10.0),
)
def test_det_w_det_q_identity(d, seed, arg, mag):
    Q = spd(np.random.default_rng(seed), d)
    s = cmath.rect(mag, arg)
    prod = sqrt_det(s * np.linalg.inv(Q)) * sqrt_det(s * Q) * s**-d
    assert abs(prod - 1) < 1e-10
