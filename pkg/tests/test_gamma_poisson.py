import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fint.core import TimeGrid
from fint.errors import DivergenceError, SpecError, ValidationError
from fint.gamma_poisson import (
    GammaSpec,
    OperatorHamiltonian,
    PoissonSpec,
    delta_derivative_constant,
    delta_derivative_pairing,
    delta_functional,
    dyson_evolution,
    evolution_expm,
    evolution_ode,
    gamma_closed_form,
    gamma_normalization,
    lower_incomplete,
    lower_incomplete_cf,
    ordered_term_cube,
    poisson_average,
    poisson_average_rate,
    poisson_tail,
    poisson_tail_direct,
    principal_value,
    upper_incomplete,
    upper_incomplete_cf,
    waiting_time_volume,
)

# lower incomplete gamma references from arbitrary-precision evaluation
FROZEN_LOWER = [
    (2.5, 3.0, 0.92227121230783402204),
    (0.5, 0.5, 1.210035619311108903),
    (4.0, 10.0, 5.9379836959444456928),
    (1.0, 2.0, 0.86466471676338730811),
]


def gauss(w):
    return np.exp(-np.pi * np.asarray(w) ** 2)


# --- gamma ----------------------------------------------------------------


def test_gamma_normalization_examples():
    assert abs(gamma_normalization(GammaSpec(1.0, [1.0])) - 1) < 1e-12
    assert abs(gamma_normalization(GammaSpec(2.5, [2.0])) - 2**-2.5) < 1e-12
    assert abs(gamma_normalization(GammaSpec(0.5, [1.0, 4.0])) - 0.5) < 1e-12


def test_gamma_normalization_complex_parameters():
    spec = GammaSpec(1.5 + 0.3j, [1.2 + 0.4j, 0.7])
    assert abs(gamma_normalization(spec) - gamma_closed_form(spec)) < 1e-8


def test_gamma_normalization_guards():
    with pytest.raises(DivergenceError):
        gamma_normalization(GammaSpec(0.0, [1.0]))
    with pytest.raises(SpecError):
        GammaSpec(1.0, [-1.0])
    with pytest.raises(SpecError):
        gamma_normalization(GammaSpec(1.0, [1.0], cutoff=3.0))


@pytest.mark.parametrize("alpha,c,ref", FROZEN_LOWER)
def test_lower_incomplete_frozen(alpha, c, ref):
    assert abs(lower_incomplete(alpha, c) - ref) < 1e-13 * ref
    assert abs(lower_incomplete_cf(alpha, c) - ref) < 1e-12 * ref


def test_lower_incomplete_examples():
    assert abs(lower_incomplete(1, 2) - (1 - math.exp(-2))) < 1e-15
    assert lower_incomplete(3, 0) == 0
    assert abs(lower_incomplete(2, 1) - (1 - 2 / math.e)) < 1e-15


def test_upper_incomplete_examples():
    assert abs(upper_incomplete(1, 0) - 1) < 1e-15
    assert abs(upper_incomplete(1, 2) - math.exp(-2)) < 1e-15
    assert abs(upper_incomplete_cf(1.0, 2.0) - math.exp(-2)) < 1e-15
    for c in (0.3, 2.0, 7.5):
        assert abs(upper_incomplete(3, c) + lower_incomplete(3, c) - 2) < 1e-12


def test_lower_incomplete_divergence():
    with pytest.raises(DivergenceError):
        lower_incomplete(-0.5, 1.0)


def test_principal_value():
    assert principal_value(2.0)["value"] == 0.5
    assert abs(principal_value(1 + 1j)["value"] - (1 - 1j) / 2) < 1e-15
    rep = principal_value(2.0)
    assert rep["monotone"]
    seq = dict(zip(rep["cutoffs"], rep["sequence"]))
    assert abs(seq[30.0] - seq[40.0]) <= 1e-12
    with pytest.raises(ValidationError):
        principal_value(-1.0)


# --- delta functionals ---------------------------------------------------------


def test_delta_functional_gaussian():
    assert abs(delta_functional(gauss, 1e3) - 1) < 1e-2


def test_delta_functional_away_from_zero():
    def bump(w):
        w = np.asarray(w)
        x = (w - 2.0) / 0.5
        return np.where(np.abs(x) < 1, np.clip(1 - x * x, 0, None) ** 8, 0.0)

    assert abs(delta_functional(bump, 1e3)) < 1e-2


def test_delta_functional_linear():
    f = gauss
    g = lambda w: np.cos(w) * np.exp(-np.asarray(w) ** 2)  # noqa: E731
    a, b = 2.0 - 1j, 0.7
    lhs = delta_functional(lambda w: a * f(w) + b * g(w), 200.0)
    rhs = a * delta_functional(f, 200.0) + b * delta_functional(g, 200.0)
    assert abs(lhs - rhs) < 1e-10


def test_delta_functional_validation():
    with pytest.raises(ValidationError):
        delta_functional(gauss, math.inf)
    with pytest.raises(ValidationError):
        delta_functional(lambda w: 1.0 / np.asarray(w) ** 0 * np.nan, 10.0)


def test_delta_derivative_m1_matches_delta():
    a = delta_derivative_pairing(1, gauss)
    assert abs(a - 1) < 1e-12
    assert abs(a - delta_functional(gauss, 1e3)) < 1e-2


def test_delta_derivative_m2_odd_and_even():
    f = lambda w: np.asarray(w) * np.exp(-np.asarray(w) ** 2)  # noqa: E731
    C2 = delta_derivative_constant(2)
    # distributional oracle: C_2 (-1) f'(0) with f'(0) = 1
    assert abs(delta_derivative_pairing(2, f) / C2 - (-1.0)) < 1e-2
    assert abs(delta_derivative_pairing(2, gauss) / C2) < 1e-2


def test_delta_derivative_validation():
    with pytest.raises(ValidationError):
        delta_derivative_pairing(1.5, gauss)
    with pytest.raises(ValidationError):
        delta_derivative_pairing(3, gauss, derivatives=1)


# --- Poisson -------------------------------------------------------------


def test_poisson_tail_examples():
    assert poisson_tail(0, 3.7) == 1.0
    assert abs(poisson_tail(1, 2.0) - (1 - math.exp(-2))) < 1e-15
    assert abs(poisson_tail(3, 1.5) - 0.19115316946194187012) < 1e-15
    assert abs(poisson_tail(10, 5.0) - 0.031828057306204811737) < 1e-15


def test_poisson_tail_matches_direct_sum():
    for c in (0.5, 1.5, 5.0):
        for n in range(11):
            assert abs(poisson_tail(n, c) - poisson_tail_direct(n, c)) < 1e-12


def test_poisson_spec_validation():
    with pytest.raises(ValidationError):
        PoissonSpec(-1, [1.0], 1.0)
    with pytest.raises(ValidationError):
        PoissonSpec(2, [1.0], -1.0)
    with pytest.raises(ValidationError):
        poisson_tail(1.5, 1.0)


def test_waiting_times():
    assert waiting_time_volume(0, 1.3).value == math.exp(-1.3)
    r = waiting_time_volume(1, 2.0, 1000)
    assert abs(r.value - 2 * math.exp(-2)) < 1e-14
    r = waiting_time_volume(3, 1.0, 100_000, seed=42)
    assert abs(r.value - math.exp(-1) / 6) < 3 * r.abs_error_estimate


def test_poisson_average_examples():
    assert poisson_average(lambda t: 0.0, [0.0, 1.0]).value == 1
    r = poisson_average(lambda t: 2.3, [0.0, 1.7])
    assert abs(r.value - np.exp(2.3j * 1.7)) < 1e-12
    r = poisson_average(lambda t: t, TimeGrid.uniform(0.0, 1.0, 4))
    assert abs(r.value - np.exp(0.5j)) < 1e-12


def test_poisson_average_rate():
    rep = poisson_average_rate(lambda t: np.cos(3 * t), 0.0, 0.9)
    assert rep["residual"] < 1e-6


# --- Dyson -----------------------------------------------------------------

U_REF = np.array(
    [
        [0.439983263626648138 + 0.789508230159070859j, 0.145655676041018116 + 0.402338049749919903j],
        [-0.145655676041018116 + 0.402338049749919903j, 0.439983263626648138 - 0.789508230159070859j],
    ]
)


def test_dyson_zero_hamiltonian():
    r = dyson_evolution(OperatorHamiltonian.from_matrix(np.zeros((3, 3))), 5)
    assert np.array_equal(r.U, np.eye(3))


def test_dyson_constant_diagonal():
    H = OperatorHamiltonian.from_matrix(np.diag([1.0, -1.0]))
    r = dyson_evolution(H, 20)
    assert np.max(np.abs(r.U - np.diag([np.exp(1j), np.exp(-1j)]))) < 1e-12
    assert np.max(np.abs(r.U - evolution_expm(H))) < 1e-12


def test_dyson_time_dependent_frozen():
    H = OperatorHamiltonian.named("sz_plus_t_sx")
    r = dyson_evolution(H, 12)
    assert np.max(np.abs(r.U - U_REF)) < 1e-8
    assert np.max(np.abs(evolution_ode(H) - U_REF)) < 1e-11
    assert r.unitarity_drift <= r.truncation_bound


def test_dyson_truncation_bound_holds():
    H = OperatorHamiltonian.named("sz_plus_t_sx")
    ref = evolution_ode(H)
    for N in (2, 4, 8):
        r = dyson_evolution(H, N)
        assert np.max(np.abs(r.U - ref)) <= r.truncation_bound


def test_dyson_ordering_symmetry():
    H = OperatorHamiltonian.named("sz_plus_t_sx")
    for n in (2, 3):
        simplex = dyson_evolution(H, n).terms[n]
        cube = ordered_term_cube(H, n)
        assert np.max(np.abs(simplex - cube)) < 1e-3


def test_hamiltonian_validation():
    with pytest.raises(ValidationError):
        OperatorHamiltonian.from_matrix([[0, 1], [0, 0]])
    with pytest.raises(ValidationError):
        OperatorHamiltonian.named("nope")
    with pytest.raises(ValidationError):
        dyson_evolution(OperatorHamiltonian.from_matrix(np.eye(2)), -1)
    H = OperatorHamiltonian.from_json({"matrix": [[1, [0, 1]], [[0, -1], 2]]})
    assert H.constant[0, 1] == 1j


# --- properties ------------------------------------------------------------


@settings(max_examples=60, deadline=None)
@given(alpha=st.floats(0.1, 8.0), c=st.floats(0.01, 20.0))
def test_incomplete_gamma_identity(alpha, c):
    total = lower_incomplete(alpha, c) + upper_incomplete(alpha, c)
    assert abs(total - math.gamma(alpha)) <= 1e-12 * max(1.0, math.gamma(alpha))


@settings(max_examples=60, deadline=None)
@given(c=st.floats(0.01, 30.0))
def test_poisson_tail_monotone(c):
    vals = np.array([poisson_tail(n, c) for n in range(25)])
    assert np.all(vals >= 0) and np.all(vals <= 1 + 1e-15)
    assert np.all(np.diff(vals) <= 1e-15)


@settings(max_examples=40, deadline=None)
@given(
    alpha=st.floats(0.2, 4.0),
    beta=st.lists(st.floats(0.2, 5.0), min_size=1, max_size=3),
    r=st.floats(0.25, 4.0),
)
def test_gamma_scaling(alpha, beta, r):
    base = gamma_normalization(GammaSpec(alpha, beta))
    scaled = gamma_normalization(GammaSpec(alpha, r * np.asarray(beta)))
    assert abs(scaled - r ** (-alpha * len(beta)) * base) <= 1e-8 * abs(scaled)
