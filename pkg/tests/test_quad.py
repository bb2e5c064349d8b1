import math

import numpy as np
import pytest

from fint.core import Method
from fint.errors import ConfigurationError, IntegrandError, ValidationError
from fint.quad import Domain, McConfig, integrate, integrate_mc, integrate_quad, tensor_rule


def test_gaussian_weight_has_unit_mass():
    for d in (1, 2, 3):
        r = integrate_quad(lambda x: np.ones(len(x)), Domain.full_space(d), 8)
        assert abs(r.value - 1.0) < 1e-13
        assert r.method is Method.QUADRATURE


def test_gaussian_second_moment():
    # int x^2 e^{-pi x^2} dx = 1/(2 pi)
    r = integrate_quad(lambda x: x[:, 0] ** 2, Domain.full_space(1), 16)
    assert abs(r.value - 1 / (2 * np.pi)) < 1e-14


def test_laguerre_moments():
    for p in (0.0, 0.5, 2.0):
        r = integrate_quad(lambda x: x[:, 0] ** 3, Domain.positive_orthant(1, power=p), 12)
        assert abs(r.value - math.gamma(p + 4)) < 1e-10 * math.gamma(p + 4)


def test_box_polynomial_exact():
    r = integrate_quad(lambda x: x[:, 0] ** 5 * x[:, 1] ** 2, Domain.box([0, -1], [2, 1]), 6)
    assert abs(r.value - (64 / 6) * (2 / 3)) < 1e-12


def test_error_estimate_bounds_true_error():
    f = lambda x: np.cos(3 * x[:, 0])  # noqa: E731
    exact = math.exp(-9 / (4 * math.pi))
    for order in (4, 8, 16):
        r = integrate_quad(f, Domain.full_space(1), order)
        assert abs(r.value - exact) <= r.abs_error_estimate + 1e-15


def test_complex_integrand_fourier():
    # Fourier transform of e^{-pi x^2} is itself
    r = integrate_quad(lambda x: np.exp(-2j * np.pi * 0.7 * x[:, 0]), Domain.full_space(1), 40)
    assert abs(r.value - math.exp(-np.pi * 0.49)) < 1e-13


def test_nonfinite_integrand_reports_node():
    with pytest.raises(IntegrandError) as info:
        with np.errstate(divide="ignore"):
            integrate_quad(lambda x: 1.0 / x[:, 0], Domain.box([-1.0], [1.0]), 3)
    assert info.value.node is not None


def test_dimension_and_budget_limits():
    with pytest.raises(ValidationError):
        tensor_rule(Domain.full_space(7), 2)
    with pytest.raises(ValidationError):
        tensor_rule(Domain.full_space(6), 20)
    with pytest.raises(ConfigurationError):
        integrate(lambda x: np.ones(len(x)), Domain.full_space(8))


def test_domain_validation():
    with pytest.raises(ValidationError):
        Domain.box([1.0], [0.0])
    with pytest.raises(ValidationError):
        Domain("box", 1, "gaussian", (0,), (1,))
    with pytest.raises(ValidationError):
        Domain.positive_orthant(1, power=-1.5)


def test_mc_gaussian_mass_in_high_dimension():
    d = 8
    cfg = McConfig.gaussian(20000, seed=7, cov=1 / (2 * np.pi))
    r = integrate(lambda x: np.cos(x[:, 0]), Domain.full_space(d), mc=cfg)
    exact = math.exp(-1 / (4 * np.pi))
    assert r.method is Method.MONTE_CARLO and r.seed == 7
    assert abs(r.value - exact) < 5 * r.abs_error_estimate


def test_mc_is_reproducible():
    cfg = McConfig.uniform(500, seed=11, lo=0.0, hi=1.0)
    f = lambda x: np.sin(x[:, 0]) * x[:, 1]  # noqa: E731
    a = integrate_mc(f, Domain.box([0, 0], [1, 1]), cfg)
    b = integrate_mc(f, Domain.box([0, 0], [1, 1]), cfg)
    assert a.value == b.value and a.abs_error_estimate == b.abs_error_estimate


def test_mc_constant_integrand_has_positive_error():
    cfg = McConfig.exponential(100, seed=1)
    r = integrate_mc(lambda x: np.exp(-0 * x[:, 0]), Domain.positive_orthant(1), cfg)
    assert r.abs_error_estimate > 0


def test_mc_support_checks():
    with pytest.raises(ConfigurationError):
        integrate_mc(lambda x: x[:, 0], Domain.full_space(1), McConfig.exponential(10, 0))
    with pytest.raises(ConfigurationError):
        integrate_mc(lambda x: x[:, 0], Domain.box([0], [2]), McConfig.uniform(10, 0, 0, 1))
    with pytest.raises(ConfigurationError):
        McConfig.uniform(1, 0, 0, 1)
