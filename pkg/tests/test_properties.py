"""Randomized invariants that cut across modules."""

import math

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from scipy import special

from fint.gamma_poisson import lower_incomplete, lower_incomplete_cf
from fint.group_algebra import affine_fixtures, involution
from fint.symplectic import pfaffian, pfaffian_expansion, random_skew

seeds = st.integers(0, 2**31)


@settings(max_examples=80, deadline=None)
@given(k=st.integers(1, 6), seed=seeds)
def test_pfaffian_squares_to_det(k, seed):
    M = random_skew(2 * k, np.random.default_rng(seed))
    det = np.linalg.det(M)
    assert abs(pfaffian(M) ** 2 - det) <= 1e-10 * abs(det)


@settings(max_examples=80, deadline=None)
@given(k=st.integers(1, 6), seed=seeds)
def test_pfaffian_congruence(k, seed):
    rng = np.random.default_rng(seed)
    M = random_skew(2 * k, rng)
    Q = rng.standard_normal((2 * k, 2 * k)) + 2 * np.eye(2 * k)
    lhs = pfaffian(Q.T @ M @ Q)
    rhs = np.linalg.det(Q) * pfaffian(M)
    assert abs(lhs - rhs) <= 1e-8 * abs(rhs)


@settings(max_examples=30, deadline=None)
@given(k=st.integers(1, 4), seed=seeds)
def test_pfaffian_sign_matches_expansion(k, seed):
    M = random_skew(2 * k, np.random.default_rng(seed))
    ref = pfaffian_expansion(M)
    assert abs(pfaffian(M) - ref) <= 1e-10 * max(1.0, abs(ref))


@settings(max_examples=60, deadline=None)
@given(alpha=st.floats(0.2, 10.0), ratio=st.floats(0.4, 10.0))
def test_series_matches_continued_fraction(alpha, ratio):
    # the fraction is a reliable oracle for c >= 0.4 alpha
    c = ratio * alpha
    a, b = lower_incomplete(alpha, c), lower_incomplete_cf(alpha, c)
    assert abs(a - b) <= 1e-10 * abs(b)


@settings(max_examples=60, deadline=None)
@given(alpha=st.floats(0.2, 10.0), c=st.floats(0.01, 25.0))
def test_series_matches_regularized_gamma(alpha, c):
    ref = special.gammainc(alpha, c) * math.gamma(alpha)
    assert abs(lower_incomplete(alpha, c) - ref) <= 1e-12 * ref


@settings(max_examples=10, deadline=None)
@given(x=st.floats(0.0, 1.0), y=st.floats(0.0, 1.0))
def test_affine_involution_twice(x, y):
    G, fx = affine_fixtures()
    F = fx[1]
    lo, hi = F.box
    g = (lo + (hi - lo) * np.array([x, y]))[None, :]
    assert abs(involution(involution(F))(g)[0] - F(g)[0]) <= 1e-14 * max(1.0, abs(F(g)[0]))
