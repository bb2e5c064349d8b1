import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fint.core import (
    IntegralResult,
    Interpolation,
    Method,
    Path,
    Projection,
    TimeGrid,
    coarsen,
    grid_from_json,
    grid_to_json,
    path_from_json,
    path_to_json,
    project,
)
from fint.errors import DomainError, IncompatibleGridError, ValidationError


def test_zero_path_projects_to_zero():
    grid = TimeGrid(0.0, 1.0, [0.2, 0.5, 1.0])
    out = project(Path.zero(0.0, 1.0, m=2), Projection(grid, 2))
    assert out.shape == (6,)
    assert np.all(out == 0)


def test_identity_path():
    path = Path.from_function(lambda t: t, [0.0, 0.5, 1.0])
    out = project(path, Projection(TimeGrid(0.0, 1.0, [0.5, 1.0])))
    assert np.array_equal(out, [0.5, 1.0])


def test_exponential_path_at_knots():
    times = [0.0, np.pi / 2, np.pi]
    path = Path.from_function(lambda t: np.exp(1j * t), times)
    out = project(path, Projection(TimeGrid(0.0, np.pi, [np.pi / 2, np.pi])))
    assert abs(out[0] - 1j) < 1e-15
    assert abs(out[1] + 1) < 1e-15


def test_component_layout():
    path = Path([0.0, 1.0], [[0, 0], [1, 10]])
    out = project(path, Projection(TimeGrid(0.0, 1.0, [0.5, 1.0]), 2))
    # component (i, k) sits at i*m + k
    assert np.allclose(out, [0.5, 5.0, 1.0, 10.0])


def test_piecewise_constant_holds_left_value():
    path = Path([0.0, 0.5, 1.0], [0.0, 2.0, 4.0], Interpolation.CONSTANT)
    assert path(0.75)[0] == 2.0
    assert path(1.0)[0] == 4.0


def test_domain_error_outside_path():
    path = Path([0.0, 0.5], [0.0, 1.0])
    with pytest.raises(DomainError):
        project(path, Projection(TimeGrid(0.0, 1.0, [0.25, 1.0])))


def test_grid_validation():
    with pytest.raises(ValidationError):
        TimeGrid(1.0, 0.0, [0.5])
    with pytest.raises(ValidationError):
        TimeGrid(0.0, 1.0, [0.5, 0.4])
    with pytest.raises(ValidationError):
        TimeGrid(0.0, 1.0, [0.0, 0.5])
    with pytest.raises(ValidationError):
        TimeGrid(0.0, 1.0, [0.5, 1.5])


def test_uniform_grid_ends_at_tb():
    g = TimeGrid.uniform(0.0, 1.0, 3)
    assert g.points[-1] == 1.0
    assert g.n == 3
    assert g.is_uniform()


def test_coarsen_examples():
    fine = Projection(TimeGrid(0.0, 3.0, [1.0, 2.0, 3.0]))
    P = coarsen(fine, Projection(TimeGrid(0.0, 3.0, [2.0])))
    assert np.array_equal(P, [[0.0, 1.0, 0.0]])
    assert np.array_equal(coarsen(fine, fine), np.eye(3))


def test_coarsen_random_path():
    rng = np.random.default_rng(3)
    fine = Projection(TimeGrid(0.0, 1.0, [0.25, 0.5, 0.75, 1.0]))
    coarse = Projection(TimeGrid(0.0, 1.0, [0.5, 1.0]))
    times = np.concatenate(([0.0], np.sort(rng.uniform(0, 1, 5)), [1.0]))
    path = Path(times, np.concatenate(([0.0], rng.standard_normal(6))))
    assert np.array_equal(coarsen(fine, coarse) @ project(path, fine), project(path, coarse))


def test_coarsen_rejects_non_subset():
    fine = Projection(TimeGrid(0.0, 1.0, [0.5, 1.0]))
    with pytest.raises(IncompatibleGridError):
        coarsen(fine, Projection(TimeGrid(0.0, 1.0, [0.3])))
    with pytest.raises(IncompatibleGridError):
        coarsen(fine, Projection(TimeGrid(0.0, 1.0, [0.5]), 2))


def test_integral_result_invariants():
    with pytest.raises(ValidationError):
        IntegralResult(1.0, -1e-3, Method.QUADRATURE, 8)
    with pytest.raises(ValidationError):
        IntegralResult(1.0, 0.1, Method.MONTE_CARLO, 100)
    r = IntegralResult(1.0, 0.1, "monte_carlo", 100, seed=5)
    assert r.method is Method.MONTE_CARLO and r.seed == 5
    assert r.within(1.05) and not r.within(1.2)


def test_json_roundtrip_is_exact():
    g = TimeGrid(0.0, 1.0, [0.1, 1.0 / 3.0, 1.0])
    g2 = grid_from_json(json.dumps(grid_to_json(g)))
    assert np.array_equal(g.points, g2.points)
    p = Path([0.0, 0.1, 1.0 / 3.0], [[0, 0], [1 + 2j, 3], [0.1, -1j]], Interpolation.CONSTANT)
    p2 = path_from_json(json.dumps(path_to_json(p)))
    assert np.array_equal(p.times, p2.times) and np.array_equal(p.values, p2.values)
    assert p2.interpolation is Interpolation.CONSTANT


def test_json_basepoint_mismatch():
    obj = path_to_json(Path([0.0, 1.0], [0.0, 1.0]))
    obj["basepoint"] = [[1.0, 0.0]]
    with pytest.raises(ValidationError):
        path_from_json(obj)


def test_values_immutable():
    p = Path([0.0, 1.0], [0.0, 1.0])
    with pytest.raises(ValueError):
        p.values[0, 0] = 3.0


dyadic = st.integers(min_value=1, max_value=32).map(lambda k: k / 32.0)


@st.composite
def nested_grids(draw):
    fine = sorted(set(draw(st.lists(dyadic, min_size=2, max_size=12))) | {1.0})
    mid = sorted(draw(st.sets(st.sampled_from(fine), min_size=1)))
    coarse = sorted(draw(st.sets(st.sampled_from(mid), min_size=1)))
    return fine, mid, coarse


@st.composite
def knot_paths(draw, m):
    k = draw(st.integers(min_value=1, max_value=8))
    inner = sorted(set(draw(st.lists(st.floats(0.001, 0.999), min_size=k, max_size=k))))
    times = [0.0] + inner + [1.0]
    vals = draw(
        st.lists(
            st.lists(st.complex_numbers(max_magnitude=1e3, allow_nan=False), min_size=m, max_size=m),
            min_size=len(times),
            max_size=len(times),
        )
    )
    interp = draw(st.sampled_from(list(Interpolation)))
    return Path(times, vals, interp)


@settings(max_examples=60, deadline=None)
@given(data=st.data())
def test_projective_consistency_property(data):
    fine, mid, coarse = data.draw(nested_grids())
    m = data.draw(st.integers(1, 3))
    path = data.draw(knot_paths(m))
    pf, pm, pc = (Projection(TimeGrid(0.0, 1.0, pts), m) for pts in (fine, mid, coarse))
    P = coarsen(pf, pc)
    assert np.array_equal(P @ project(path, pf), project(path, pc))
    assert np.array_equal(coarsen(pm, pc) @ coarsen(pf, pm), P)
