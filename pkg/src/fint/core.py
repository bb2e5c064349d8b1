"""Time grids, pointed paths, time-slicing projections and shared result types.

A path is stored as a knot sequence plus an interpolation rule, so that
projecting it onto a grid is deterministic and serializable.  Grids never
store the initial time ``t_a``: paths are pointed there and the basepoint
is part of the path, not of the projection.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .errors import DomainError, IncompatibleGridError, ValidationError

__all__ = [
    "TimeGrid",
    "Path",
    "Projection",
    "Method",
    "IntegralResult",
    "project",
    "coarsen",
    "grid_to_json",
    "grid_from_json",
    "path_to_json",
    "path_from_json",
]


def _freeze(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class TimeGrid:
    """Slice times ``t_1 < ... < t_n`` in ``(t_a, t_b]``."""

    t_a: float
    t_b: float
    points: np.ndarray

    def __post_init__(self):
        pts = _freeze(np.array(self.points, dtype=float).reshape(-1))
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "t_a", float(self.t_a))
        object.__setattr__(self, "t_b", float(self.t_b))
        if not self.t_a < self.t_b:
            raise ValidationError(f"t_a={self.t_a} must be < t_b={self.t_b}")
        if pts.size == 0:
            raise ValidationError("a grid needs at least one slice time")
        if np.any(np.diff(pts) <= 0):
            raise ValidationError("grid points must be strictly increasing")
        if pts[0] <= self.t_a or pts[-1] > self.t_b:
            raise ValidationError(f"grid points must lie in ({self.t_a}, {self.t_b}]")

    @property
    def n(self) -> int:
        return int(self.points.size)

    @classmethod
    def uniform(cls, t_a: float, t_b: float, n: int) -> "TimeGrid":
        """``n`` equally spaced slices ending at ``t_b``."""
        if n < 1:
            raise ValidationError("n must be positive")
        h = (t_b - t_a) / n
        pts = t_a + h * np.arange(1, n + 1)
        pts[-1] = t_b
        return cls(t_a, t_b, pts)

    @property
    def widths(self) -> np.ndarray:
        """Slice widths ``t_i - t_{i-1}`` with ``t_0 = t_a``."""
        return np.diff(np.concatenate(([self.t_a], self.points)))

    def is_uniform(self, rtol: float = 1e-12) -> bool:
        w = self.widths
        return bool(np.all(np.abs(w - w[0]) <= rtol * abs(w[0])))

    def contains(self, other: "TimeGrid") -> bool:
        return bool(np.all(np.isin(other.points, self.points)))


class Interpolation(str, enum.Enum):
    LINEAR = "piecewise-linear"
    CONSTANT = "piecewise-constant"


@dataclass(frozen=True)
class Path:
    """A pointed path ``[t_a, t_end] -> C^m`` given by knots.

    ``times[0]`` is the base time and ``values[0]`` the basepoint.  Between
    knots the path is linearly interpolated, or held constant from the left
    knot for the piecewise-constant rule.  Evaluation at a stored knot time
    returns the stored value bit-for-bit.
    """

    times: np.ndarray
    values: np.ndarray
    interpolation: Interpolation = Interpolation.LINEAR

    def __post_init__(self):
        t = np.array(self.times, dtype=float).reshape(-1)
        v = np.array(self.values, dtype=complex)
        if v.ndim == 1:
            v = v[:, None]
        if v.ndim != 2 or v.shape[0] != t.size:
            raise ValidationError("values must have shape (len(times), m)")
        if t.size < 1:
            raise ValidationError("a path needs at least its basepoint knot")
        if np.any(np.diff(t) <= 0):
            raise ValidationError("knot times must be strictly increasing")
        object.__setattr__(self, "times", _freeze(t))
        object.__setattr__(self, "values", _freeze(v))
        object.__setattr__(self, "interpolation", Interpolation(self.interpolation))

    @property
    def m(self) -> int:
        return int(self.values.shape[1])

    @property
    def t_a(self) -> float:
        return float(self.times[0])

    @property
    def basepoint(self) -> np.ndarray:
        return self.values[0]

    @classmethod
    def from_function(
        cls,
        fn: Callable[[float], Union[complex, Sequence[complex]]],
        times: Sequence[float],
        interpolation: Interpolation = Interpolation.LINEAR,
    ) -> "Path":
        """Sample ``fn`` at ``times`` (the first being the base time)."""
        vals = [np.atleast_1d(np.asarray(fn(float(t)), dtype=complex)) for t in times]
        return cls(np.asarray(times, dtype=float), np.vstack(vals), interpolation)

    @classmethod
    def zero(cls, t_a: float, t_b: float, m: int = 1) -> "Path":
        return cls([t_a, t_b], np.zeros((2, m), dtype=complex))

    def __call__(self, t: float) -> np.ndarray:
        t = float(t)
        times = self.times
        if t < times[0] or t > times[-1]:
            raise DomainError(f"time {t} outside path domain [{times[0]}, {times[-1]}]")
        j = int(np.searchsorted(times, t, side="right")) - 1
        if times[j] == t or self.interpolation is Interpolation.CONSTANT:
            return self.values[j].copy()
        t0, t1 = times[j], times[j + 1]
        w = (t - t0) / (t1 - t0)
        return self.values[j] + w * (self.values[j + 1] - self.values[j])


@dataclass(frozen=True)
class Projection:
    """The time-slicing map ``x -> (x(t_1), ..., x(t_n))`` for ``C^m``-valued paths."""

    grid: TimeGrid
    m: int = 1

    def __post_init__(self):
        if self.m < 1:
            raise ValidationError("component count m must be >= 1")

    @property
    def dim(self) -> int:
        return self.grid.n * self.m


def project(path: Path, proj: Projection) -> np.ndarray:
    """Evaluate ``path`` at the slice times; component ``(i, k)`` sits at ``i*m + k``."""
    if path.m != proj.m:
        raise ValidationError(f"path has {path.m} components, projection expects {proj.m}")
    if path.t_a != proj.grid.t_a:
        raise DomainError(f"path is pointed at {path.t_a}, grid starts at {proj.grid.t_a}")
    out = np.empty((proj.grid.n, proj.m), dtype=complex)
    for i, t in enumerate(proj.grid.points):
        out[i] = path(t)
    return out.reshape(-1)


def coarsen(fine: Projection, coarse: Projection) -> np.ndarray:
    """Selection matrix ``P`` with ``P @ project(x, fine) == project(x, coarse)``."""
    if fine.m != coarse.m or fine.grid.t_a != coarse.grid.t_a:
        raise IncompatibleGridError("projections differ in component count or base time")
    idx = np.searchsorted(fine.grid.points, coarse.grid.points)
    idx = np.clip(idx, 0, fine.grid.n - 1)
    if not np.array_equal(fine.grid.points[idx], coarse.grid.points):
        raise IncompatibleGridError("coarse grid points are not a subset of the fine grid")
    m = fine.m
    P = np.zeros((coarse.dim, fine.dim))
    for r, i in enumerate(idx):
        for k in range(m):
            P[r * m + k, i * m + k] = 1.0
    return P


class Method(str, enum.Enum):
    CLOSED_FORM = "closed_form"
    QUADRATURE = "quadrature"
    MONTE_CARLO = "monte_carlo"
    SERIES = "series"


@dataclass(frozen=True)
class IntegralResult:
    value: Union[complex, np.ndarray]
    abs_error_estimate: float
    method: Method
    samples_or_order: int
    seed: Optional[int] = None
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "method", Method(self.method))
        if not self.abs_error_estimate >= 0:
            raise ValidationError("abs_error_estimate must be nonnegative")
        if self.method is Method.MONTE_CARLO and self.seed is None:
            raise ValidationError("Monte Carlo results must record their seed")

    def within(self, reference, factor: float = 1.0, floor: float = 0.0) -> bool:
        """True when ``|value - reference| <= factor * error + floor``."""
        diff = np.max(np.abs(np.asarray(self.value) - np.asarray(reference)))
        return bool(diff <= factor * self.abs_error_estimate + floor)


# JSON fixtures: times are decimal strings (repr round-trips binary64 exactly),
# complex numbers are [re, im] pairs.


def _t2s(t: float) -> str:
    return repr(float(t))


def grid_to_json(grid: TimeGrid) -> dict:
    return {
        "t_a": _t2s(grid.t_a),
        "t_b": _t2s(grid.t_b),
        "n": grid.n,
        "points": [_t2s(t) for t in grid.points],
    }


def grid_from_json(obj: Union[dict, str]) -> TimeGrid:
    if isinstance(obj, str):
        obj = json.loads(obj)
    grid = TimeGrid(float(obj["t_a"]), float(obj["t_b"]), [float(p) for p in obj["points"]])
    if "n" in obj and int(obj["n"]) != grid.n:
        raise ValidationError(f"fixture declares n={obj['n']} but lists {grid.n} points")
    return grid


def path_to_json(path: Path) -> dict:
    return {
        "knots": [
            {"time": _t2s(t), "value": [[v.real, v.imag] for v in row]}
            for t, row in zip(path.times, path.values)
        ],
        "interpolation": path.interpolation.value,
        "basepoint": [[v.real, v.imag] for v in path.basepoint],
    }


def path_from_json(obj: Union[dict, str]) -> Path:
    if isinstance(obj, str):
        obj = json.loads(obj)
    knots = obj["knots"]
    times = [float(k["time"]) for k in knots]
    values = [[complex(re, im) for re, im in k["value"]] for k in knots]
    path = Path(times, values, obj.get("interpolation", Interpolation.LINEAR.value))
    if "basepoint" in obj:
        bp = np.array([complex(re, im) for re, im in obj["basepoint"]])
        if not np.array_equal(bp, path.basepoint):
            raise ValidationError("declared basepoint does not match the first knot")
    return path
