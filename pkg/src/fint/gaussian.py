"""Gaussian integrators on time-sliced path spaces.

A Gaussian family member is fixed by a mean ``zbar``, a positive quadratic
form ``Q`` (the discretized operator ``D``), a scale ``s`` in the right half
plane and a boundary value ``B(zbar)``.  Its characteristic pair is

    Theta(z, z') = exp(2 pi i <z', z - zbar> - (pi/s) [Q(z - zbar) - B(zbar)])
    Z(z')        = det(s W)^(1/2) exp(-pi s W(z')) exp((pi/s) B(zbar)),  W = Q^-1

and ``int Theta(z, z') dz = Z(z')`` over the real projected coordinates.
Square roots of determinants are taken as ``exp(tr log / 2)`` with principal
logarithms of the eigenvalues, which is the branch continuous from ``s > 0``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import solve_ivp

from .core import IntegralResult, Method, TimeGrid
from .errors import (
    IllConditionedError,
    SpecError,
    UnsupportedCombinationError,
    ValidationError,
)
from .quad import Domain, McConfig, integrate

HERMITIAN_TOL = 1e-12
MAX_CONDITION = 1e14


class Boundary(str, enum.Enum):
    DIRICHLET = "dirichlet"
    NEUMANN_AT_TB = "neumann_at_tb"


@dataclass(frozen=True)
class Continuum:
    """Which continuum operator a discretization approximates."""

    kind: str = "free"  # free | harmonic | custom
    omega: float = 0.0

    def __post_init__(self):
        if self.kind not in ("free", "harmonic", "custom"):
            raise ValidationError(f"unknown continuum kind {self.kind!r}")
        if self.kind == "harmonic" and not self.omega >= 0:
            raise ValidationError("harmonic frequency must be nonnegative")


@dataclass(frozen=True)
class QuadraticFormSpec:
    D: np.ndarray
    boundary: Boundary = Boundary.DIRICHLET
    grid: Optional[TimeGrid] = None
    continuum: Continuum = field(default_factory=lambda: Continuum("custom"))

    def __post_init__(self):
        D = np.array(self.D)
        D = np.atleast_2d(D.astype(complex) if np.iscomplexobj(D) else D.astype(float))
        if D.ndim != 2 or D.shape[0] != D.shape[1]:
            raise ValidationError("D must be a square matrix")
        scale = max(1.0, float(np.max(np.abs(D))))
        if np.max(np.abs(D - D.conj().T)) > HERMITIAN_TOL * scale:
            raise ValidationError("D is not Hermitian")
        try:
            np.linalg.cholesky(D)
        except np.linalg.LinAlgError:
            raise ValidationError("D is not positive definite") from None
        D.setflags(write=False)
        object.__setattr__(self, "D", D)
        object.__setattr__(self, "boundary", Boundary(self.boundary))

    @property
    def d(self) -> int:
        return self.D.shape[0]

    @property
    def is_real(self) -> bool:
        return not np.iscomplexobj(self.D) or bool(np.max(np.abs(self.D.imag)) <= HERMITIAN_TOL)

    def real_form(self) -> np.ndarray:
        """Matrix of ``x -> x^T D x`` on real coordinates (the symmetric real part)."""
        R = np.real(self.D)
        return 0.5 * (R + R.T)


@dataclass(frozen=True)
class GaussianSpec:
    mean: np.ndarray
    form: QuadraticFormSpec
    s: complex = 1.0
    boundary_value: complex = 0.0

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=complex if np.iscomplexobj(self.mean) else float))
        if mean.shape != (self.form.d,):
            raise ValidationError(f"mean has shape {mean.shape}, form has d={self.form.d}")
        mean.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "s", complex(self.s))
        check_scale(self.s)

    @classmethod
    def simple(cls, Q, s=1.0, mean=None, boundary_value=0.0) -> "GaussianSpec":
        form = QuadraticFormSpec(np.atleast_2d(Q))
        mean = np.zeros(form.d) if mean is None else mean
        return cls(mean, form, s, boundary_value)

    @property
    def d(self) -> int:
        return self.form.d

    def W(self) -> np.ndarray:
        return covariance(self.form)


def check_scale(s: complex, allow_imaginary: bool = False) -> None:
    s = complex(s)
    if s == 0 or not np.isfinite(s):
        raise SpecError(f"scale s={s} must be a finite nonzero complex number")
    if s.real < 0 or (s.real == 0 and not allow_imaginary):
        raise SpecError(f"scale s={s} must have positive real part")


def sqrt_det(M: np.ndarray) -> complex:
    """``det(M)^(1/2)`` as ``exp(tr log(M) / 2)`` on principal eigenvalue logs."""
    ev = np.linalg.eigvals(np.atleast_2d(M))
    return complex(np.exp(0.5 * np.sum(np.log(ev.astype(complex)))))


def build_operator(
    continuum: Continuum,
    grid: TimeGrid,
    boundary: Boundary = Boundary.DIRICHLET,
) -> QuadraticFormSpec:
    """Second-difference discretization of ``-d^2/dt^2 (+ omega^2)``.

    The matrix is that of the sliced action ``sum_i (x_i - x_{i-1})^2 / h_i``
    (plus ``omega^2 * sum_i w_i x_i^2`` with trapezoid weights ``w_i``) with
    ``x(t_a) = 0``.  For ``dirichlet`` the path is also pinned at ``t_b``, so
    the unknowns are the grid points strictly before ``t_b`` (``t_b`` is
    dropped if present).  For ``neumann_at_tb`` the endpoint is free and the
    grid must end at ``t_b``.
    """
    boundary = Boundary(boundary)
    if continuum.kind == "custom":
        raise ValidationError("custom operators are built by constructing QuadraticFormSpec directly")
    t = np.concatenate(([grid.t_a], grid.points))
    if boundary is Boundary.DIRICHLET:
        if t[-1] != grid.t_b:
            t = np.append(t, grid.t_b)
        h = np.diff(t)
        n = h.size - 1
        if n < 1:
            raise ValidationError("a Dirichlet grid needs at least one interior point")
        inv = 1.0 / h
        main = inv[:-1] + inv[1:]
        off = -inv[1:-1]
        mass_w = 0.5 * (h[:-1] + h[1:])
    else:
        if not grid.is_uniform():
            raise UnsupportedCombinationError("neumann_at_tb requires a uniform grid")
        if grid.points[-1] != grid.t_b:
            raise ValidationError("neumann_at_tb requires the grid to end at t_b")
        h = np.diff(t)
        n = h.size
        inv = 1.0 / h
        main = inv.copy()
        main[:-1] += inv[1:]
        off = -inv[1:]
        mass_w = 0.5 * (h + np.append(h[1:], 0.0))
    if n < 1:
        raise ValidationError("grid too small")
    D = np.diag(main) + np.diag(off, 1) + np.diag(off, -1)
    if continuum.kind == "harmonic":
        D = D + np.diag(continuum.omega**2 * mass_w)
    return QuadraticFormSpec(D, boundary, grid, continuum)


def covariance(form: QuadraticFormSpec) -> np.ndarray:
    """``W = D^-1``, symmetrized; refuses condition numbers above 1e14."""
    D = form.D
    cond = np.linalg.cond(D)
    if not np.isfinite(cond) or cond > MAX_CONDITION:
        raise IllConditionedError(f"condition number {cond:.3g} exceeds {MAX_CONDITION:g}")
    W = np.linalg.inv(D)
    return 0.5 * (W + W.conj().T)


def log_det_ratio(num: QuadraticFormSpec, den: QuadraticFormSpec) -> float:
    s1, l1 = np.linalg.slogdet(num.D)
    s2, l2 = np.linalg.slogdet(den.D)
    if s1 != s2:
        raise ValidationError("determinants differ in sign")
    return float(l1 - l2)


def det_ratio(omega: float, grid: TimeGrid, boundary: Boundary = Boundary.DIRICHLET) -> float:
    """``det(D_omega) / det(D_0)`` at fixed discretization."""
    d_w = build_operator(Continuum("harmonic", omega), grid, boundary)
    d_0 = build_operator(Continuum("free"), grid, boundary)
    return float(np.exp(log_det_ratio(d_w, d_0)))


def det_gelfand_yaglom(omega: float, T: float) -> float:
    """Continuum determinant ratio from the initial-value problem.

    Solves ``u'' = omega^2 u``, ``u(0) = 0``, ``u'(0) = 1`` and returns
    ``u(T) / T``, the ratio against the free solution ``u_0(T) = T``.
    """
    if not T > 0:
        raise ValidationError("T must be positive")
    if not omega >= 0:
        raise ValidationError("omega must be nonnegative")
    if omega == 0:
        return 1.0
    sol = solve_ivp(
        lambda _t, y: [y[1], omega**2 * y[0]],
        (0.0, T),
        [0.0, 1.0],
        method="DOP853",
        rtol=1e-13,
        atol=1e-15,
    )
    return float(sol.y[0, -1] / T)


def _real_form(spec: GaussianSpec) -> np.ndarray:
    if not spec.form.is_real:
        raise SpecError("projected integration needs a real symmetric form; realify complex forms first")
    return spec.form.real_form()


def _integrability(Q: np.ndarray, s: complex) -> np.ndarray:
    A = (1.0 / s).real * Q
    try:
        return np.linalg.cholesky(A)
    except np.linalg.LinAlgError:
        raise SpecError(f"Re((pi/s) Q) is not positive definite for s={s}") from None


def closed_form_z(spec: GaussianSpec, zprime) -> complex:
    Q = _real_form(spec)
    _integrability(Q, spec.s)
    W = np.linalg.inv(Q)
    zp = np.atleast_1d(np.asarray(zprime, dtype=complex))
    s = spec.s
    return complex(
        sqrt_det(s * W) * np.exp(-np.pi * s * (zp @ W @ zp)) * np.exp((np.pi / s) * spec.boundary_value)
    )


def theta(spec: GaussianSpec, z: np.ndarray, zprime) -> np.ndarray:
    """``Theta(z, z')`` at real points ``z`` of shape ``(N, d)``."""
    return np.exp(log_theta(spec, z, zprime))


def log_theta(spec: GaussianSpec, z: np.ndarray, zprime) -> np.ndarray:
    Q = _real_form(spec)
    zp = np.atleast_1d(np.asarray(zprime, dtype=complex))
    x = np.atleast_2d(z) - spec.mean
    quad = np.einsum("ni,ij,nj->n", x, Q, x)
    return 2j * np.pi * (x @ zp) - (np.pi / spec.s) * (quad - spec.boundary_value)


def default_order(d: int) -> int:
    return {1: 128, 2: 96, 3: 64, 4: 32, 5: 16, 6: 12}.get(d, 8)


def char_pair(spec: GaussianSpec, zprime, order: Optional[int] = None, seed: int = 0):
    """Numerically integrated ``Theta`` and the closed-form ``Z`` at ``zprime``.

    The integral runs over ``R^d`` after the substitution ``z = zbar + L^-T y``
    with ``L L^T = Re(1/s) Q``, which turns the modulus of ``Theta`` into the
    unit Gaussian weight ``exp(-pi |y|^2)`` of the Gauss-Hermite backend.
    Dimensions beyond the tensor budget fall back to Monte Carlo with the
    matching Gaussian proposal.
    """
    zp = np.atleast_1d(np.asarray(zprime, dtype=complex))
    if zp.shape != (spec.d,):
        raise ValidationError(f"zprime has shape {zp.shape}, expected ({spec.d},)")
    Q = _real_form(spec)
    L = _integrability(Q, spec.s)
    LinvT = np.linalg.inv(L).T
    jac = float(np.prod(1.0 / np.diag(L)))

    def integrand(y):
        z = spec.mean + y @ LinvT.T
        return np.exp(log_theta(spec, z, zp) + np.pi * np.sum(y * y, axis=1)) * jac

    d = spec.d
    order = default_order(d) if order is None else order
    mc = McConfig.gaussian(200_000, seed, np.eye(d) / (2 * np.pi))
    result = integrate(integrand, Domain.full_space(d), order=order, mc=mc)
    return result, closed_form_z(spec, zp)


def log_normalization(spec: GaussianSpec) -> complex:
    Q = _real_form(spec)
    L = _integrability(Q, spec.s)
    # W is real positive, so log det(sW) = d Log(s) + log det W branch-exactly
    log_det_w = -2.0 * np.sum(np.log(np.diag(L))) + spec.d * np.log((1.0 / spec.s).real)
    return complex(0.5 * (spec.d * np.log(spec.s) + log_det_w) + (np.pi / spec.s) * spec.boundary_value)


def normalization(spec: GaussianSpec) -> complex:
    """``det(s W)^(1/2) exp((pi/s) B(zbar))``, the total mass of the family member."""
    return complex(np.exp(log_normalization(spec)))


def mean_sum(specs: Sequence[GaussianSpec]) -> complex:
    """Total mass over a finite, user-enumerated set of mean paths."""
    return complex(sum(normalization(sp) for sp in specs))


# Propagators by time slicing -------------------------------------------------


def _check_propagator_scale(s: complex, continuation: bool) -> complex:
    s = complex(s)
    if s.real == 0 and s.imag != 0 and not continuation:
        raise SpecError("oscillatory scale needs continuation=True (analytic continuation from Re(s) > 0)")
    check_scale(s, allow_imaginary=continuation)
    return s


def _slice_coeffs(h: float, mass: float, omega: float):
    return mass / h, 0.5 * mass * omega**2 * h


def _compose(s: complex, widths: np.ndarray, xa: float, xb: float, mass: float, omega: float) -> complex:
    # Exponent kept as -(pi/s) (P x^2 + Qc x + R) in the running endpoint x.
    a, b = _slice_coeffs(widths[0], mass, omega)
    P = a + b
    Qc = -2.0 * a * xa
    R = (a + b) * xa * xa
    log_pref = 0.5 * np.log(complex(mass / (s * widths[0])))
    for h in widths[1:]:
        a, b = _slice_coeffs(h, mass, omega)
        A = P + a + b
        log_pref += 0.5 * np.log(mass / (h * A))
        P, Qc, R = a + b - a * a / A, a * Qc / A, R - Qc * Qc / (4.0 * A)
    return complex(np.exp(log_pref - (np.pi / s) * (P * xb * xb + Qc * xb + R)))


def propagator_closed_form(kind: str, s: complex, T: float, xa: float, xb: float, mass=1.0, omega=0.0) -> complex:
    """Continuum kernel; analytic in ``s`` so valid on the imaginary axis too."""
    s = complex(s)
    if kind == "free" or omega == 0:
        return complex(np.sqrt(mass / (s * T)) * np.exp(-(np.pi / s) * mass * (xb - xa) ** 2 / T))
    wT = omega * T
    action = mass * omega * ((xa * xa + xb * xb) * np.cosh(wT) - 2 * xa * xb) / np.sinh(wT)
    return complex(np.sqrt(mass * omega / (s * np.sinh(wT))) * np.exp(-(np.pi / s) * action))


def propagator(
    kind: str,
    s: complex,
    grid: TimeGrid,
    xa: float,
    xb: float,
    mass: float = 1.0,
    omega: float = 0.0,
    continuation: bool = False,
) -> IntegralResult:
    """Time-sliced kernel ``K(x_a, x_b)`` by iterated exact Gaussian convolution.

    Each slice carries the kernel ``sqrt(m/(s h)) exp(-(pi/s) S_h)`` with
    ``S_h = m (y-x)^2/h + m omega^2 h (x^2 + y^2)/2``.  The free kernel is a
    semigroup, so any slicing reproduces the one-slice value.  For the
    harmonic kind the error estimate is the Richardson difference against
    the half-refined grid (second-order convergence to the continuum).
    """
    if kind not in ("free", "harmonic"):
        raise ValidationError(f"unknown propagator kind {kind!r}")
    if not mass > 0:
        raise ValidationError("mass must be positive")
    s = _check_propagator_scale(s, continuation)
    if grid.points[-1] != grid.t_b:
        raise ValidationError("propagator grids must end at t_b")
    om = omega if kind == "harmonic" else 0.0
    widths = grid.widths
    value = _compose(s, widths, xa, xb, mass, om)
    err = 16 * widths.size * np.finfo(float).eps * abs(value)
    meta = {"route": "iterated_convolution", "slices": grid.n}
    if kind == "harmonic" and grid.n >= 2 and grid.n % 2 == 0:
        coarse = widths.reshape(-1, 2).sum(axis=1)
        err = max(err, abs(value - _compose(s, coarse, xa, xb, mass, om)) / 3.0)
        meta["error_kind"] = "richardson_vs_half_grid"
    return IntegralResult(value, float(err), Method.CLOSED_FORM, grid.n, meta=meta)


def propagator_by_determinant(
    kind: str, s: complex, grid: TimeGrid, xa: float, xb: float, mass: float = 1.0, omega: float = 0.0
) -> complex:
    """Same sliced kernel via the Gaussian normalization on interior points.

    ``K = prod_i sqrt(m/(s h_i)) * det(s W)^(1/2) * exp(-(pi/s) S_cl)`` with
    ``W = (m D)^-1`` and ``S_cl`` the minimum of the sliced action; this is
    ``normalization`` of the Gaussian member with mean the discrete classical
    path and boundary value ``-S_cl``.
    """
    s = complex(s)
    om = omega if kind == "harmonic" else 0.0
    h = grid.widths
    log_pref = 0.5 * np.sum(np.log(mass / (s * h)))
    if grid.n == 1:
        a, b = _slice_coeffs(h[0], mass, om)
        S = a * (xb - xa) ** 2 + b * (xa * xa + xb * xb)
        return complex(np.exp(log_pref - (np.pi / s) * S))
    cont = Continuum("harmonic", om) if om else Continuum("free")
    form = build_operator(cont, grid, Boundary.DIRICHLET)
    mD = mass * form.D
    rhs = np.zeros(form.d)
    rhs[0] += mass * xa / h[0]
    rhs[-1] += mass * xb / h[-1]
    xbar = np.linalg.solve(mD, rhs)
    a0, b0 = _slice_coeffs(h[0], mass, om)
    an, bn = _slice_coeffs(h[-1], mass, om)
    const = (a0 + b0) * xa * xa + (an + bn) * xb * xb
    S_cl = const - rhs @ xbar
    spec = GaussianSpec(xbar, QuadraticFormSpec(mD, Boundary.DIRICHLET, grid, cont), s, -S_cl)
    return complex(np.exp(log_pref + log_normalization(spec)))


# Limits in the scale parameter -------------------------------------------------


@dataclass
class DeltaLimitReport:
    direction: str
    s_values: np.ndarray
    z_values: np.ndarray
    normalized: np.ndarray
    dual_delta: np.ndarray
    fit_x: str
    fitted_slope: float
    expected_slope: float

    @property
    def slope_rel_error(self) -> float:
        if self.expected_slope == 0:
            return abs(self.fitted_slope)
        return abs(self.fitted_slope - self.expected_slope) / abs(self.expected_slope)


def _check_sequence(s_seq: np.ndarray) -> str:
    if s_seq.size < 2:
        raise ValidationError("need at least two scale values")
    for s in s_seq:
        if not (s.real > 0 and np.isfinite(s)):
            raise SpecError(f"scale {s} leaves the right half plane")
    mags = np.abs(s_seq)
    if np.all(np.diff(mags) < 0):
        return "zero"
    if np.all(np.diff(mags) > 0):
        return "infinity"
    raise ValidationError("scale sequence must be strictly monotone in |s|")


def scale_limit_report(W: np.ndarray, prefactor, power: float, zprime, s_values) -> DeltaLimitReport:
    """Shared engine for the Gaussian and symplectic families.

    ``prefactor(s)`` gives ``Z(0)``, which scales like ``|s|^power``, and
    ``Z(z') = prefactor(s) exp(-pi s W(z'))``.  Toward zero the report fits
    ``log|dual delta|`` against ``1/|s|``; toward infinity ``log|Z|`` against
    ``|s|``.  At ``z' = 0`` both fits are against ``log|s|``.
    """
    s_seq = np.asarray(s_values, dtype=complex)
    direction = _check_sequence(s_seq)
    zp = np.atleast_1d(np.asarray(zprime, dtype=complex))
    Wz = complex(zp @ W @ zp)
    Q = np.linalg.inv(W)
    d = W.shape[0]
    normalized = np.exp(-np.pi * s_seq * Wz)
    # e^{(pi/s)B} may overflow as s -> 0; the fits below never use Z there
    with np.errstate(over="ignore", invalid="ignore"):
        z_values = np.array([prefactor(s) for s in s_seq]) * normalized
    dual = np.array([np.exp(-(np.pi / s) * Wz) / sqrt_det(s * Q) for s in s_seq])
    mean_cos = float(np.mean(s_seq.real / np.abs(s_seq)))
    target = np.abs(dual) if direction == "zero" else np.abs(z_values)
    if np.all(zp == 0):
        fit_x = "log|s|"
        x = np.log(np.abs(s_seq))
        expected = -0.5 * d if direction == "zero" else power
    else:
        fit_x = "1/|s|" if direction == "zero" else "|s|"
        x = 1.0 / np.abs(s_seq) if direction == "zero" else np.abs(s_seq)
        expected = -np.pi * Wz.real * mean_cos
    slope = float(np.polyfit(x, np.log(target), 1)[0])
    return DeltaLimitReport(direction, s_seq, z_values, normalized, dual, fit_x, slope, float(expected))


def delta_limits(spec: GaussianSpec, zprime, s_values) -> DeltaLimitReport:
    """Behaviour of the characteristic pair as ``|s| -> 0`` or ``|s| -> oo``.

    Toward zero, ``Z(z')/Z(0) = exp(-pi s W(z'))`` tends to 1 (exactly 1 at
    ``z' = 0``) while the dual sequence ``det(sQ)^(-1/2) exp(-(pi/s) W(z'))``
    concentrates at ``z' = 0``.  Toward infinity ``Z(z')`` decays like
    ``exp(-pi Re(s) W(z'))`` and grows like ``|s|^(d/2)`` at ``z' = 0``.
    """
    Q = _real_form(spec)
    W = np.linalg.inv(Q)
    B = spec.boundary_value
    return scale_limit_report(
        W, lambda s: sqrt_det(s * W) * np.exp((np.pi / s) * B), 0.5 * spec.d, zprime, s_values
    )
