"""Gamma and Poisson integrator families, delta functionals and the Dyson series.

The real-positive component of the multiplicative-additive map group carries
the multiplicative Haar measure ``dtau/tau`` per projected slice, so that

    (1/Gamma(alpha)) int tau^alpha exp(-beta tau) dtau/tau = beta^-alpha

holds slice by slice and the projected determinant is a plain product.  The
imaginary component ``tau = i u`` carries the additive measure ``du``; its
characteristic kernel ``int exp(-2 pi i omega u) du`` is the delta function,
which is only ever evaluated through pairings with test functions.

Time ordering follows the ``+i`` convention: the evolution operator solves
``U' = i H(t) U`` and later times stand to the left.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional, Sequence, Union

import numpy as np
from numpy.polynomial import chebyshev as C
from numpy.polynomial.hermite import hermgauss
from numpy.polynomial.legendre import leggauss
from scipy import special
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from .core import IntegralResult, Method, TimeGrid
from .errors import (
    DivergenceError,
    DomainError,
    NonConvergenceError,
    SpecError,
    ValidationError,
)
from .quad import Domain, McConfig, integrate_mc

SERIES_RTOL = 1e-16
MAX_SERIES_TERMS = 100_000
CF_TOL = 1e-16
CF_MAX_ITER = 100_000


class GammaMode(str, enum.Enum):
    REAL_POSITIVE = "real_positive"
    IMAGINARY = "imaginary"


@dataclass(frozen=True)
class GammaSpec:
    alpha: complex
    beta: np.ndarray
    cutoff: complex = math.inf
    mode: GammaMode = GammaMode.REAL_POSITIVE

    def __post_init__(self):
        beta = np.atleast_1d(np.asarray(self.beta, dtype=complex))
        if beta.ndim != 1 or beta.size == 0:
            raise ValidationError("beta must be a nonempty vector (one weight per slice)")
        beta.setflags(write=False)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "alpha", complex(self.alpha))
        object.__setattr__(self, "mode", GammaMode(self.mode))
        if self.mode is GammaMode.REAL_POSITIVE and np.any(beta.real <= 0):
            raise SpecError("real-positive mode needs Re(beta_i) > 0 on every slice")

    @property
    def d(self) -> int:
        return int(self.beta.size)


@dataclass(frozen=True)
class PoissonSpec:
    n: int
    beta: np.ndarray
    c: complex
    tau0: Optional[np.ndarray] = None

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 0:
            raise ValidationError("n must be a nonnegative integer")
        object.__setattr__(self, "beta", np.atleast_1d(np.asarray(self.beta, dtype=complex)))
        if complex(self.c).real <= 0:
            raise ValidationError("c must lie in the right half-plane")


# --- gamma normalization --------------------------------------------------


@lru_cache(maxsize=64)
def _genlaguerre(order: int, a: float):
    x, w = special.roots_genlaguerre(order, a)
    return x, w


def gamma_slice(alpha: complex, beta: complex, order: int = 96) -> complex:
    """``(1/Gamma(alpha)) int_0^oo tau^alpha exp(-beta tau) dtau/tau``.

    For real ``alpha`` and mild phase, ``x = Re(beta) tau`` puts the weight
    ``x^(alpha - 1) e^-x`` into a generalized Gauss-Laguerre rule and the
    phase ``exp(-i Im(beta)/Re(beta) x)`` is integrated.  Complex ``alpha`` or
    a strongly oscillating phase goes through panels in ``log tau``.
    """
    alpha, beta = complex(alpha), complex(beta)
    if alpha.real <= 0:
        raise DivergenceError(f"Re(alpha)={alpha.real} <= 0 diverges at tau = 0 without a cutoff")
    if beta.real <= 0:
        raise DivergenceError("Re(beta) <= 0 diverges at tau = oo")
    if alpha.imag != 0 or abs(beta.imag) > 2 * beta.real:
        return _gamma_slice_log(alpha, beta)
    x, w = _genlaguerre(order, alpha.real - 1.0)
    b = beta.imag / beta.real
    integral = np.sum(w * np.exp(-1j * b * x))
    pref = np.exp(-alpha * np.log(beta.real)) / special.gamma(alpha)
    return complex(pref * integral)


def _gamma_slice_log(alpha: complex, beta: complex, order: int = 32) -> complex:
    # x^(i Im alpha) oscillates without bound at 0, so integrate in y = log(x)
    # (the Haar coordinate), where exp(alpha y - beta e^y) is smooth.
    br = beta.real
    lo = -40.0 / alpha.real
    hi = math.log(45.0 / br) + 1.0
    panels = int(np.clip(np.ceil((hi - lo) * (1.0 + abs(alpha) + abs(beta.imag) / br)), 16, 4000))
    y, w = _panel_rule(lo, hi, panels, order)
    vals = np.exp(alpha * y - beta * np.exp(y))
    return complex(np.sum(w * vals) / _gamma_fn(alpha))


def gamma_normalization(spec: GammaSpec, order: int = 96) -> complex:
    """Product over slices of the normalized gamma integrals; equals ``prod beta_i^-alpha``."""
    if spec.mode is not GammaMode.REAL_POSITIVE:
        raise SpecError("gamma normalization is defined in the real-positive mode")
    if not math.isinf(abs(spec.cutoff)):
        raise SpecError("gamma normalization needs an infinite cutoff")
    if spec.alpha.real <= 0:
        raise DivergenceError("Re(alpha) <= 0 with infinite cutoff: the Gamma(0)-type value is never evaluated")
    out = 1.0 + 0j
    for b in spec.beta:
        out *= gamma_slice(spec.alpha, b, order)
    return complex(out)


def gamma_closed_form(spec: GammaSpec) -> complex:
    return complex(np.prod(np.exp(-spec.alpha * np.log(spec.beta))))


# --- incomplete gamma -----------------------------------------------------


def _gamma_fn(alpha: complex) -> complex:
    return complex(special.gamma(complex(alpha))) if complex(alpha).imag else float(special.gamma(alpha.real))


def lower_incomplete(alpha, c) -> complex:
    """``gamma(alpha, c) = Gamma(alpha) e^-c sum_n c^(alpha+n) / Gamma(alpha+n+1)``.

    The terms obey ``t_(n+1) = t_n c / (alpha + n + 1)`` with
    ``t_0 = c^alpha e^-c / alpha``; summation stops once the term ratio to the
    running sum drops below 1e-16.
    """
    alpha, c = complex(alpha), complex(c)
    if alpha.real <= 0:
        raise DivergenceError(f"Re(alpha)={alpha.real} <= 0: the lower incomplete gamma diverges")
    if not np.isfinite(c):
        raise ValidationError("c must be finite")
    if c == 0:
        return 0j
    term = np.exp(alpha * np.log(c) - c) / alpha
    total = term
    for n in range(MAX_SERIES_TERMS):
        term = term * c / (alpha + n + 1)
        total += term
        if abs(term) <= SERIES_RTOL * abs(total) and abs(c) < abs(alpha + n + 1):
            return complex(total)
    raise NonConvergenceError(f"series for gamma({alpha}, {c}) did not settle in {MAX_SERIES_TERMS} terms")


def upper_incomplete(alpha, c) -> complex:
    """``Gamma(alpha, c) = Gamma(alpha) - gamma(alpha, c)``."""
    return complex(_gamma_fn(complex(alpha)) - lower_incomplete(alpha, c))


def upper_incomplete_cf(alpha: float, c: float) -> float:
    """Continued fraction for ``Gamma(alpha, c)`` by the modified Lentz method.

    Independent of the power series.  Converges for every ``c > 0`` but is
    only trustworthy as an oracle for ``c >= 0.4 alpha``: deeper into the
    series region the relative error grows (about 1e-9 at ``c = 0.2 alpha``).
    """
    a, x = float(alpha), float(c)
    if x <= 0:
        raise DomainError("continued fraction needs c > 0")
    tiny = 1e-300
    b = x + 1.0 - a
    cc = 1.0 / tiny
    d = 1.0 / (b if abs(b) >= tiny else tiny)
    h = d
    for i in range(1, CF_MAX_ITER):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        cc = b + an / cc
        if abs(cc) < tiny:
            cc = tiny
        d = 1.0 / d
        delta = d * cc
        h *= delta
        if abs(delta - 1.0) < CF_TOL:
            return math.exp(-x + a * math.log(x)) * h
    raise NonConvergenceError(f"continued fraction for Gamma({a}, {x}) did not converge")


def lower_incomplete_cf(alpha: float, c: float) -> float:
    """``Gamma(alpha) - Gamma(alpha, c)``; absolute accuracy is relative to ``Gamma(alpha)``."""
    return math.gamma(alpha) - upper_incomplete_cf(alpha, c)


# --- delta functionals and principal values -------------------------------


def _panel_rule(lo: float, hi: float, panels: int, order: int = 32):
    x, w = leggauss(order)
    edges = np.linspace(lo, hi, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def _eval_test(testfn, x):
    vals = np.asarray(testfn(x), dtype=complex)
    if vals.shape != x.shape:
        vals = np.array([complex(testfn(float(t))) for t in x])
    if not np.all(np.isfinite(vals)):
        raise ValidationError("test function is not finite on the integration window")
    return vals


def delta_functional(testfn, cutoff: float, beta_spectrum: Optional[Callable] = None) -> complex:
    """Pairing of a test function with the truncated imaginary-mode gamma kernel.

    The truncated kernel ``int_{-L}^{L} exp(-2 pi i w u) du = 2L sinc(2L w)``
    is damped by ``exp(-L w^2 / 2)`` (width ``L^-1/2``) and paired with
    ``testfn`` on ``|w| <= 8 L^-1/2``, beyond which the damping is below
    ``e^-32``.  ``beta_spectrum`` maps the pairing variable to the projected
    dual element (identity by default); it must be odd and increasing near 0.
    """
    L = float(cutoff)
    if not (np.isfinite(L) and L > 0):
        raise ValidationError("cutoff must be a finite positive number")
    spec = (lambda w: w) if beta_spectrum is None else beta_spectrum
    slope = abs((complex(spec(1e-6)) - complex(spec(-1e-6))) / 2e-6)
    if not slope > 0:
        raise ValidationError("beta_spectrum must have a nonzero slope at 0")
    R = 8.0 / np.sqrt(L) / min(slope, 1.0)
    # a few nodes per oscillation of sin(2 pi L w)
    panels = int(np.clip(np.ceil(4 * L * R), 16, 20000))
    w, wt = _panel_rule(-R, R, panels, 16)
    b = np.asarray([complex(spec(t)) for t in w]) if beta_spectrum is not None else w
    kernel = 2 * L * np.sinc(2 * L * b) * np.exp(-L * b * b / 2)
    return complex(np.sum(wt * kernel * _eval_test(testfn, w)))


def principal_value(beta, tail: Sequence[float] = (10, 15, 20, 25, 30, 35, 40)) -> dict:
    """``lim_c (1 - e^-c)/beta = 1/beta`` with the sequence at increasing cutoffs."""
    beta = complex(beta)
    if beta.real <= 0:
        raise ValidationError("principal value needs Re(beta) > 0")
    cs = np.asarray(tail, dtype=float)
    seq = np.array([lower_incomplete(1, c) / beta for c in cs])
    diffs = np.abs(np.diff(seq))
    return {
        "value": 1.0 / beta,
        "cutoffs": cs,
        "sequence": seq,
        "monotone": bool(np.all(np.diff(diffs) <= 0)),
        "tail_gap": float(abs(seq[-1] - seq[-2])) if seq.size > 1 else 0.0,
    }


_KAPPA: dict = {}


def _hermite_pairing(m: int, testfn, sigma: float, order: int = 96) -> complex:
    """``int f(w) k_m(w) dw`` for the Gaussian-regularized moment kernel.

    ``k_m(w) = int u^(m-1) exp(-2 pi i w u) exp(-pi u^2/sigma^2) du`` equals
    ``(i/2pi)^(m-1) d^(m-1)/dw^(m-1) [sigma exp(-pi sigma^2 w^2)]``, a
    Hermite-Gaussian evaluated here by Gauss-Hermite in ``y = sigma sqrt(pi) w``.
    """
    k = m - 1
    y, wt = hermgauss(order)
    a = sigma * np.sqrt(np.pi)
    w = y / a
    deriv = (-1) ** k * a**k * special.eval_hermite(k, y)
    vals = _eval_test(testfn, w)
    return complex((1j / (2 * np.pi)) ** k * np.sum(wt * deriv * vals) * sigma / a)


def _calibration(sigma: float) -> complex:
    """Constant making the ``m = 1`` pairing reproduce ``f(0)`` for a Gaussian."""
    if sigma not in _KAPPA:
        _KAPPA[sigma] = 1.0 / _hermite_pairing(1, lambda w: np.exp(-np.pi * w * w), sigma)
    return _KAPPA[sigma]


def delta_derivative_constant(m: int, cutoff: float = 1e3) -> complex:
    """``C_m`` with ``pairing -> C_m (-1)^(m-1) f^(m-1)(0)``."""
    return complex(_calibration(float(cutoff)) * (-1j / (2 * np.pi)) ** (m - 1) / math.gamma(m))


def delta_derivative_pairing(m: int, testfn, cutoff: float = 1e3, derivatives: Optional[int] = None) -> complex:
    """Shadow of the ``alpha = m`` gamma-type delta derivative paired with ``testfn``.

    With ``tau = i u`` the ``alpha = m`` integrand contributes
    ``i^(m-1) (i u)^(m-1)`` against ``exp(-2 pi i w u)``; the ``u`` integral
    is regularized by ``exp(-pi u^2 / cutoff^2)``.  The overall constant is
    calibrated once at ``m = 1``.  ``derivatives`` declares how many
    derivatives ``testfn`` has, when known.
    """
    if int(m) != m or m < 1:
        raise ValidationError("m must be an integer >= 1 (fractional orders are not implemented)")
    if derivatives is not None and derivatives < m - 1:
        raise ValidationError(f"test function has {derivatives} derivatives, pairing needs {m - 1}")
    sigma = float(cutoff)
    raw = _hermite_pairing(m, testfn, sigma)
    return complex(_calibration(sigma) * (1j ** (m - 1)) ** 2 / math.gamma(m) * raw)


# --- Poisson ----------------------------------------------------------------


def poisson_tail(n: int, c) -> complex:
    """``Pr(N >= n) = gamma(n, c) / Gamma(n)``, with 1 for ``n = 0``."""
    if int(n) != n or n < 0:
        raise ValidationError("n must be a nonnegative integer")
    if n == 0:
        return 1.0
    val = lower_incomplete(n, c) / math.gamma(n)
    return float(val.real) if complex(c).imag == 0 else complex(val)


def poisson_tail_direct(n: int, c: float) -> float:
    """``sum_{k >= n} e^-c c^k / k!`` summed term by term."""
    k = int(n)
    term = math.exp(-c + k * math.log(c) - math.lgamma(k + 1)) if c > 0 else float(k == 0)
    total = 0.0
    while True:
        total += term
        k += 1
        term *= c / k
        if term <= 1e-18 * total and k > c:
            return total


def waiting_time_volume(k: int, c: float, n_samples: int = 100_000, seed: int = 0) -> IntegralResult:
    """``e^-c vol{0 <= tau_1 < ... < tau_k <= c}`` by Monte Carlo on the cube."""
    if int(k) != k or k < 0:
        raise ValidationError("k must be a nonnegative integer")
    if not c > 0:
        raise ValidationError("c must be positive")
    if k == 0:
        return IntegralResult(math.exp(-c), 0.0, Method.MONTE_CARLO, n_samples, seed=seed)

    def ordered(x):
        return np.all(np.diff(x, axis=1) > 0, axis=1).astype(float) * math.exp(-c)

    dom = Domain.box([0.0] * k, [c] * k)
    return integrate_mc(ordered, dom, McConfig.uniform(n_samples, seed, 0.0, c))


def _time_integral(beta_fn, t_a: float, t_b: float, edges=None, order: int = 64) -> complex:
    edges = np.array([t_a, t_b]) if edges is None else np.asarray(edges, dtype=float)
    x, w = leggauss(order)
    total = 0j
    for lo, hi in zip(edges[:-1], edges[1:]):
        h = 0.5 * (hi - lo)
        t = 0.5 * (hi + lo) + h * x
        total += h * np.sum(w * np.array([complex(beta_fn(ti)) for ti in t]))
    return total


def _grid_edges(grid: Union[TimeGrid, Sequence[float]]):
    if isinstance(grid, TimeGrid):
        if grid.points[-1] != grid.t_b:
            raise ValidationError("the grid must end at t_b")
        return np.concatenate(([grid.t_a], grid.points))
    edges = np.asarray(grid, dtype=float)
    if edges.size < 2 or np.any(np.diff(edges) <= 0):
        raise ValidationError("need an increasing sequence of at least two times")
    return edges


def poisson_average(beta_fn, grid, max_terms: int = 200) -> IntegralResult:
    """``sum_n (i I)^n / n!`` with ``I = int beta dt`` over the grid interval."""
    edges = _grid_edges(grid)
    I = _time_integral(beta_fn, edges[0], edges[-1], edges)
    z = 1j * I
    term, total = 1.0 + 0j, 1.0 + 0j
    for n in range(1, max_terms + 1):
        term = term * z / n
        total += term
        if abs(term) <= np.finfo(float).eps * abs(total) * 0.5 and n > abs(z):
            return IntegralResult(total, float(abs(term)), Method.SERIES, n, meta={"exponent": I})
    raise NonConvergenceError(f"Poisson average series did not settle in {max_terms} terms (|iI| = {abs(z):.3g})")


def poisson_average_rate(beta_fn, t_a: float, t_b: float, h: float = 1e-5) -> dict:
    """Central difference of the average in ``t_b`` against ``i beta(t_b) * average``."""
    v = poisson_average(beta_fn, [t_a, t_b]).value
    vp = poisson_average(beta_fn, [t_a, t_b + h]).value
    vm = poisson_average(beta_fn, [t_a, t_b - h]).value
    fd = (vp - vm) / (2 * h)
    expected = 1j * complex(beta_fn(t_b)) * v
    return {"finite_difference": fd, "expected": expected, "residual": float(abs(fd - expected))}


# --- Dyson series -------------------------------------------------------------


def _sz_plus_t_sx(t: float) -> np.ndarray:
    return np.array([[1.0, t], [t, -1.0]], dtype=complex)


NAMED_HAMILTONIANS = {"sz_plus_t_sx": (2, _sz_plus_t_sx)}


@dataclass(frozen=True)
class OperatorHamiltonian:
    dim: int
    H: Callable[[float], np.ndarray]
    t_a: float = 0.0
    t_b: float = 1.0
    label: str = "custom"
    constant: Optional[np.ndarray] = field(default=None, compare=False)

    def __post_init__(self):
        if not self.t_a < self.t_b:
            raise ValidationError("t_a must be < t_b")
        for t in np.linspace(self.t_a, self.t_b, 7):
            M = np.asarray(self.H(float(t)), dtype=complex)
            if M.shape != (self.dim, self.dim):
                raise ValidationError(f"H(t) has shape {M.shape}, expected ({self.dim}, {self.dim})")
            if np.max(np.abs(M - M.conj().T)) > 1e-12:
                raise ValidationError(f"H({t}) is not Hermitian")

    @classmethod
    def from_matrix(cls, M, t_a=0.0, t_b=1.0) -> "OperatorHamiltonian":
        M = np.array(M, dtype=complex)
        M.setflags(write=False)
        return cls(M.shape[0], lambda t: M, t_a, t_b, "constant", constant=M)

    @classmethod
    def named(cls, kind: str, t_a=0.0, t_b=1.0) -> "OperatorHamiltonian":
        if kind not in NAMED_HAMILTONIANS:
            raise ValidationError(f"unknown Hamiltonian {kind!r}; known: {sorted(NAMED_HAMILTONIANS)}")
        dim, fn = NAMED_HAMILTONIANS[kind]
        return cls(dim, fn, t_a, t_b, kind)

    @classmethod
    def from_json(cls, obj, t_a=0.0, t_b=1.0) -> "OperatorHamiltonian":
        if isinstance(obj, str):
            obj = json.loads(obj)
        kind = obj.get("kind", "constant")
        if kind == "constant":
            rows = obj["matrix"]
            M = [[complex(*v) if isinstance(v, (list, tuple)) else complex(v) for v in row] for row in rows]
            return cls.from_matrix(M, t_a, t_b)
        return cls.named(kind, t_a, t_b)


@lru_cache(maxsize=16)
def _cheb_panel(p: int):
    """Lobatto nodes on [-1, 1] and the matrix of ``int_{-1}^{x_j}`` of the interpolant."""
    x = -np.cos(np.pi * np.arange(p + 1) / p)
    V = C.chebvander(x, p)
    S = np.empty((p + 1, p + 1))
    for k in range(p + 1):
        coef = np.zeros(p + 1)
        coef[k] = 1.0
        anti = C.chebint(coef, lbnd=-1.0)
        S[:, k] = C.chebval(x, anti)
    return x, S @ np.linalg.inv(V)


@dataclass(frozen=True)
class DysonResult:
    U: np.ndarray
    terms: list
    truncation_bound: float
    norm_integral: float
    order: int

    @property
    def unitarity_drift(self) -> float:
        d = self.U.shape[0]
        return float(np.linalg.norm(self.U.conj().T @ self.U - np.eye(d), 2))


def dyson_evolution(H: OperatorHamiltonian, order: int, grid=None, nodes: int = 32) -> DysonResult:
    """Partial sum ``sum_{n<=N} i^n int_{t_1<...<t_n} H(t_n)...H(t_1)``.

    The nested ordered integrals are built recursively,
    ``F_n(t) = int_{t_a}^t i H(s) F_{n-1}(s) ds``, with a spectral
    (Chebyshev-Lobatto) cumulative integration on each grid panel, so that
    the latest time always multiplies from the left.
    """
    if int(order) != order or order < 0:
        raise ValidationError("order N must be a nonnegative integer")
    edges = _grid_edges(grid) if grid is not None else np.linspace(H.t_a, H.t_b, 5)
    if edges[0] != H.t_a or edges[-1] != H.t_b:
        raise ValidationError("grid must span the Hamiltonian's interval")
    x, S = _cheb_panel(nodes)
    d = H.dim
    panels = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        h = 0.5 * (hi - lo)
        t = 0.5 * (hi + lo) + h * x
        Hs = np.stack([np.asarray(H.H(float(ti)), dtype=complex) for ti in t])
        panels.append((h, Hs))
    # the last row of S holds the full-panel quadrature weights
    norm_int = float(sum(h * np.sum(S[-1] * np.linalg.norm(Hs, 2, axis=(1, 2))) for h, Hs in panels))

    prev = [np.broadcast_to(np.eye(d, dtype=complex), (x.size, d, d)) for _ in panels]
    total = np.eye(d, dtype=complex)
    terms = [np.eye(d, dtype=complex)]
    for _ in range(order):
        cur, start = [], np.zeros((d, d), dtype=complex)
        for (h, Hs), F in zip(panels, prev):
            G = 1j * np.einsum("kij,kjl->kil", Hs, F)
            Fn = start + h * np.einsum("jk,kab->jab", S, G)
            cur.append(Fn)
            start = Fn[-1]
        terms.append(start.copy())
        total = total + start
        prev = cur
    N = int(order)
    bound = norm_int ** (N + 1) / math.factorial(N + 1) * math.exp(norm_int)
    return DysonResult(total, terms, float(bound), norm_int, N)


def evolution_ode(H: OperatorHamiltonian, rtol: float = 1e-13, atol: float = 1e-14) -> np.ndarray:
    """Independent oracle: integrate ``U' = i H(t) U`` with an 8th-order Runge-Kutta."""
    d = H.dim

    def rhs(t, y):
        U = y.reshape(d, d)
        return (1j * np.asarray(H.H(t), dtype=complex) @ U).ravel()

    sol = solve_ivp(rhs, (H.t_a, H.t_b), np.eye(d, dtype=complex).ravel(), method="DOP853", rtol=rtol, atol=atol)
    if not sol.success:
        raise NonConvergenceError(f"ODE oracle failed: {sol.message}")
    return sol.y[:, -1].reshape(d, d)


def evolution_expm(H: OperatorHamiltonian) -> np.ndarray:
    if H.constant is None:
        raise ValidationError("matrix exponential oracle needs a constant Hamiltonian")
    return expm(1j * (H.t_b - H.t_a) * np.asarray(H.constant))


def ordered_term_cube(H: OperatorHamiltonian, n: int, order: int = 40) -> np.ndarray:
    """``(1/n!) int_{cube} T[H(t_n)...H(t_1)]`` by tensor Gauss-Legendre.

    The time-ordered product sorts its arguments so the latest is leftmost;
    the symmetrized integrand is only piecewise smooth, so this converges
    algebraically and is used as a cross-check, not a production route.
    """
    x, w = leggauss(order)
    h = 0.5 * (H.t_b - H.t_a)
    t = H.t_a + h * (x + 1)
    Hs = np.stack([np.asarray(H.H(float(ti)), dtype=complex) for ti in t])
    d = H.dim
    total = np.zeros((d, d), dtype=complex)
    for idx in np.ndindex(*(order,) * n):
        ords = sorted(idx, key=lambda j: t[j])
        P = np.eye(d, dtype=complex)
        for j in ords:
            P = Hs[j] @ P
        total += np.prod(w[list(idx)]) * P
    return (1j**n) * total * h**n / math.factorial(n)


def dyson_series_term(H: OperatorHamiltonian, n: int, grid=None) -> np.ndarray:
    return dyson_evolution(H, n, grid).terms[n]


__all__ = [
    "GammaMode",
    "GammaSpec",
    "PoissonSpec",
    "OperatorHamiltonian",
    "DysonResult",
    "gamma_normalization",
    "gamma_closed_form",
    "lower_incomplete",
    "upper_incomplete",
    "upper_incomplete_cf",
    "lower_incomplete_cf",
    "delta_functional",
    "principal_value",
    "delta_derivative_pairing",
    "delta_derivative_constant",
    "poisson_tail",
    "poisson_tail_direct",
    "waiting_time_volume",
    "poisson_average",
    "poisson_average_rate",
    "dyson_evolution",
    "evolution_ode",
    "evolution_expm",
    "ordered_term_cube",
]
