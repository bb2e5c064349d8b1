"""Symplectic integrators built on skew-Hermitian forms, and Pfaffians.

A skew-Hermitian form is stored as ``Omega = i A`` with ``A`` Hermitian, so
integrability is the eigenvalue condition ``A > 0``.  Through the complex
structure the form is evaluated as ``Omega(eta) = eta^T A eta`` on real
projected coordinates (the fiducial ``Omega = i Id`` gives ``|eta|^2``).

Convention ledger
-----------------
The primitive symplectic integrator is normalized by its fiducial member,
``int exp(-(pi/s)|eta|^2) D eta = 1/sqrt(s)`` per real dimension, which
realizes ``D eta`` as ``s^-1`` times Lebesgue measure per dimension.  With
that measure the characteristic integral is

    int Theta(eta, eta') D eta = Pf(s A)^-1 exp(-pi s M(eta')) exp((pi/s) B)

with ``M = A^-1`` in the exponent and ``Pf(X) := det(X)^(1/2)`` taken on the
principal branch.  The Pfaffian argument is the scaled form ``s A``; taking
it as ``s M`` instead (see :func:`printed_prefactor`) agrees only when
``det A = 1``.  Against the Gaussian family on ``Q = A`` the two prefactors
are related by ``Pf(s A)^-1 = s^-d det(s W)^(1/2)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import gaussian
from .core import IntegralResult
from .errors import SpecError, ValidationError
from .quad import Domain, Weight, integrate_quad

SKEW_TOL = 1e-12


def _check_skew(M: np.ndarray) -> np.ndarray:
    M = np.atleast_2d(np.asarray(M))
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValidationError("Pfaffian needs a square matrix")
    scale = max(1.0, float(np.max(np.abs(M))) if M.size else 1.0)
    if M.size and np.max(np.abs(M + M.T)) > SKEW_TOL * scale:
        raise ValidationError("matrix is not antisymmetric")
    return M


def pfaffian(M) -> float:
    """Pfaffian of a real antisymmetric matrix by Householder tridiagonalization.

    Each nontrivial reflection flips the sign; the tridiagonal result has
    ``Pf = prod_k T[2k, 2k+1]``.  Sign convention: ``Pf([[0, 1], [-1, 0]]) = 1``.
    Odd dimensions raise, since the Pfaffian vanishes identically there.
    """
    A = _check_skew(M).astype(float).copy()
    n = A.shape[0]
    if n % 2:
        raise ValidationError(f"odd dimension {n}: the Pfaffian is identically zero")
    if n == 0:
        return 1.0
    pf = 1.0
    for i in range(n - 2):
        x = A[i + 1 :, i].copy()
        sigma = float(x[1:] @ x[1:])
        if sigma == 0.0:
            alpha = x[0]
        else:
            norm_x = np.sqrt(x[0] ** 2 + sigma)
            v = x
            if x[0] <= 0:
                v[0] -= norm_x
                alpha = norm_x
            else:
                v[0] += norm_x
                alpha = -norm_x
            v /= np.linalg.norm(v)
            C = A[i + 1 :, i + 1 :]
            w = 2.0 * (C @ v)
            A[i + 1 :, i + 1 :] = C + np.outer(v, w) - np.outer(w, v)
            pf = -pf
        A[i + 1, i] = alpha
        A[i, i + 1] = -alpha
        A[i + 2 :, i] = 0.0
        A[i, i + 2 :] = 0.0
        if i % 2 == 0:
            pf *= -alpha
    return float(pf * A[n - 2, n - 1])


def pfaffian_expansion(M):
    """Pfaffian by expansion along the first row; intended for ``2n <= 8``."""
    A = _check_skew(M)
    n = A.shape[0]
    if n % 2:
        return 0.0
    if n == 0:
        return 1.0
    total = 0.0
    rest = list(range(1, n))
    for k, j in enumerate(rest):
        if A[0, j] == 0:
            continue
        keep = [r for r in rest if r != j]
        total += (-1) ** k * A[0, j] * pfaffian_expansion(A[np.ix_(keep, keep)])
    return total


def pf_det_sqrt(X) -> complex:
    """``Pf(X) := det(X)^(1/2)`` for (complex) symmetric arguments, principal branch."""
    return gaussian.sqrt_det(X)


@dataclass(frozen=True)
class SkewFormSpec:
    """``Omega = i A`` with scale ``s``, mean ``eta_bar`` and boundary value ``B``."""

    A: np.ndarray
    s: complex = 1.0
    mean: Optional[np.ndarray] = None
    boundary_value: complex = 0.0

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A))
        if A.shape[0] != A.shape[1]:
            raise ValidationError("A must be square")
        if np.max(np.abs(A - A.conj().T)) > SKEW_TOL * max(1.0, float(np.max(np.abs(A)))):
            raise ValidationError("Omega = iA is not skew-Hermitian (A not Hermitian)")
        A = np.real_if_close(A)
        A.setflags(write=False)
        object.__setattr__(self, "A", A)
        mean = np.zeros(A.shape[0]) if self.mean is None else np.atleast_1d(np.asarray(self.mean))
        if mean.shape != (A.shape[0],):
            raise ValidationError("mean has the wrong shape")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "s", complex(self.s))
        gaussian.check_scale(self.s)

    @property
    def d(self) -> int:
        return self.A.shape[0]

    @property
    def Omega(self) -> np.ndarray:
        return 1j * self.A

    @property
    def positive(self) -> bool:
        return bool(np.min(np.linalg.eigvalsh(self.A)) > 0)

    def M(self) -> np.ndarray:
        """Inverse form, as it enters the exponent ``M(eta')``."""
        return np.linalg.inv(self.A)

    def as_gaussian(self) -> gaussian.GaussianSpec:
        return gaussian.GaussianSpec.simple(self.A, self.s, self.mean, self.boundary_value)


def _require_positive(spec: SkewFormSpec):
    if np.iscomplexobj(spec.A):
        raise SpecError("projected integration needs a real symmetric A")
    if not spec.positive:
        raise SpecError("A is not positive definite: the symplectic member is not integrable")


def closed_form_z(spec: SkewFormSpec, etaprime) -> complex:
    _require_positive(spec)
    ep = np.atleast_1d(np.asarray(etaprime, dtype=complex))
    s = spec.s
    return complex(
        np.exp(-np.pi * s * (ep @ spec.M() @ ep) + (np.pi / s) * spec.boundary_value) / pf_det_sqrt(s * spec.A)
    )


def printed_prefactor(spec: SkewFormSpec) -> complex:
    """``Pf(s M)^-1`` with ``M = A^-1`` taken literally."""
    return complex(1.0 / pf_det_sqrt(spec.s * spec.M()))


def symplectic_char_pair(spec: SkewFormSpec, etaprime, order: Optional[int] = None):
    """Integral of ``Theta`` against the primitive symplectic integrator, and ``Z``."""
    _require_positive(spec)
    ep = np.atleast_1d(np.asarray(etaprime, dtype=complex))
    if ep.shape != (spec.d,):
        raise ValidationError(f"etaprime has shape {ep.shape}, expected ({spec.d},)")
    res, _ = gaussian.char_pair(spec.as_gaussian(), ep, order=order)
    factor = spec.s ** (-spec.d)
    scaled = IntegralResult(
        complex(res.value * factor),
        float(res.abs_error_estimate * abs(factor)),
        res.method,
        res.samples_or_order,
        seed=res.seed,
        meta={**res.meta, "measure": "s^-1 Lebesgue per dimension"},
    )
    return scaled, closed_form_z(spec, ep)


def symplectic_delta_limits(spec: SkewFormSpec, etaprime, s_values) -> gaussian.DeltaLimitReport:
    """Scale limits with the Pfaffian prefactor (``Z(0)`` scales like ``|s|^(-d/2)``)."""
    _require_positive(spec)
    A = np.asarray(spec.A, dtype=float)
    B = spec.boundary_value
    return gaussian.scale_limit_report(
        np.linalg.inv(A),
        lambda s: np.exp((np.pi / s) * B) / pf_det_sqrt(s * A),
        -0.5 * spec.d,
        etaprime,
        s_values,
    )


def realify(A: np.ndarray) -> np.ndarray:
    """Real symmetric matrix of ``eta^dagger A eta`` on ``(Re eta, Im eta)``."""
    S, K = np.real(A), np.imag(A)
    return np.block([[S, -K], [K, S]])


def complex_structure(d: int) -> np.ndarray:
    Z, I = np.zeros((d, d)), np.eye(d)
    return np.block([[Z, I], [-I, Z]])


def zero_section_integral(A, order: int = 24) -> dict:
    """Finite-dimensional shadow of the Thom-class zero-section identity.

    Integrates ``exp(-pi eta^dagger A eta)`` over ``C^d`` (``2d`` real
    dimensions) by quadrature and compares with ``1/|Pf(J A_R)|``, where
    ``A_R`` is the realification and ``J`` the complex structure; ``J A_R``
    is the real antisymmetric matrix of ``Im(eta_1^dagger A eta_2)``.
    """
    A = np.atleast_2d(np.asarray(A, dtype=complex))
    d = A.shape[0]
    R = realify(A)
    lam = float(np.min(np.linalg.eigvalsh(R)))
    if lam <= 0:
        raise SpecError("A must be positive definite")
    c = 1.0 / np.sqrt(lam)

    def integrand(y):
        x = c * y
        q = np.einsum("ni,ij,nj->n", x, R, x)
        return np.exp(-np.pi * q + np.pi * np.sum(y * y, axis=1)) * c ** (2 * d)

    res = integrate_quad(integrand, Domain.full_space(2 * d, Weight.GAUSSIAN), order)
    skew = complex_structure(d) @ R
    pf = pfaffian(skew)
    return {"integral": res, "pfaffian": pf, "expected": 1.0 / abs(pf), "det": float(np.real(np.linalg.det(A)))}


def random_skew(n: int, rng: np.random.Generator) -> np.ndarray:
    X = rng.standard_normal((n, n))
    return X - X.T


def pairings(n: int):
    """All perfect matchings of ``range(n)`` with their signs (brute-force oracle)."""
    if n == 0:
        yield 1, []
        return
    for j in range(1, n):
        rest = [k for k in range(1, n) if k != j]
        for sign, match in pairings(len(rest)):
            yield (-1) ** (j - 1) * sign, [(0, j)] + [(rest[a], rest[b]) for a, b in match]


def pfaffian_matchings(M) -> float:
    A = _check_skew(M)
    n = A.shape[0]
    if n % 2:
        return 0.0
    return float(sum(sign * np.prod([A[i, j] for i, j in match]) for sign, match in pairings(n)))


__all__ = [
    "pfaffian",
    "pfaffian_expansion",
    "pfaffian_matchings",
    "SkewFormSpec",
    "symplectic_char_pair",
    "symplectic_delta_limits",
    "zero_section_integral",
    "printed_prefactor",
]
