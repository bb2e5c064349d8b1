"""Finite-dimensional integration backends.

Every routine computes ``int f(x) w(x) dx`` over a :class:`Domain`, where the
weight ``w`` comes from the domain's weight hint:

* ``gaussian``: ``exp(-pi |x|^2)`` (unit mass on ``R^d``),
* ``exponential``: ``prod_i x_i^p exp(-x_i)`` on the positive orthant
  (``p = laguerre_power``, default 0),
* ``none``: ``1``.

Integrands are vectorized: they receive an ``(N, d)`` array of points and
return ``N`` values (real or complex).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import special

from .core import IntegralResult, Method
from .errors import ConfigurationError, IntegrandError, ValidationError

MAX_TENSOR_DIM = 6
MAX_TENSOR_NODES = 4_000_000

Integrand = Callable[[np.ndarray], np.ndarray]


class DomainKind(str, enum.Enum):
    FULL_SPACE = "full_space"
    POSITIVE_ORTHANT = "positive_orthant"
    BOX = "box"


class Weight(str, enum.Enum):
    GAUSSIAN = "gaussian"
    EXPONENTIAL = "exponential"
    NONE = "none"


@dataclass(frozen=True)
class Domain:
    kind: DomainKind
    d: int
    weight: Weight = Weight.NONE
    lo: Optional[tuple] = None
    hi: Optional[tuple] = None
    laguerre_power: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", DomainKind(self.kind))
        object.__setattr__(self, "weight", Weight(self.weight))
        if self.d < 1:
            raise ValidationError("domain dimension must be >= 1")
        if self.kind is DomainKind.BOX:
            if self.lo is None or self.hi is None:
                raise ValidationError("box domains need lo and hi")
            lo = tuple(float(x) for x in np.broadcast_to(self.lo, (self.d,)))
            hi = tuple(float(x) for x in np.broadcast_to(self.hi, (self.d,)))
            if not all(np.isfinite(lo + hi)) or any(a >= b for a, b in zip(lo, hi)):
                raise ValidationError("box bounds must be finite with lo < hi")
            object.__setattr__(self, "lo", lo)
            object.__setattr__(self, "hi", hi)
        if self.weight is Weight.EXPONENTIAL and self.kind is not DomainKind.POSITIVE_ORTHANT:
            raise ValidationError("exponential weight lives on the positive orthant")
        if self.weight is Weight.GAUSSIAN and self.kind is not DomainKind.FULL_SPACE:
            raise ValidationError("gaussian weight lives on the full space")
        if self.laguerre_power <= -1:
            raise ValidationError("laguerre_power must exceed -1")

    @classmethod
    def full_space(cls, d: int, weight: Weight = Weight.GAUSSIAN) -> "Domain":
        return cls(DomainKind.FULL_SPACE, d, weight)

    @classmethod
    def positive_orthant(cls, d: int, weight: Weight = Weight.EXPONENTIAL, power: float = 0.0) -> "Domain":
        return cls(DomainKind.POSITIVE_ORTHANT, d, weight, laguerre_power=power)

    @classmethod
    def box(cls, lo: Sequence[float], hi: Sequence[float]) -> "Domain":
        lo = np.atleast_1d(lo)
        return cls(DomainKind.BOX, lo.size, Weight.NONE, tuple(lo), tuple(np.atleast_1d(hi)))

    def weight_fn(self, x: np.ndarray) -> np.ndarray:
        """Weight (times domain indicator) at points ``x`` of shape ``(N, d)``."""
        if self.kind is DomainKind.BOX:
            inside = np.all((x >= np.array(self.lo)) & (x <= np.array(self.hi)), axis=1)
            return inside.astype(float)
        if self.kind is DomainKind.POSITIVE_ORTHANT:
            inside = np.all(x >= 0, axis=1)
            if self.weight is Weight.EXPONENTIAL:
                xs = np.where(inside[:, None], x, 1.0)
                w = np.prod(xs**self.laguerre_power * np.exp(-xs), axis=1)
                return np.where(inside, w, 0.0)
            return inside.astype(float)
        if self.weight is Weight.GAUSSIAN:
            return np.exp(-np.pi * np.sum(x * x, axis=1))
        return np.ones(x.shape[0])


@lru_cache(maxsize=256)
def _rule_1d(kind: DomainKind, weight: Weight, order: int, power: float):
    """Nodes and weights for the one-dimensional factor, absorbing the weight."""
    if kind is DomainKind.BOX:
        return np.polynomial.legendre.leggauss(order)
    if kind is DomainKind.FULL_SPACE:
        t, w = np.polynomial.hermite.hermgauss(order)
        x = t / np.sqrt(np.pi)
        w = w / np.sqrt(np.pi)
        if weight is Weight.NONE:
            w = w * np.exp(np.pi * x * x)
        return x, w
    x, w = special.roots_genlaguerre(order, power) if power != 0.0 else np.polynomial.laguerre.laggauss(order)
    if weight is Weight.NONE:
        w = w * np.exp(x) * x ** (-power) if power != 0.0 else w * np.exp(x)
    return np.asarray(x), np.asarray(w)


def tensor_rule(domain: Domain, order: int):
    """Tensor-product nodes ``(N, d)`` and weights ``(N,)`` for ``domain``."""
    if domain.d > MAX_TENSOR_DIM:
        raise ValidationError(f"tensor quadrature is limited to d <= {MAX_TENSOR_DIM}; use Monte Carlo")
    if order < 1:
        raise ValidationError("order must be >= 1")
    if order**domain.d > MAX_TENSOR_NODES:
        raise ValidationError(f"{order}^{domain.d} nodes exceeds the budget of {MAX_TENSOR_NODES}")
    x1, w1 = _rule_1d(domain.kind, domain.weight, order, float(domain.laguerre_power))
    if domain.kind is DomainKind.BOX:
        lo, hi = np.array(domain.lo), np.array(domain.hi)
        half = 0.5 * (hi - lo)
        axes_x = [lo[k] + half[k] * (x1 + 1.0) for k in range(domain.d)]
        axes_w = [half[k] * w1 for k in range(domain.d)]
    else:
        axes_x = [x1] * domain.d
        axes_w = [w1] * domain.d
    grids = np.meshgrid(*axes_x, indexing="ij")
    nodes = np.stack([g.reshape(-1) for g in grids], axis=1)
    wgrids = np.meshgrid(*axes_w, indexing="ij")
    weights = np.prod(np.stack([g.reshape(-1) for g in wgrids], axis=1), axis=1)
    return nodes, weights


def _evaluate(f: Integrand, x: np.ndarray) -> np.ndarray:
    vals = np.asarray(f(x))
    if vals.shape[0] != x.shape[0]:
        raise IntegrandError(f"integrand returned {vals.shape[0]} values for {x.shape[0]} points")
    bad = ~np.isfinite(vals.reshape(vals.shape[0], -1)).all(axis=1)
    if np.any(bad):
        node = x[np.argmax(bad)]
        raise IntegrandError(f"non-finite integrand value at node {node.tolist()}", node=node)
    return vals


def _weighted_sum(vals: np.ndarray, w: np.ndarray):
    # np.sum is pairwise for contiguous input; the magnitude sum sizes the roundoff floor.
    terms = vals * w.reshape((-1,) + (1,) * (vals.ndim - 1))
    return np.sum(terms, axis=0), float(np.sum(np.abs(terms)))


def integrate_quad(f: Integrand, domain: Domain, order: int = 32) -> IntegralResult:
    """Tensor Gauss rule of the given order.

    The error estimate is ``|I_order - I_{order//2}|``, floored at a roundoff
    bound proportional to the sum of absolute terms.
    """
    x, w = tensor_rule(domain, order)
    value, mag = _weighted_sum(_evaluate(f, x), w)
    half = max(1, order // 2)
    xh, wh = tensor_rule(domain, half)
    value_h, _ = _weighted_sum(_evaluate(f, xh), wh)
    diff = float(np.max(np.abs(value - value_h)))
    err = max(diff, 64 * np.finfo(float).eps * mag)
    if np.ndim(value) == 0:
        value = complex(value) if np.iscomplexobj(value) else float(value)
    return IntegralResult(value, err, Method.QUADRATURE, order, meta={"nodes": int(w.size)})


class ProposalKind(str, enum.Enum):
    GAUSSIAN = "gaussian"
    EXPONENTIAL = "exponential"
    UNIFORM = "uniform"


@dataclass(frozen=True)
class McConfig:
    """Importance-sampling setup.

    ``params`` is ``cov`` (and optional ``mean``) for a gaussian proposal,
    ``rate`` for exponential, ``lo``/``hi`` for uniform.
    """

    n_samples: int
    seed: int
    proposal: ProposalKind
    params: dict

    def __post_init__(self):
        object.__setattr__(self, "proposal", ProposalKind(self.proposal))
        if self.n_samples < 2:
            raise ConfigurationError("need at least 2 samples to estimate a variance")

    @classmethod
    def gaussian(cls, n_samples, seed, cov, mean=None):
        return cls(n_samples, seed, ProposalKind.GAUSSIAN, {"cov": cov, "mean": mean})

    @classmethod
    def exponential(cls, n_samples, seed, rate=1.0):
        return cls(n_samples, seed, ProposalKind.EXPONENTIAL, {"rate": rate})

    @classmethod
    def uniform(cls, n_samples, seed, lo, hi):
        return cls(n_samples, seed, ProposalKind.UNIFORM, {"lo": lo, "hi": hi})


def _sample(cfg: McConfig, d: int, rng: np.random.Generator):
    n = cfg.n_samples
    if cfg.proposal is ProposalKind.GAUSSIAN:
        cov = np.atleast_2d(np.asarray(cfg.params["cov"], dtype=float))
        if cov.shape == (1, 1) and d > 1:
            cov = cov[0, 0] * np.eye(d)
        mean = np.zeros(d) if cfg.params.get("mean") is None else np.asarray(cfg.params["mean"], float)
        L = np.linalg.cholesky(cov)
        z = rng.standard_normal((n, d))
        x = mean + z @ L.T
        y = np.linalg.solve(L, (x - mean).T).T
        logq = -0.5 * np.sum(y * y, axis=1) - np.sum(np.log(np.diag(L))) - 0.5 * d * np.log(2 * np.pi)
        return x, np.exp(logq)
    if cfg.proposal is ProposalKind.EXPONENTIAL:
        rate = np.broadcast_to(np.asarray(cfg.params["rate"], dtype=float), (d,))
        x = rng.exponential(1.0 / rate, size=(n, d))
        q = np.prod(rate * np.exp(-rate * x), axis=1)
        return x, q
    lo = np.broadcast_to(np.asarray(cfg.params["lo"], dtype=float), (d,))
    hi = np.broadcast_to(np.asarray(cfg.params["hi"], dtype=float), (d,))
    x = rng.uniform(lo, hi, size=(n, d))
    return x, np.full(n, 1.0 / np.prod(hi - lo))


def _check_support(domain: Domain, cfg: McConfig):
    kind = cfg.proposal
    if kind is ProposalKind.UNIFORM:
        if domain.kind is not DomainKind.BOX:
            raise ConfigurationError("a uniform proposal only supports box domains")
        lo = np.broadcast_to(np.asarray(cfg.params["lo"], float), (domain.d,))
        hi = np.broadcast_to(np.asarray(cfg.params["hi"], float), (domain.d,))
        if np.any(lo > np.array(domain.lo)) or np.any(hi < np.array(domain.hi)):
            raise ConfigurationError("uniform proposal box does not cover the domain")
    elif kind is ProposalKind.EXPONENTIAL and domain.kind is DomainKind.FULL_SPACE:
        raise ConfigurationError("an exponential proposal cannot support the full space")


def integrate_mc(f: Integrand, domain: Domain, cfg: McConfig) -> IntegralResult:
    """Importance-weighted mean of ``f w / q`` with its sample standard error."""
    _check_support(domain, cfg)
    rng = np.random.default_rng(cfg.seed)
    x, q = _sample(cfg, domain.d, rng)
    if np.any(q <= 0) or not np.all(np.isfinite(q)):
        raise ConfigurationError("proposal density vanished at a drawn sample")
    w = domain.weight_fn(x)
    ratio = _evaluate(f, x) * (w / q)
    if not np.all(np.isfinite(ratio)):
        raise IntegrandError("non-finite importance weight", node=x[np.argmax(~np.isfinite(ratio))])
    mean = np.mean(ratio)
    # np.var of a complex array is the variance of the modulus deviation
    stderr = float(np.sqrt(np.var(ratio, ddof=1) / ratio.size))
    # a constant integrand has zero sample variance; keep the summation rounding
    stderr = max(stderr, 64 * np.finfo(float).eps * float(np.mean(np.abs(ratio))))
    value = complex(mean) if np.iscomplexobj(mean) else float(mean)
    return IntegralResult(value, stderr, Method.MONTE_CARLO, cfg.n_samples, seed=cfg.seed)


def integrate(f: Integrand, domain: Domain, order: int = 32, mc: Optional[McConfig] = None) -> IntegralResult:
    """Tensor quadrature for ``d <= 6``; Monte Carlo otherwise (``mc`` required)."""
    if domain.d <= MAX_TENSOR_DIM and order**domain.d <= MAX_TENSOR_NODES:
        return integrate_quad(f, domain, order)
    if mc is None:
        raise ConfigurationError(f"d={domain.d} needs Monte Carlo; pass an McConfig")
    return integrate_mc(f, domain, mc)
