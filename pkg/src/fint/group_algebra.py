"""Convolution algebras of integrable functions on concrete groups.

Three kinds of group are supported: finite groups given by a product table
(counting measure, unimodular), the affine group ``x -> a x + b`` with
``a > 0`` (left Haar density ``a^-2``, modular function ``Delta(a, b) = 1/a``)
and ``R^n`` with Lebesgue measure.  Functions take values in ``C`` or in
``d x d`` matrices, the latter standing in for a noncommutative Banach algebra.

Continuous fixtures are compactly supported and carry a bounding box;
integrals use composite Gauss-Legendre on that box.  Convolutions are
returned as lazily evaluated functions with a bounding box for the support
of the result.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from numpy.polynomial.legendre import leggauss

from .core import IntegralResult, Method
from .errors import DomainError, ValidationError

FINITE_TOL = 1e-13
CONTINUOUS_TOL = 1e-6
CHUNK = 2_000_000


class GroupKind(str, enum.Enum):
    FINITE = "finite"
    AFFINE = "affine_line"
    REAL_LINE = "real_line"


@dataclass(frozen=True)
class GroupSpec:
    kind: GroupKind
    table: Optional[np.ndarray] = None
    labels: Optional[tuple] = None
    n: int = 1
    haar_constant: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", GroupKind(self.kind))
        if self.kind is GroupKind.FINITE:
            T = np.asarray(self.table, dtype=int)
            k = T.shape[0]
            if T.shape != (k, k) or T.min() < 0 or T.max() >= k:
                raise ValidationError("product table must be a k x k array of indices in [0, k)")
            if any(sorted(row) != list(range(k)) for row in T):
                raise ValidationError("product table rows must be permutations (Latin square)")
            T.setflags(write=False)
            object.__setattr__(self, "table", T)
            ids = [e for e in range(k) if np.array_equal(T[e], np.arange(k))]
            if not ids:
                raise ValidationError("product table has no identity element")
            object.__setattr__(self, "_identity", ids[0])
            inv = np.array([int(np.nonzero(T[g] == ids[0])[0][0]) for g in range(k)])
            inv.setflags(write=False)
            object.__setattr__(self, "_inverse", inv)
            if self.labels is None:
                object.__setattr__(self, "labels", tuple(str(i) for i in range(k)))
            elif len(self.labels) != k:
                raise ValidationError("need one label per element")

    # --- constructors ---

    @classmethod
    def cyclic(cls, k: int) -> "GroupSpec":
        a = np.arange(k)
        return cls(GroupKind.FINITE, (a[:, None] + a[None, :]) % k, tuple(str(i) for i in range(k)))

    @classmethod
    def symmetric3(cls) -> "GroupSpec":
        perms = list(itertools.permutations(range(3)))
        index = {p: i for i, p in enumerate(perms)}
        # (p q)(x) = p(q(x))
        T = [[index[tuple(p[q[x]] for x in range(3))] for q in perms] for p in perms]
        return cls(GroupKind.FINITE, np.array(T), tuple("".join(map(str, p)) for p in perms))

    @classmethod
    def affine(cls) -> "GroupSpec":
        return cls(GroupKind.AFFINE)

    @classmethod
    def real_line(cls, n: int = 1) -> "GroupSpec":
        return cls(GroupKind.REAL_LINE, n=n)

    @classmethod
    def parse(cls, name: str) -> "GroupSpec":
        name = name.lower()
        if name.startswith("z") and name[1:].isdigit():
            return cls.cyclic(int(name[1:]))
        if name == "s3":
            return cls.symmetric3()
        if name == "affine":
            return cls.affine()
        if name in ("r", "r1", "real"):
            return cls.real_line(1)
        raise ValidationError(f"unknown group {name!r} (expected zN, s3, affine or r1)")

    # --- finite ---

    @property
    def finite(self) -> bool:
        return self.kind is GroupKind.FINITE

    @property
    def order(self) -> int:
        return int(self.table.shape[0])

    @property
    def identity(self):
        if self.finite:
            return self._identity
        if self.kind is GroupKind.AFFINE:
            return np.array([1.0, 0.0])
        return np.zeros(self.n)

    @property
    def inverse_index(self) -> np.ndarray:
        return self._inverse

    def is_associative(self) -> bool:
        """Exhaustive check of ``(gh)k == g(hk)`` over all triples."""
        T, k = self.table, self.order
        left = T[T[:, :, None], np.arange(k)[None, None, :]]
        right = T[np.arange(k)[:, None, None], T[None, :, :]]
        return bool(np.array_equal(left, right))

    # --- continuous ---

    @property
    def dim(self) -> int:
        return 2 if self.kind is GroupKind.AFFINE else self.n

    def mul(self, g: np.ndarray, h: np.ndarray) -> np.ndarray:
        g, h = np.broadcast_arrays(np.asarray(g, float), np.asarray(h, float))
        if self.kind is GroupKind.AFFINE:
            a, b = g[..., 0], g[..., 1]
            a2, b2 = h[..., 0], h[..., 1]
            return np.stack([a * a2, a * b2 + b], axis=-1)
        return g + h

    def inv(self, g: np.ndarray) -> np.ndarray:
        g = np.asarray(g, float)
        if self.kind is GroupKind.AFFINE:
            a, b = g[..., 0], g[..., 1]
            return np.stack([1.0 / a, -b / a], axis=-1)
        return -g

    def haar_density(self, g: np.ndarray) -> np.ndarray:
        g = np.asarray(g, float)
        if self.kind is GroupKind.AFFINE:
            return self.haar_constant / g[..., 0] ** 2
        return np.full(g.shape[:-1], self.haar_constant)

    def modular(self, g: np.ndarray) -> np.ndarray:
        g = np.asarray(g, float)
        if self.kind is GroupKind.AFFINE:
            return 1.0 / g[..., 0]
        return np.ones(g.shape[:-1])

    def check_domain(self, g: np.ndarray):
        if self.kind is GroupKind.AFFINE and np.any(np.asarray(g)[..., 0] <= 0):
            raise DomainError("affine group elements need a > 0")

    def _corners(self, lo, hi):
        return np.array(list(itertools.product(*zip(lo, hi))), dtype=float)

    def mul_box(self, box1, box2):
        """Bounding box of ``supp1 * supp2`` (products are monotone in each coordinate)."""
        c1, c2 = self._corners(*box1), self._corners(*box2)
        pts = self.mul(c1[:, None, :], c2[None, :, :]).reshape(-1, self.dim)
        return pts.min(axis=0), pts.max(axis=0)

    def inv_box(self, box):
        pts = self.inv(self._corners(*box))
        return pts.min(axis=0), pts.max(axis=0)


def _rule(lo, hi, panels: int, order: int):
    """Tensor composite Gauss-Legendre nodes/weights on a box."""
    x, w = leggauss(order)
    axes, wts = [], []
    for a, b in zip(lo, hi):
        edges = np.linspace(a, b, panels + 1)
        half = 0.5 * np.diff(edges)
        mid = 0.5 * (edges[1:] + edges[:-1])
        axes.append((mid[:, None] + half[:, None] * x).ravel())
        wts.append((half[:, None] * w).ravel())
    mesh = np.meshgrid(*axes, indexing="ij")
    nodes = np.stack([m.ravel() for m in mesh], axis=-1)
    weights = np.ones(nodes.shape[0])
    for wm in np.meshgrid(*wts, indexing="ij"):
        weights = weights * wm.ravel()
    return nodes, weights


@dataclass(frozen=True)
class Quadrature:
    panels: int = 4
    order: int = 12


DEFAULT_QUAD = Quadrature()


@dataclass(frozen=True)
class GroupFunction:
    """Finite table or compactly supported callable on a group.

    ``values`` has shape ``(order,)`` or ``(order, d, d)`` for finite groups;
    ``fn`` maps points ``(N, dim)`` to ``(N,)`` or ``(N, d, d)`` and vanishes
    outside the box ``[lo, hi]``.
    """

    group: GroupSpec
    values: Optional[np.ndarray] = None
    fn: Optional[Callable[[np.ndarray], np.ndarray]] = None
    lo: Optional[np.ndarray] = None
    hi: Optional[np.ndarray] = None
    vdim: Optional[int] = None
    label: str = ""
    quad: Quadrature = field(default=DEFAULT_QUAD, compare=False)

    def __post_init__(self):
        G = self.group
        if G.finite:
            if self.values is None:
                raise ValidationError("finite-group functions are given by a value table")
            v = np.array(self.values, dtype=complex)
            if v.shape[0] != G.order or v.ndim not in (1, 3) or (v.ndim == 3 and v.shape[1] != v.shape[2]):
                raise ValidationError(f"table must have shape ({G.order},) or ({G.order}, d, d)")
            v.setflags(write=False)
            object.__setattr__(self, "values", v)
            object.__setattr__(self, "vdim", None if v.ndim == 1 else v.shape[1])
        else:
            if self.fn is None or self.lo is None or self.hi is None:
                raise ValidationError("continuous functions need a callable and a support box")
            lo = np.atleast_1d(np.asarray(self.lo, dtype=float))
            hi = np.atleast_1d(np.asarray(self.hi, dtype=float))
            if lo.shape != (G.dim,) or hi.shape != (G.dim,) or np.any(lo >= hi):
                raise ValidationError("support box has the wrong shape or is empty")
            if G.kind is GroupKind.AFFINE and lo[0] <= 0:
                raise DomainError("affine support must lie in a > 0")
            object.__setattr__(self, "lo", lo)
            object.__setattr__(self, "hi", hi)

    @property
    def box(self):
        return self.lo, self.hi

    def __call__(self, g: np.ndarray) -> np.ndarray:
        if self.group.finite:
            return self.values[np.asarray(g, dtype=int)]
        g = np.asarray(g, dtype=float)
        inside = np.all((g >= self.lo) & (g <= self.hi), axis=-1)
        out = np.zeros(g.shape[:-1] + (() if self.vdim is None else (self.vdim, self.vdim)), dtype=complex)
        if np.any(inside):
            gi = g[inside]
            if self.group.kind is GroupKind.AFFINE:
                self.group.check_domain(gi)
            out[inside] = np.asarray(self.fn(gi), dtype=complex)
        return out

    def scaled(self, c: complex) -> "GroupFunction":
        if self.group.finite:
            return GroupFunction(self.group, c * self.values, label=f"{c}*{self.label}")
        return GroupFunction(self.group, fn=lambda g, f=self.fn: c * np.asarray(f(g)), lo=self.lo, hi=self.hi,
                             vdim=self.vdim, label=f"{c}*{self.label}", quad=self.quad)

    def nodes(self, quad: Optional[Quadrature] = None):
        q = quad or self.quad
        x, w = _rule(self.lo, self.hi, q.panels, q.order)
        return x, w * self.group.haar_density(x)


def _check_pair(F1: GroupFunction, F2: GroupFunction):
    if F1.group is not F2.group and F1.group != F2.group:
        raise ValidationError("functions live on different groups")
    if F1.vdim != F2.vdim:
        raise ValidationError(f"value shapes differ: {F1.vdim} vs {F2.vdim}")


def _adjoint(v: np.ndarray, vdim) -> np.ndarray:
    return np.conj(v) if vdim is None else np.conj(np.swapaxes(v, -1, -2))


def _pointwise_norm(v: np.ndarray, vdim) -> np.ndarray:
    return np.abs(v) if vdim is None else np.linalg.norm(v, 2, axis=(-2, -1))


def _mulv(a, b, vdim):
    return a * b if vdim is None else a @ b


def int_lambda(F: GroupFunction, quad: Optional[Quadrature] = None) -> IntegralResult:
    """Haar integral ``int F(g) dnu(g)``."""
    G = F.group
    if G.finite:
        v = F.values.sum(axis=0)
        err = 64 * np.finfo(float).eps * float(np.abs(F.values).sum())
        return IntegralResult(v if F.vdim else complex(v), err, Method.CLOSED_FORM, G.order)
    q = quad or F.quad
    x, w = F.nodes(q)
    vals = F(x)
    v = np.tensordot(w, vals, axes=(0, 0))
    x2, w2 = F.nodes(Quadrature(q.panels, max(2, q.order // 2)))
    v2 = np.tensordot(w2, F(x2), axes=(0, 0))
    err = max(float(np.max(np.abs(v - v2))), 64 * np.finfo(float).eps * float(np.tensordot(w, np.abs(vals), axes=(0, 0)).max()))
    return IntegralResult(v if F.vdim else complex(v), err, Method.QUADRATURE, q.order * q.panels)


def norm_lambda(F: GroupFunction, quad: Optional[Quadrature] = None) -> float:
    """``||F||_lambda = int ||F(g)|| dnu(g)`` (modulus or operator 2-norm)."""
    G = F.group
    if G.finite:
        return float(_pointwise_norm(F.values, F.vdim).sum())
    x, w = F.nodes(quad)
    return float(w @ _pointwise_norm(F(x), F.vdim))


def convolve_star(F1: GroupFunction, F2: GroupFunction) -> GroupFunction:
    """``(F1 * F2)(g) = int F1(h) F2(h^-1 g) dnu(h)``; values multiply in that order."""
    _check_pair(F1, F2)
    G = F1.group
    if G.finite:
        T, inv = G.table, G.inverse_index
        k = G.order
        out = np.zeros_like(F1.values)
        for g in range(k):
            idx = T[inv, g]
            out[g] = _mulv(F1.values, F2.values[idx], F1.vdim).sum(axis=0)
        return GroupFunction(G, out, label=f"({F1.label}*{F2.label})")

    hx, hw = F1.nodes()
    f1 = F1(hx)
    hinv = G.inv(hx)
    vdim = F1.vdim

    def conv(g):
        g = np.asarray(g, float)
        out = np.empty(g.shape[0:1] + (() if vdim is None else (vdim, vdim)), dtype=complex)
        step = max(1, CHUNK // max(1, hx.shape[0]))
        for s in range(0, g.shape[0], step):
            gs = g[s : s + step]
            arg = G.mul(hinv[None, :, :], gs[:, None, :])
            f2 = F2(arg.reshape(-1, G.dim)).reshape(arg.shape[:2] + f1.shape[1:])
            prod = _mulv(f1[None], f2, vdim)
            out[s : s + step] = np.tensordot(prod, hw, axes=(1, 0)) if vdim is None else np.einsum("nmij,m->nij", prod, hw)
        return out

    lo, hi = G.mul_box(F1.box, F2.box)
    return GroupFunction(G, fn=conv, lo=lo, hi=hi, vdim=vdim, label=f"({F1.label}*{F2.label})", quad=F1.quad)


def convolve_star2(F1: GroupFunction, F2: GroupFunction) -> GroupFunction:
    """``(F1 star F2)(g) = int F1(h g) F2(h h) dnu(h)``, the argument pattern taken literally."""
    _check_pair(F1, F2)
    G = F1.group
    if G.finite:
        T = G.table
        k = G.order
        diag = F2.values[T[np.arange(k), np.arange(k)]]
        out = np.zeros_like(F1.values)
        for g in range(k):
            out[g] = _mulv(F1.values[T[:, g]], diag, F1.vdim).sum(axis=0)
        return GroupFunction(G, out, label=f"({F1.label}star{F2.label})")
    # h ranges over the points where F2(h h) can be nonzero: h h in supp F2
    lo, hi = _square_root_box(G, F2.box)
    hx, hw = _rule(lo, hi, F1.quad.panels, F1.quad.order)
    hw = hw * G.haar_density(hx)
    f2 = F2(G.mul(hx, hx))
    vdim = F1.vdim

    def star(g):
        g = np.asarray(g, float)
        arg = G.mul(hx[None, :, :], g[:, None, :])
        f1 = F1(arg.reshape(-1, G.dim)).reshape(arg.shape[:2] + f2.shape[1:])
        prod = _mulv(f1, f2[None], vdim)
        return np.tensordot(prod, hw, axes=(1, 0)) if vdim is None else np.einsum("nmij,m->nij", prod, hw)

    glo, ghi = G.mul_box(G.inv_box((lo, hi)), F1.box)
    return GroupFunction(G, fn=star, lo=glo, hi=ghi, vdim=vdim, label=f"({F1.label}star{F2.label})", quad=F1.quad)


def _square_root_box(G: GroupSpec, box):
    lo, hi = np.asarray(box[0], float), np.asarray(box[1], float)
    if G.kind is GroupKind.AFFINE:
        # (a, b)^2 = (a^2, (a + 1) b)
        alo, ahi = np.sqrt(lo[0]), np.sqrt(hi[0])
        bb = np.array([lo[1], hi[1]])[:, None] / (1.0 + np.array([alo, ahi]))[None, :]
        return np.array([alo, bb.min()]), np.array([ahi, bb.max()])
    return lo / 2, hi / 2


def involution(F: GroupFunction) -> GroupFunction:
    """``F*(g) = F(g^-1)^* Delta(g^-1)``."""
    G = F.group
    if G.finite:
        return GroupFunction(G, _adjoint(F.values[G.inverse_index], F.vdim), label=f"{F.label}^*")
    vdim = F.vdim

    def star(g):
        gi = G.inv(np.asarray(g, float))
        d = G.modular(gi)
        v = _adjoint(F(gi), vdim)
        return v * (d if vdim is None else d[:, None, None])

    lo, hi = G.inv_box(F.box)
    return GroupFunction(G, fn=star, lo=lo, hi=hi, vdim=vdim, label=f"{F.label}^*", quad=F.quad)


def haar_invariance_residual(G: GroupSpec, F: GroupFunction, g0) -> float:
    """``|int F(g0 g) dnu(g) - int F dnu|`` for a left translate."""
    if G.finite:
        shifted = F.values[G.table[int(g0), :]]
        return float(np.max(np.abs(shifted.sum(axis=0) - F.values.sum(axis=0))))
    g0 = np.asarray(g0, float)
    lo, hi = G.inv_box((g0, g0))
    # support of g -> F(g0 g) is g0^-1 supp F
    blo, bhi = G.mul_box((lo, hi), F.box)
    shifted = GroupFunction(G, fn=lambda g: F(G.mul(g0, g)), lo=blo, hi=bhi, vdim=F.vdim, quad=F.quad)
    return float(np.max(np.abs(np.asarray(int_lambda(shifted).value) - np.asarray(int_lambda(F).value))))


# --- fixtures ---------------------------------------------------------------


def random_tables(G: GroupSpec, count: int, rng: np.random.Generator, vdim: Optional[int] = None):
    shape = (G.order,) if vdim is None else (G.order, vdim, vdim)
    return [
        GroupFunction(G, rng.standard_normal(shape) + 1j * rng.standard_normal(shape), label=f"F{i}")
        for i in range(count)
    ]


def bump(G: GroupSpec, center, radius, k: int = 8, coeff: complex = 1.0, matrix=None, label="bump") -> GroupFunction:
    """``coeff * prod_j (1 - ((x_j - c_j)/r_j)^2)^k`` on its box (times ``matrix`` if given)."""
    c = np.atleast_1d(np.asarray(center, float))
    r = np.broadcast_to(np.asarray(radius, float), c.shape).copy()
    M = None if matrix is None else np.asarray(matrix, dtype=complex)

    def f(x):
        u = (np.asarray(x, float) - c) / r
        v = coeff * np.prod(np.clip(1.0 - u * u, 0.0, None) ** k, axis=-1)
        return v if M is None else v[:, None, None] * M[None]

    return GroupFunction(G, fn=f, lo=c - r, hi=c + r, vdim=None if M is None else M.shape[0], label=label)


def gaussian_density(sigma: float, mean: float = 0.0, width: float = 12.0) -> GroupFunction:
    G = GroupSpec.real_line(1)

    def f(x):
        x = np.asarray(x, float)[..., 0]
        return np.exp(-0.5 * ((x - mean) / sigma) ** 2) / (sigma * np.sqrt(2 * np.pi))

    return GroupFunction(G, fn=f, lo=[mean - width * sigma], hi=[mean + width * sigma], label=f"N({mean},{sigma})",
                         quad=Quadrature(8, 16))


def affine_fixtures():
    G = GroupSpec.affine()
    return G, [
        bump(G, [1.3, 0.2], [0.25, 0.4], coeff=1.0, label="B1"),
        bump(G, [0.9, -0.3], [0.2, 0.3], coeff=0.7 - 0.4j, label="B2"),
        bump(G, [1.1, 0.5], [0.3, 0.25], coeff=0.3 + 1.1j, label="B3"),
    ]


# --- verification -------------------------------------------------------------


@dataclass
class IdentityCheck:
    name: str
    residual: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.residual) and self.residual <= self.tolerance)


def _probe_points(G: GroupSpec, F: GroupFunction, count: int = 5):
    if G.finite:
        return np.arange(G.order)
    rng = np.random.default_rng(7)
    lo, hi = F.box
    return lo + (hi - lo) * rng.uniform(0.15, 0.85, size=(count, G.dim))


def _max_diff(A: GroupFunction, B: GroupFunction, pts) -> float:
    return float(np.max(np.abs(A(pts) - B(pts))))


def _scale(*vals) -> float:
    return max(1.0, *[float(np.max(np.abs(np.asarray(v)))) for v in vals])


def verify_propositions(G: GroupSpec, fixtures: Sequence[GroupFunction], tol: Optional[float] = None) -> list:
    """Check identities (a)-(e) of the convolution *-algebra on the fixtures.

    (a) ``||F1 * F2|| <= ||F1|| ||F2||``; (b) associativity;
    (c) ``int(F1 * F2) = int(F1) int(F2)``; (d) ``int(F^*) = int(F)^*``;
    (e) ``F1^* * F2^* = (F2 * F1)^*``.  Residuals are relative to the size of
    the compared quantities; failures are entries, not exceptions.
    """
    if len(fixtures) < 3:
        raise ValidationError("need at least three fixtures (associativity uses triples)")
    tol = (FINITE_TOL if G.finite else CONTINUOUS_TOL) if tol is None else tol
    vdim = fixtures[0].vdim
    out = {k: 0.0 for k in "abcde"}
    pairs = list(itertools.permutations(range(len(fixtures)), 2)) if G.finite else [(0, 1), (1, 2)]
    triples = list(itertools.permutations(range(len(fixtures)), 3)) if G.finite else [(0, 1, 2)]
    convs = {}

    def conv(i, j):
        if (i, j) not in convs:
            convs[i, j] = convolve_star(fixtures[i], fixtures[j])
        return convs[i, j]

    ints = [int_lambda(F) for F in fixtures]
    norms = [norm_lambda(F) for F in fixtures]
    for i, j in pairs:
        F12 = conv(i, j)
        n12 = norm_lambda(F12)
        out["a"] = max(out["a"], (n12 - norms[i] * norms[j]) / _scale(norms[i] * norms[j]))
        I12 = int_lambda(F12).value
        prod = _mulv(np.asarray(ints[i].value), np.asarray(ints[j].value), vdim)
        out["c"] = max(out["c"], float(np.max(np.abs(I12 - prod))) / _scale(prod))
        lhs = convolve_star(involution(fixtures[i]), involution(fixtures[j]))
        rhs = involution(conv(j, i))
        pts = _probe_points(G, rhs)
        out["e"] = max(out["e"], _max_diff(lhs, rhs, pts) / _scale(rhs(pts)))
    for i, j, k in triples:
        left = convolve_star(conv(i, j), fixtures[k])
        right = convolve_star(fixtures[i], conv(j, k))
        pts = _probe_points(G, left)
        out["b"] = max(out["b"], _max_diff(left, right, pts) / _scale(left(pts)))
    for F, I in zip(fixtures, ints):
        Is = int_lambda(involution(F)).value
        ref = _adjoint(np.asarray(I.value), vdim)
        out["d"] = max(out["d"], float(np.max(np.abs(Is - ref))) / _scale(ref))
    names = {
        "a": "norm submultiplicative",
        "b": "associativity",
        "c": "integral is multiplicative",
        "d": "integral commutes with involution",
        "e": "involution reverses products",
    }
    return [IdentityCheck(f"({k}) {names[k]}", max(0.0, v) if k == "a" else v, tol) for k, v in out.items()]


__all__ = [
    "GroupKind",
    "GroupSpec",
    "GroupFunction",
    "Quadrature",
    "int_lambda",
    "norm_lambda",
    "convolve_star",
    "convolve_star2",
    "involution",
    "haar_invariance_residual",
    "verify_propositions",
    "IdentityCheck",
    "bump",
    "gaussian_density",
    "random_tables",
    "affine_fixtures",
]
