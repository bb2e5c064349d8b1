"""Acceptance criteria as executable checks.

Each check returns a :class:`CriterionResult` with the measured residuals
next to their tolerances.  ``run_all`` drives them for ``fint report-all``
and the pytest acceptance suite; ``COMMANDS`` records which CLI subcommand
owns each criterion (``fint <subcommand> --acceptance``).
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional

import numpy as np

from . import gamma_poisson as gp
from . import gaussian as ga
from . import group_algebra as grp
from . import symplectic as sy
from .core import Interpolation, Path, Projection, TimeGrid, coarsen, project


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    metrics: Dict[str, float] = field(default_factory=dict)
    runtime: float = 0.0
    note: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        shown = ", ".join(f"{k}={_fmt(v)}" for k, v in self.metrics.items())
        return f"[{status}] criterion {self.number:2d} {self.title}: {shown} ({self.runtime:.2f}s)"

    def to_dict(self, with_runtime: bool = True) -> dict:
        out = {"number": self.number, "title": self.title, "passed": self.passed, "metrics": self.metrics}
        if self.note:
            out["note"] = self.note
        if with_runtime:
            out["runtime_s"] = self.runtime
        return out


def _fmt(v) -> str:
    if isinstance(v, bool):
        return str(v)
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.3g}"


def _random_spd(d: int, rng) -> np.ndarray:
    X = rng.standard_normal((d, d))
    return X @ X.T / d + 0.5 * np.eye(d)


def gaussian_char_pair(seed: int = 42, count: int = 25) -> CriterionResult:
    rng = np.random.default_rng(seed)
    worst_abs, worst_ratio, within = 0.0, 0.0, True
    t0 = time.perf_counter()
    for i in range(count):
        d = 1 + i % 3
        s = rng.uniform(0.5, 2.0) * np.exp(1j * rng.uniform(-0.7, 0.7))
        spec = ga.GaussianSpec.simple(
            _random_spd(d, rng), s, rng.normal(0, 0.5, d), complex(rng.normal(0, 0.2), rng.normal(0, 0.2))
        )
        zp = rng.normal(0, 0.4, d) + 1j * rng.normal(0, 0.1, d)
        res, Z = ga.char_pair(spec, zp)
        diff = abs(res.value - Z)
        worst_abs = max(worst_abs, diff)
        worst_ratio = max(worst_ratio, diff / res.abs_error_estimate)
        within &= diff <= res.abs_error_estimate
    elapsed = time.perf_counter() - t0
    ok = within and worst_abs <= 1e-6 and elapsed < 10.0
    return CriterionResult(
        1,
        "Gaussian characteristic pair",
        ok,
        {"specs": count, "max_abs_diff": worst_abs, "max_diff_over_estimate": worst_ratio, "seconds": elapsed},
    )


def fiducial_normalization(seed: int = 42) -> CriterionResult:
    errs = {}
    for s in (1.0, 4.0, 2 + 2j):
        spec = ga.GaussianSpec.simple([[1.0]], s)
        errs[f"err_s={s}"] = abs(ga.normalization(spec) - np.sqrt(complex(s)))
    return CriterionResult(2, "Fiducial Gaussian normalization sqrt(s)", max(errs.values()) <= 1e-12, errs)


def free_semigroup(seed: int = 42) -> CriterionResult:
    xa, xb, T = 0.3, -0.5, 1.0
    out = {}
    for s in (1.0, 0.8 + 0.6j):
        ref = ga.propagator_closed_form("free", s, T, xa, xb)
        one = ga.propagator("free", s, TimeGrid.uniform(0.0, T, 1), xa, xb).value
        out[f"one_slice_err_s={s}"] = abs(one - ref)
        for n in (2, 16, 64):
            val = ga.propagator("free", s, TimeGrid.uniform(0.0, T, n), xa, xb).value
            out[f"n={n}_s={s}"] = abs(val - one)
    return CriterionResult(3, "Free-particle semigroup", max(out.values()) <= 1e-12, out)


def harmonic_determinant(seed: int = 42, interior: int = 2000) -> CriterionResult:
    t0 = time.perf_counter()
    out, ok = {}, True
    for wT in (0.5, 1.0, 2.0):
        T = 1.0
        grid = TimeGrid.uniform(0.0, T, interior + 1)
        ratio = ga.det_ratio(wT / T, grid)
        exact = math.sinh(wT) / wT
        gy = ga.det_gelfand_yaglom(wT / T, T)
        out[f"fd_err_wT={wT}"] = abs(ratio - exact)
        out[f"gy_err_wT={wT}"] = abs(gy - exact)
        ok &= abs(ratio - exact) <= 1e-3 and abs(gy - exact) <= 1e-8
    elapsed = time.perf_counter() - t0
    out["seconds"] = elapsed
    return CriterionResult(4, "Harmonic determinant ratio", ok and elapsed < 5.0, out)


def pfaffian_suite(seed: int = 42, count: int = 50) -> CriterionResult:
    rng = np.random.default_rng(seed)
    worst_sq, worst_cov = 0.0, 0.0
    for i in range(count):
        n = 2 * (1 + i % 6)
        M = sy.random_skew(n, rng)
        pf = sy.pfaffian(M)
        det = np.linalg.det(M)
        worst_sq = max(worst_sq, abs(pf * pf - det) / abs(det))
        Q = rng.standard_normal((n, n))
        lhs = sy.pfaffian(Q.T @ M @ Q)
        rhs = np.linalg.det(Q) * pf
        worst_cov = max(worst_cov, abs(lhs - rhs) / abs(rhs))
    ok = worst_sq <= 1e-10 and worst_cov <= 1e-8
    return CriterionResult(5, "Pfaffian suite", ok, {"matrices": count, "max_rel_pf2_vs_det": worst_sq,
                                                     "max_rel_congruence": worst_cov})


def gamma_normalization_check(seed: int = 42) -> CriterionResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for alpha in (0.5, 1.0, 2.5):
        for d in (1, 2, 3):
            beta = rng.uniform(0.3, 3.0, d) + 1j * rng.uniform(-1.0, 1.0, d)
            spec = gp.GammaSpec(alpha, beta)
            val = gp.gamma_normalization(spec)
            ref = gp.gamma_closed_form(spec)
            worst = max(worst, abs(val - ref) / abs(ref))
    return CriterionResult(6, "Gamma normalization", worst <= 1e-8, {"max_rel_err": worst})


ALPHA_LATTICE = (0.5, 1.0, 2.5, 4.0)
C_LATTICE = (0.5, 1.0, 2.0, 5.0, 10.0)


def incomplete_gamma_check(seed: int = 42) -> CriterionResult:
    worst_cf, worst_one = 0.0, 0.0
    for a in ALPHA_LATTICE:
        for c in C_LATTICE:
            series = gp.lower_incomplete(a, c).real
            cf = gp.lower_incomplete_cf(a, c)
            worst_cf = max(worst_cf, abs(series - cf) / max(1.0, abs(cf)))
    for c in C_LATTICE:
        worst_one = max(worst_one, abs(gp.lower_incomplete(1, c) - (1 - math.exp(-c))))
    ok = worst_cf <= 1e-10 and worst_one <= 1e-14
    return CriterionResult(7, "Incomplete gamma", ok, {"lattice_points": len(ALPHA_LATTICE) * len(C_LATTICE),
                                                       "max_series_vs_cf": worst_cf, "max_gamma1_err": worst_one})


def poisson_check(seed: int = 42) -> CriterionResult:
    worst = 0.0
    for n in range(11):
        for c in (0.5, 1.5, 5.0):
            worst = max(worst, abs(gp.poisson_tail(n, c) - gp.poisson_tail_direct(n, c)))
    worst_z = 0.0
    for i, (k, c) in enumerate([(2, 1.0), (3, 1.0), (4, 2.0), (3, 2.5)]):
        r = gp.waiting_time_volume(k, c, n_samples=100_000, seed=seed + i)
        exact = math.exp(-c) * c**k / math.factorial(k)
        worst_z = max(worst_z, abs(r.value - exact) / r.abs_error_estimate)
    ok = worst <= 1e-12 and worst_z <= 3.0
    return CriterionResult(8, "Poisson tails and waiting times", ok, {"max_tail_err": worst,
                                                                      "max_mc_z_score": worst_z})


def dyson_check(seed: int = 42) -> CriterionResult:
    t0 = time.perf_counter()
    H = gp.OperatorHamiltonian.named("sz_plus_t_sx", 0.0, 1.0)
    r = gp.dyson_evolution(H, 12)
    ode = gp.evolution_ode(H)
    err_ode = float(np.max(np.abs(r.U - ode)))
    drift_ok = True
    for N in range(0, 13):
        rn = gp.dyson_evolution(H, N)
        drift_ok &= rn.unitarity_drift <= rn.truncation_bound
    Hc = gp.OperatorHamiltonian.from_matrix(np.diag([1.0, -1.0]))
    rc = gp.dyson_evolution(Hc, 25)
    err_expm = float(np.max(np.abs(rc.U - gp.evolution_expm(Hc))))
    elapsed = time.perf_counter() - t0
    ok = err_ode <= 1e-8 and err_expm <= 1e-12 and drift_ok and elapsed < 10.0
    return CriterionResult(9, "Dyson series", ok, {"err_vs_ode": err_ode, "err_vs_expm": err_expm,
                                                   "drift_N12": r.unitarity_drift, "bound_N12": r.truncation_bound,
                                                   "drift_within_bound": drift_ok, "seconds": elapsed})


POISSON_FIXTURES: Dict[str, Callable[[float], complex]] = {
    "constant_2": lambda t: 2.0,
    "linear_t": lambda t: t,
    "sin3t_plus_t": lambda t: math.sin(3 * t) + t,
}


def poisson_average_check(seed: int = 42) -> CriterionResult:
    out = {}
    for name, fn in POISSON_FIXTURES.items():
        out[name] = gp.poisson_average_rate(fn, 0.0, 1.3)["residual"]
    return CriterionResult(10, "Poisson average evolution", max(out.values()) <= 1e-6, out)


def group_algebra_check(seed: int = 42) -> CriterionResult:
    rng = np.random.default_rng(seed)
    Z6 = grp.GroupSpec.cyclic(6)
    out, ok = {}, True
    for label, fx in (("z6_scalar", grp.random_tables(Z6, 5, rng)), ("z6_matrix", grp.random_tables(Z6, 3, rng, 2))):
        for chk in grp.verify_propositions(Z6, fx, tol=1e-13):
            out[f"{label}{chk.name[:3]}"] = chk.residual
            ok &= chk.passed
    G, fx = grp.affine_fixtures()
    for chk in grp.verify_propositions(G, fx, tol=1e-6):
        out[f"affine{chk.name[:3]}"] = chk.residual
        ok &= chk.passed
    inv_norm = abs(grp.norm_lambda(grp.involution(fx[0])) - grp.norm_lambda(fx[0]))
    out["affine_norm_involution"] = inv_norm
    ok &= inv_norm <= 1e-6
    return CriterionResult(11, "Group algebra identities", ok, out)


def delta_pairing_check(seed: int = 42) -> CriterionResult:
    gauss = gp.delta_functional(lambda w: np.exp(-np.pi * w * w), 1e3)
    away = gp.delta_functional(_away_bump, 1e3)
    out = {"gaussian_err": abs(gauss - 1.0), "away_from_zero": abs(away)}
    return CriterionResult(12, "Delta-functional pairing", max(out.values()) <= 1e-2, out)


def _away_bump(w):
    u = (np.asarray(w, float) - 1.5) / 0.5
    return np.where(np.abs(u) < 1, np.exp(-1.0 / np.clip(1 - u * u, 1e-300, None)), 0.0)


def delta_limits_check(seed: int = 42) -> CriterionResult:
    zero = [10.0 ** (-k) for k in range(1, 7)]
    big = np.linspace(10.0, 100.0, 10)
    A2 = np.array([[1.5, 0.4], [0.4, 0.8]])
    gauss = [ga.GaussianSpec.simple([[1.0]]), ga.GaussianSpec.simple(A2, boundary_value=0.2)]
    sympl = [sy.SkewFormSpec([[1.0]]), sy.SkewFormSpec(A2, boundary_value=0.2)]
    exact_one, worst_slope = True, 0.0
    for g, p in zip(gauss, sympl):
        d = g.d
        for rep in (ga.delta_limits(g, np.zeros(d), zero), sy.symplectic_delta_limits(p, np.zeros(d), zero)):
            exact_one &= bool(np.all(rep.normalized == 1.0))
        zp = np.full(d, 0.7)
        for rep in (ga.delta_limits(g, zp, big), sy.symplectic_delta_limits(p, zp, big)):
            worst_slope = max(worst_slope, rep.slope_rel_error)
    ok = exact_one and worst_slope <= 0.05
    return CriterionResult(13, "Delta limits", ok, {"normalized_exactly_one": exact_one,
                                                    "max_rel_slope_err": worst_slope})


def projective_consistency_check(seed: int = 42, paths: int = 100, pairs: int = 10) -> CriterionResult:
    rng = np.random.default_rng(seed)
    exact, composed = True, True
    for _ in range(pairs):
        fine_pts = np.sort(rng.choice(np.arange(1, 65), size=rng.integers(6, 20), replace=False)) / 64.0
        fine_pts[-1] = 1.0
        mid = np.sort(rng.choice(fine_pts, size=max(3, fine_pts.size // 2), replace=False))
        coarse = np.sort(rng.choice(mid, size=max(1, mid.size // 2), replace=False))
        m = int(rng.integers(1, 4))
        pf, pm, pc = (Projection(TimeGrid(0.0, 1.0, p), m) for p in (fine_pts, mid, coarse))
        P_fc, P_fm, P_mc = coarsen(pf, pc), coarsen(pf, pm), coarsen(pm, pc)
        composed &= bool(np.array_equal(P_mc @ P_fm, P_fc))
        for _ in range(paths // pairs):
            k = int(rng.integers(2, 12))
            times = np.concatenate(([0.0], np.sort(rng.uniform(0, 1, k - 1)), [1.0]))
            times = np.unique(times)
            vals = rng.standard_normal((times.size, m)) + 1j * rng.standard_normal((times.size, m))
            vals[0] = 0.0
            interp = Interpolation.LINEAR if rng.random() < 0.5 else Interpolation.CONSTANT
            path = Path(times, vals, interp)
            exact &= bool(np.array_equal(P_fc @ project(path, pf), project(path, pc)))
    return CriterionResult(14, "Projective consistency", exact and composed,
                           {"paths": paths, "grid_pairs": pairs, "bit_exact": exact, "composition": composed})


CRITERIA: Dict[int, Callable[..., CriterionResult]] = {
    1: gaussian_char_pair,
    2: fiducial_normalization,
    3: free_semigroup,
    4: harmonic_determinant,
    5: pfaffian_suite,
    6: gamma_normalization_check,
    7: incomplete_gamma_check,
    8: poisson_check,
    9: dyson_check,
    10: poisson_average_check,
    11: group_algebra_check,
    12: delta_pairing_check,
    13: delta_limits_check,
    14: projective_consistency_check,
}

COMMANDS: Dict[str, tuple] = {
    "gaussian": (1, 2),
    "propagator": (3, 4, 14),
    "pfaffian": (5,),
    "gamma": (6, 7),
    "poisson": (8, 10),
    "dyson": (9,),
    "group": (11,),
    "delta": (12,),
    "symplectic": (13,),
}


def run_criterion(number: int, seed: int = 42) -> CriterionResult:
    t0 = time.perf_counter()
    res = CRITERIA[number](seed=seed)
    res.runtime = time.perf_counter() - t0
    return res


def run_all(seed: int = 42, only: Optional[List[int]] = None) -> List[CriterionResult]:
    return [run_criterion(n, seed) for n in (only or sorted(CRITERIA))]
