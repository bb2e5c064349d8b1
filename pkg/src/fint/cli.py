"""``fint`` command-line front end.

Every subcommand prints a JSON document (schema-versioned, numbers at 17
significant digits) and can also write it to ``--out``, a flat CSV table to
``--csv`` and a run manifest to ``--manifest``.  Exit codes: 0 success,
1 numerical failure or failed acceptance check, 2 invalid input.
``FINT_THREADS`` caps the BLAS/OpenMP thread pools.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import hashlib
import json
import math
import os
import sys
from pathlib import Path
from typing import Any, List, Optional, Sequence

import numpy as np

from . import __version__
from . import acceptance as acc
from . import gamma_poisson as gp
from . import gaussian as ga
from . import group_algebra as grp
from . import symplectic as sy
from .core import TimeGrid
from .errors import ConfigurationError, FintError, NumericalError, ValidationError

SCHEMA_VERSION = "1"
VOLATILE_KEYS = {"runtime_s", "seconds", "timestamp", "figures"}


# --- serialization -------------------------------------------------------------


def _num(x: float) -> str:
    if math.isnan(x) or math.isinf(x):
        return json.dumps(str(x))
    s = format(x, ".17g")
    if not any(ch in s for ch in ".en"):
        s += ".0"
    return s


def to_plain(obj: Any) -> Any:
    """numpy/complex aware conversion to JSON-ready Python values.

    Complex numbers with a nonzero imaginary part become ``[re, im]``;
    arrays become nested lists (row-major).
    """
    if isinstance(obj, dict):
        return {str(k): to_plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_plain(v) for v in obj.tolist()] if obj.ndim else to_plain(obj.item())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        z = complex(obj)
        return [z.real, z.imag] if z.imag != 0 else z.real
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if obj is None or isinstance(obj, str):
        return obj
    return str(obj)


def dumps(obj: Any, indent: int = 2, _level: int = 0) -> str:
    """JSON text with floats written at 17 significant digits."""
    pad, inner = " " * (indent * _level), " " * (indent * (_level + 1))
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{json.dumps(k)}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, list):
        if all(not isinstance(v, (dict, list)) for v in obj):
            return "[" + ", ".join(dumps(v, indent, _level + 1) for v in obj) + "]"
        return "[\n" + ",\n".join(inner + dumps(v, indent, _level + 1) for v in obj) + "\n" + pad + "]"
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, float):
        return _num(obj)
    return json.dumps(obj)


def _strip_volatile(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {k: _strip_volatile(v) for k, v in obj.items() if k not in VOLATILE_KEYS}
    if isinstance(obj, list):
        return [_strip_volatile(v) for v in obj]
    return obj


def checksum(payload: dict) -> str:
    """SHA-256 of the canonical payload with runtimes and timestamps removed."""
    canon = dumps(_strip_volatile(to_plain(payload)), indent=0)
    return hashlib.sha256(canon.encode()).hexdigest()


def _flatten(obj: Any, prefix: str = "") -> List[tuple]:
    if isinstance(obj, dict):
        rows = []
        for k, v in obj.items():
            rows += _flatten(v, f"{prefix}.{k}" if prefix else str(k))
        return rows
    if isinstance(obj, list) and obj and isinstance(obj[0], (dict, list)):
        rows = []
        for i, v in enumerate(obj):
            rows += _flatten(v, f"{prefix}[{i}]")
        return rows
    return [(prefix, json.dumps(obj) if isinstance(obj, list) else obj)]


# --- argument helpers --------------------------------------------------------


def cplx(text: str) -> complex:
    try:
        return complex(text.replace(" ", "").replace("i", "j"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a complex number: {text!r}") from None


def cplx_list(text: str) -> List[complex]:
    return [cplx(t) for t in text.split(",") if t.strip()]


def float_list(text: str) -> List[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}") from None


def _complex_entry(v) -> complex:
    if isinstance(v, (list, tuple)):
        if len(v) != 2:
            raise ValidationError("complex entries are [re, im] pairs")
        return complex(float(v[0]), float(v[1]))
    return complex(v)


def load_matrix(path: str) -> np.ndarray:
    try:
        obj = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ValidationError(f"cannot read matrix file {path}: {exc}") from None
    rows = obj["matrix"] if isinstance(obj, dict) else obj
    M = np.array([[_complex_entry(v) for v in row] for row in rows])
    return M.real if np.all(M.imag == 0) else M


def _form(args) -> np.ndarray:
    if getattr(args, "matrix", None):
        return load_matrix(args.matrix)
    return np.diag(args.diag)


# --- subcommand handlers -------------------------------------------------------


def cmd_propagator(args) -> dict:
    grid = TimeGrid.uniform(args.t0, args.t1, args.n)
    T = args.t1 - args.t0
    if args.method == "determinant":
        val = ga.propagator_by_determinant(args.kind, args.s, grid, args.xa, args.xb, args.mass, args.omega)
        err = None
    else:
        res = ga.propagator(args.kind, args.s, grid, args.xa, args.xb, args.mass, args.omega, args.continuation)
        val, err = res.value, res.abs_error_estimate
    ref = ga.propagator_closed_form(args.kind, args.s, T, args.xa, args.xb, args.mass, args.omega)
    return {"value": val, "abs_error_estimate": err, "continuum": ref, "slices": args.n, "method": args.method}


def cmd_gaussian(args) -> dict:
    if args.action == "det":
        grid = TimeGrid.uniform(0.0, args.T, args.n + 1)
        return {
            "det_ratio": ga.det_ratio(args.omega, grid, args.boundary),
            "gelfand_yaglom": ga.det_gelfand_yaglom(args.omega, args.T),
            "analytic": math.sinh(args.omega * args.T) / (args.omega * args.T) if args.omega else 1.0,
            "interior_points": args.n,
        }
    Q = _form(args)
    d = Q.shape[0]
    mean = np.zeros(d) if args.mean is None else np.asarray(args.mean)
    spec = ga.GaussianSpec.simple(Q, args.s, mean, args.B)
    if args.action == "norm":
        return {"value": ga.normalization(spec)}
    zp = np.zeros(d) if args.zprime is None else np.asarray(args.zprime)
    if args.action == "char":
        res, Z = ga.char_pair(spec, zp, order=args.order, seed=args.seed)
        return {"theta_integral": res.value, "abs_error_estimate": res.abs_error_estimate, "Z_closed": Z,
                "method": res.method.value, "order_or_samples": res.samples_or_order}
    rep = ga.delta_limits(spec, zp, args.s_values)
    return _limit_dict(rep)


def _limit_dict(rep) -> dict:
    return {
        "direction": rep.direction,
        "s_values": rep.s_values,
        "Z": rep.z_values,
        "normalized": rep.normalized,
        "dual_delta": rep.dual_delta,
        "fit_against": rep.fit_x,
        "fitted_slope": rep.fitted_slope,
        "expected_slope": rep.expected_slope,
    }


def cmd_symplectic(args) -> dict:
    A = _form(args)
    d = A.shape[0]
    spec = sy.SkewFormSpec(A, args.s, None if args.mean is None else np.asarray(args.mean), args.B)
    ep = np.zeros(d) if args.etaprime is None else np.asarray(args.etaprime)
    if args.action == "char":
        res, Z = sy.symplectic_char_pair(spec, ep, order=args.order)
        return {"theta_integral": res.value, "abs_error_estimate": res.abs_error_estimate, "Z_closed": Z}
    if args.action == "zero-section":
        out = sy.zero_section_integral(A)
        return {"integral": out["integral"].value, "abs_error_estimate": out["integral"].abs_error_estimate,
                "pfaffian": out["pfaffian"], "expected": out["expected"]}
    return _limit_dict(sy.symplectic_delta_limits(spec, ep, args.s_values))


def cmd_pfaffian(args) -> dict:
    if not args.matrix:
        raise ValidationError("--matrix is required")
    M = load_matrix(args.matrix)
    if np.iscomplexobj(M):
        raise ValidationError("the Pfaffian routine takes real antisymmetric matrices")
    pf = sy.pfaffian(M)
    return {"value": pf, "det": float(np.linalg.det(M)), "size": M.shape[0]}


def cmd_gamma(args) -> dict:
    if args.action == "norm":
        spec = gp.GammaSpec(args.alpha, args.beta)
        return {"value": gp.gamma_normalization(spec), "closed_form": gp.gamma_closed_form(spec)}
    if args.action == "lower":
        return {"value": gp.lower_incomplete(args.alpha, args.c)}
    return {"value": gp.upper_incomplete(args.alpha, args.c)}


AVERAGE_FIXTURES = {
    "constant": lambda v: (lambda t: v),
    "linear": lambda v: (lambda t: v * t),
    "sin3t_plus_t": lambda v: (lambda t: v * (math.sin(3 * t) + t)),
}


def cmd_poisson(args) -> dict:
    if args.action == "tail":
        return {"value": gp.poisson_tail(args.n, args.c)}
    if args.action == "volume":
        r = gp.waiting_time_volume(args.k, args.c, args.samples, args.seed)
        exact = math.exp(-args.c) * args.c**args.k / math.factorial(args.k)
        return {"value": r.value, "stderr": r.abs_error_estimate, "seed": r.seed, "exact": exact}
    fn = AVERAGE_FIXTURES[args.beta](args.scale)
    r = gp.poisson_average(fn, [args.t0, args.t1])
    rate = gp.poisson_average_rate(fn, args.t0, args.t1)
    return {"value": r.value, "terms": r.samples_or_order, "rate_residual": rate["residual"]}


def cmd_dyson(args) -> dict:
    if not args.hamiltonian:
        raise ValidationError("--hamiltonian is required")
    try:
        obj = json.loads(Path(args.hamiltonian).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ValidationError(f"cannot read Hamiltonian file: {exc}") from None
    H = gp.OperatorHamiltonian.from_json(obj, args.t0, args.t1)
    r = gp.dyson_evolution(H, args.order)
    out = {"U": r.U, "order": r.order, "truncation_bound": r.truncation_bound,
           "unitarity_drift": r.unitarity_drift}
    if args.tol is not None and r.truncation_bound > args.tol:
        raise NumericalError(f"truncation bound {r.truncation_bound:.3g} exceeds tolerance {args.tol:g}")
    if args.oracle:
        out["ode_difference"] = float(np.max(np.abs(r.U - gp.evolution_ode(H))))
    return out


def _load_finite_fixtures(path: str):
    try:
        obj = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ValidationError(f"cannot read fixtures: {exc}") from None
    G = grp.GroupSpec(grp.GroupKind.FINITE, np.asarray(obj["product_table"]))
    if int(obj.get("order", G.order)) != G.order:
        raise ValidationError("declared order does not match the product table")
    fx = []
    for f in obj["functions"]:
        vals = np.array([_complex_entry(v) if not isinstance(v, list) or not v or not isinstance(v[0], list)
                         else [[_complex_entry(e) for e in row] for row in v] for v in f["values"]])
        fx.append(grp.GroupFunction(G, vals, label=f.get("label", "")))
    return G, fx


def cmd_group(args) -> dict:
    if args.fixtures:
        G, fx = _load_finite_fixtures(args.fixtures)
    elif args.group == "affine":
        G, fx = grp.affine_fixtures()
    else:
        G = grp.GroupSpec.parse(args.group)
        if not G.finite:
            raise ValidationError("use --group affine or a finite group (zN, s3)")
        fx = grp.random_tables(G, args.count, np.random.default_rng(args.seed), args.matrix_dim)
    checks = grp.verify_propositions(G, fx)
    return {
        "group": args.group if not args.fixtures else "finite(fixture)",
        "fixtures": len(fx),
        "identities": [{"name": c.name, "residual": c.residual, "tolerance": c.tolerance, "passed": c.passed}
                       for c in checks],
        "passed": all(c.passed for c in checks),
    }


TEST_FUNCTIONS = {
    "gaussian": lambda w: np.exp(-np.pi * np.asarray(w) ** 2),
    "odd": lambda w: np.asarray(w) * np.exp(-np.asarray(w) ** 2),
    "even": lambda w: np.exp(-np.asarray(w) ** 2),
    "away": acc._away_bump,
}


def cmd_delta(args) -> dict:
    f = TEST_FUNCTIONS[args.testfn]
    if args.action == "pair":
        return {"value": gp.delta_functional(f, args.cutoff), "testfn_at_0": complex(np.asarray(f(np.zeros(1)))[0])}
    if args.action == "derivative":
        val = gp.delta_derivative_pairing(args.m, f, args.cutoff)
        C = gp.delta_derivative_constant(args.m, args.cutoff)
        return {"value": val, "constant": C, "normalized": val / C}
    pv = gp.principal_value(args.beta)
    return {"value": pv["value"], "cutoffs": pv["cutoffs"], "sequence": pv["sequence"], "tail_gap": pv["tail_gap"]}


def cmd_report_all(args) -> dict:
    results = acc.run_all(args.seed)
    lines = [r.line() for r in results]
    for line in lines:
        print(line, file=sys.stderr)
    out = {
        "criteria": [r.to_dict() for r in results],
        "passed": all(r.passed for r in results),
        "matrix": {str(r.number): "PASS" if r.passed else "FAIL" for r in results},
    }
    if args.out_dir:
        outdir = Path(args.out_dir)
        outdir.mkdir(parents=True, exist_ok=True)
        with open(outdir / "acceptance.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["criterion", "title", "passed", "metric", "value"])
            for r in results:
                for k, v in r.metrics.items():
                    if k not in VOLATILE_KEYS:
                        w.writerow([r.number, r.title, r.passed, k, _num(float(v))])
        if not args.no_figures:
            from . import plotting

            out["figures"] = [str(p) for p in plotting.render_all(outdir / "figures")]
    return out


HANDLERS = {
    "propagator": cmd_propagator,
    "gaussian": cmd_gaussian,
    "symplectic": cmd_symplectic,
    "pfaffian": cmd_pfaffian,
    "gamma": cmd_gamma,
    "poisson": cmd_poisson,
    "dyson": cmd_dyson,
    "group": cmd_group,
    "delta": cmd_delta,
    "report-all": cmd_report_all,
}


# --- parser --------------------------------------------------------------------


def _common(p: argparse.ArgumentParser):
    p.add_argument("--out", help="write the JSON result here as well as to stdout")
    p.add_argument("--csv", help="write a flat key/value CSV table")
    p.add_argument("--manifest", help="write a run manifest (parameters, seed, checksum)")
    p.add_argument("--seed", type=int, default=42)
    if p.prog.split()[-1] != "report-all":
        p.add_argument("--acceptance", action="store_true", help="run the acceptance criteria owned by this command")


def _form_args(p, name: str):
    p.add_argument("--matrix", help=f"JSON file with the {name} matrix (rows of numbers or [re, im])")
    p.add_argument("--diag", type=float_list, default=[1.0], help=f"diagonal {name} (comma separated)")
    p.add_argument("--s", type=cplx, default=1.0, help="scale parameter, e.g. 2+2j")
    p.add_argument("--mean", type=float_list)
    p.add_argument("--B", type=cplx, default=0.0, help="boundary value")
    p.add_argument("--order", type=int, help="Gauss-Hermite order per dimension")
    p.add_argument("--s-values", type=cplx_list, default=[0.1, 0.01, 0.001])


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fint", description="Executable functional-integration toolkit")
    ap.add_argument("--version", action="version", version=f"fint {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("propagator", help="time-sliced free/harmonic kernels")
    p.add_argument("--kind", choices=["free", "harmonic"], default="free")
    p.add_argument("--s", type=cplx, default=1.0)
    p.add_argument("--t0", type=float, default=0.0)
    p.add_argument("--t1", type=float, default=1.0)
    p.add_argument("--n", type=int, default=16, help="number of slices")
    p.add_argument("--xa", type=float, default=0.0)
    p.add_argument("--xb", type=float, default=0.0)
    p.add_argument("--mass", type=float, default=1.0)
    p.add_argument("--omega", type=float, default=0.0)
    p.add_argument("--continuation", action="store_true", help="allow imaginary s")
    p.add_argument("--method", choices=["slicing", "determinant"], default="slicing")
    _common(p)

    p = sub.add_parser("gaussian", help="Gaussian family: char pair, normalization, determinants, limits")
    p.add_argument("action", nargs="?", choices=["char", "norm", "det", "limits"], default="char")
    _form_args(p, "quadratic form Q")
    p.add_argument("--zprime", type=float_list)
    p.add_argument("--omega", type=float, default=1.0)
    p.add_argument("--T", type=float, default=1.0)
    p.add_argument("--n", type=int, default=2000, help="interior points for det")
    p.add_argument("--boundary", choices=["dirichlet", "neumann_at_tb"], default="dirichlet")
    _common(p)

    p = sub.add_parser("symplectic", help="symplectic family: char pair, limits, zero-section identity")
    p.add_argument("action", nargs="?", choices=["char", "limits", "zero-section"], default="char")
    _form_args(p, "Hermitian A (Omega = iA)")
    p.add_argument("--etaprime", type=float_list)
    _common(p)

    p = sub.add_parser("pfaffian", help="Pfaffian of a real antisymmetric matrix")
    p.add_argument("--matrix", help="JSON file: list of rows or {\"matrix\": rows}")
    _common(p)

    p = sub.add_parser("gamma", help="gamma normalization and incomplete gamma functionals")
    p.add_argument("action", nargs="?", choices=["norm", "lower", "upper"], default="norm")
    p.add_argument("--alpha", type=cplx, default=1.0)
    p.add_argument("--beta", type=cplx_list, default=[1.0])
    p.add_argument("--c", type=cplx, default=1.0)
    _common(p)

    p = sub.add_parser("poisson", help="Poisson tails, waiting-time volumes, Poisson averages")
    p.add_argument("action", nargs="?", choices=["tail", "volume", "average"], default="tail")
    p.add_argument("--n", type=int, default=0)
    p.add_argument("--c", type=float, default=1.0)
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--beta", choices=sorted(AVERAGE_FIXTURES), default="constant")
    p.add_argument("--scale", type=float, default=1.0)
    p.add_argument("--t0", type=float, default=0.0)
    p.add_argument("--t1", type=float, default=1.0)
    _common(p)

    p = sub.add_parser("dyson", help="time-ordered Dyson series")
    p.add_argument("--hamiltonian", help='JSON: {"kind": "constant", "matrix": ...} or {"kind": "sz_plus_t_sx"}')
    p.add_argument("--order", type=int, default=12)
    p.add_argument("--t0", type=float, default=0.0)
    p.add_argument("--t1", type=float, default=1.0)
    p.add_argument("--tol", type=float, help="fail (exit 1) if the truncation bound exceeds this")
    p.add_argument("--oracle", action="store_true", help="also compare with the ODE oracle")
    _common(p)

    p = sub.add_parser("group", help="convolution algebra identities on a group")
    p.add_argument("action", nargs="?", choices=["verify"], default="verify")
    p.add_argument("--group", default="z6", help="zN, s3 or affine")
    p.add_argument("--fixtures", help="finite-group JSON {order, product_table, functions}")
    p.add_argument("--count", type=int, default=5)
    p.add_argument("--matrix-dim", type=int, help="use random d x d matrix-valued tables")
    _common(p)

    p = sub.add_parser("delta", help="delta functional pairings and principal values")
    p.add_argument("action", nargs="?", choices=["pair", "derivative", "pv"], default="pair")
    p.add_argument("--testfn", choices=sorted(TEST_FUNCTIONS), default="gaussian")
    p.add_argument("--cutoff", type=float, default=1e3)
    p.add_argument("--m", type=int, default=1)
    p.add_argument("--beta", type=cplx, default=2.0)
    _common(p)

    p = sub.add_parser("report-all", help="run every acceptance criterion, write tables and figures")
    p.add_argument("--out-dir", help="directory for acceptance.csv and figures/")
    p.add_argument("--no-figures", action="store_true")
    p.add_argument("--replay", help="re-run a manifest and compare its checksum")
    _common(p)
    return ap


def _manifest(args, argv: Sequence[str], payload: dict) -> dict:
    params = {k: v for k, v in vars(args).items() if k not in ("out", "csv", "manifest", "replay")}
    return {
        "schema_version": SCHEMA_VERSION,
        "subcommand": args.command,
        "argv": list(argv),
        "parameters": to_plain(params),
        "seed": args.seed,
        "tool_version": __version__,
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(),
        "output_checksum": checksum(payload),
    }


def _replay(path: str) -> int:
    try:
        man = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ValidationError(f"cannot read manifest: {exc}") from None
    argv = [a for a in man["argv"] if a]
    args = build_parser().parse_args(argv)
    payload = _execute(args)
    same = checksum(payload) == man["output_checksum"]
    print(dumps({"schema_version": SCHEMA_VERSION, "replayed": man["subcommand"], "checksum_match": same,
                 "checksum": checksum(payload), "expected": man["output_checksum"]}))
    return 0 if same else 1


def _execute(args) -> dict:
    if getattr(args, "acceptance", False):
        results = [acc.run_criterion(n, args.seed) for n in acc.COMMANDS[args.command]]
        for r in results:
            print(r.line(), file=sys.stderr)
        return {"criteria": [r.to_dict() for r in results], "passed": all(r.passed for r in results)}
    return HANDLERS[args.command](args)


def _limit_threads():
    raw = os.environ.get("FINT_THREADS")
    if raw is None:
        return None
    try:
        n = int(raw)
        if n < 1:
            raise ValueError
    except ValueError:
        raise ConfigurationError(f"FINT_THREADS must be a positive integer, got {raw!r}") from None
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=n)


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        limiter = _limit_threads()
        try:
            if args.command == "report-all" and args.replay:
                return _replay(args.replay)
            payload = _execute(args)
        finally:
            if limiter is not None:
                limiter.restore_original_limits()
    except ValidationError as exc:
        print(f"fint: error: {exc}", file=sys.stderr)
        return 2
    except (NumericalError, FintError) as exc:
        print(f"fint: numerical failure: {exc}", file=sys.stderr)
        return 1
    doc = {"schema_version": SCHEMA_VERSION, "command": args.command, **to_plain(payload)}
    text = dumps(doc)
    print(text)
    if args.out:
        Path(args.out).write_text(text + "\n")
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["key", "value"])
            for k, v in _flatten(to_plain(payload)):
                w.writerow([k, _num(v) if isinstance(v, float) else v])
    if args.manifest:
        Path(args.manifest).write_text(dumps(_manifest(args, argv, payload)) + "\n")
    failed = payload.get("passed") is False
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
