"""Command-line interface: ``gzstokes {connection,gamma,gz,verify}``.

Exit codes: 0 success or suite pass, 1 suite fail, 2 solver error (with
``{"error": CODE}`` on stdout), 3 configuration error.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import fields

import numpy as np

from .config import DEFAULT, Tolerances
from .connection import SolverConfig, connection_matrix, default_sector
from .errors import ConfigError, GZError
from .gz import GZChainConfig, gamma_details, gz_map, log_gz_map
from .linalg import as_hermitian, as_matrix
from .suites import SUITES, SuiteOptions, convergence_table, run_suite

CONFIG_ENV = "GZSTOKES_CONFIG"
MAX_N = 4

EXIT_OK, EXIT_FAIL, EXIT_SOLVER, EXIT_CONFIG = 0, 1, 2, 3


def matrix_to_json(M) -> dict:
    M = np.asarray(M, dtype=complex)
    return {
        "rows": int(M.shape[0]),
        "cols": int(M.shape[1]),
        "data": [[float(v.real), float(v.imag)] for v in M.ravel()],
    }


def matrix_from_json(doc) -> np.ndarray:
    try:
        rows, cols, data = int(doc["rows"]), int(doc["cols"]), doc["data"]
        if len(data) != rows * cols:
            raise ValueError("data length does not match shape")
        vals = [complex(float(d[0]), float(d[1])) if isinstance(d, (list, tuple)) else complex(float(d), 0.0) for d in data]
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise ConfigError(f"malformed matrix JSON: {exc}") from exc
    return np.array(vals, dtype=complex).reshape(rows, cols)


def _read_matrix(path: str) -> np.ndarray:
    try:
        if path == "-":
            doc = json.load(sys.stdin)
        else:
            with open(path) as fh:
                doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read matrix: {exc}") from exc
    return matrix_from_json(doc)


def _parse_complex(text: str) -> complex:
    try:
        return complex(text.replace(" ", ""))
    except ValueError as exc:
        raise ConfigError(f"not a complex number: {text!r}") from exc


def load_config(path: str | None) -> tuple[Tolerances, SolverConfig]:
    """Read ``{"tolerances": {...}, "solver": {...}}``; unknown keys are errors."""
    path = path or os.environ.get(CONFIG_ENV)
    if not path:
        return DEFAULT, SolverConfig()
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    if not isinstance(doc, dict) or set(doc) - {"tolerances", "solver"}:
        raise ConfigError("config must be an object with 'tolerances' and/or 'solver'")
    try:
        tol = _replace_checked(DEFAULT, doc.get("tolerances", {}))
        solver = _replace_checked(SolverConfig(), doc.get("solver", {}))
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    return tol, solver


def _replace_checked(obj, changes: dict):
    names = {f.name for f in fields(obj)}
    unknown = set(changes) - names
    if unknown:
        raise ValueError(f"unknown keys: {sorted(unknown)}")
    return type(obj)(**{**{n: getattr(obj, n) for n in names}, **changes})


def _solver_from_args(base: SolverConfig, args) -> SolverConfig:
    changes = {}
    if getattr(args, "r0", None) is not None:
        changes["r0"] = args.r0
    if getattr(args, "r1", None) is not None:
        changes["r1"] = args.r1
    if getattr(args, "order", None) is not None:
        changes["series_order_inf"] = args.order
        changes["series_order_zero"] = args.order
    if getattr(args, "tol", None) is not None:
        changes["ode_rel_tol"] = args.tol
        changes["ode_abs_tol"] = args.tol
    try:
        return _replace_checked(base, changes)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def _emit(doc: dict, out) -> None:
    out.write(json.dumps(doc, sort_keys=True) + "\n")


def cmd_connection(args, tol, solver, out) -> int:
    A = as_matrix(_read_matrix(args.a))
    a, b = _parse_complex(args.lambda_a), _parse_complex(args.lambda_b)
    spec = default_sector(a, b, A.shape[0], _solver_from_args(solver, args))
    data = connection_matrix(spec, A, tol, oracle=args.oracle)
    _emit(
        {
            "C": matrix_to_json(data.C),
            "b_minus": matrix_to_json(data.b_minus),
            "b_plus": matrix_to_json(data.b_plus),
            "middle": matrix_to_json(data.middle),
            "diagnostics": data.residuals,
            "spec": spec.to_dict(),
        },
        out,
    )
    return EXIT_OK


def _gamma_doc(args, tol, solver) -> dict:
    A = as_hermitian(_read_matrix(args.a), tol)
    n = A.shape[0]
    solver = _solver_from_args(solver, args)
    cfg = GZChainConfig(n, solvers=tuple([solver] * n), tol=tol)
    P, C, asym = gamma_details(A, cfg)
    tau, mu = gz_map(A, tol), log_gz_map(P, tol)
    diff = [list(np.abs(np.subtract(r1, r2))) for r1, r2 in zip(mu.entries, tau.entries)]
    return {
        "gamma": matrix_to_json(P),
        "C": matrix_to_json(C),
        "gz": tau.to_list(),
        "log_gz": mu.to_list(),
        "difference": diff,
        "max_difference": float(max(max(r) for r in diff)),
        "asymmetry": asym,
    }


def cmd_gamma(args, tol, solver, out) -> int:
    _emit(_gamma_doc(args, tol, solver), out)
    return EXIT_OK


def cmd_gz(args, tol, solver, out) -> int:
    doc = _gamma_doc(args, tol, solver)
    _emit({k: doc[k] for k in ("gz", "log_gz", "difference", "max_difference")}, out)
    return EXIT_OK


def cmd_verify(args, tol, solver, out) -> int:
    if args.suite not in SUITES:
        raise ConfigError(f"unknown suite {args.suite!r}")
    if not 1 <= args.n <= MAX_N:
        raise ConfigError(f"n must lie in 1..{MAX_N}")
    if args.samples < 1:
        raise ConfigError("samples must be positive")
    if args.suite in ("unitarity", "equivariance", "monodromy", "symplectic", "gauge") and args.n < 2:
        raise ConfigError(f"suite {args.suite} needs n >= 2")
    if args.suite in ("torus", "poisson") and args.n < 2:
        raise ConfigError(f"suite {args.suite} needs n >= 2")
    solver = _solver_from_args(solver, args)
    opts = SuiteOptions(tol=tol, solver=solver, rho=args.rho, gamma=args.gamma, richardson=not args.no_richardson)
    report = run_suite(args.suite, args.n, args.samples, args.seed, args.tolerance, opts)
    doc = report.to_dict()
    if args.no_timing:
        doc.pop("wall_time_s")
    _emit(doc, out)
    if args.csv:
        _write_csv(args, report, tol, solver)
    return EXIT_OK if report.passed else EXIT_FAIL


def _write_csv(args, report, tol, solver) -> None:
    try:
        with open(args.csv, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["section", "sample", "ode_tol", "residual", "unitarity_defect"])
            for i, r in enumerate(report.residuals):
                w.writerow(["residual", i, "", repr(r), ""])
            if args.n >= 2:
                for s, level, dev, unit in convergence_table(args.n, min(5, args.samples), args.seed, solver, tol):
                    w.writerow(["convergence", s, repr(level), repr(dev), repr(unit)])
    except OSError as exc:
        raise ConfigError(f"cannot write CSV: {exc}") from exc


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gzstokes", description=__doc__.splitlines()[0])
    p.add_argument("--config", help=f"JSON config file (default: ${CONFIG_ENV})")
    sub = p.add_subparsers(dest="command", required=True)

    def solver_flags(sp):
        sp.add_argument("--r0", type=float)
        sp.add_argument("--r1", type=float)
        sp.add_argument("--order", type=int, help="series truncation order at 0 and infinity")
        sp.add_argument("--tol", type=float, help="ODE relative and absolute tolerance")

    c = sub.add_parser("connection", help="connection matrix and Stokes factors")
    c.add_argument("--lambda-a", default="0")
    c.add_argument("--lambda-b", default="1")
    c.add_argument("--a", required=True, help="matrix JSON file, '-' for stdin")
    c.add_argument("--oracle", action="store_true", help="also report the oracle deviation")
    solver_flags(c)
    c.set_defaults(func=cmd_connection)

    for name, func, text in (("gamma", cmd_gamma, "Gamma(A) with GZ patterns"), ("gz", cmd_gz, "GZ patterns of A and Gamma(A)")):
        g = sub.add_parser(name, help=text)
        g.add_argument("--a", required=True, help="Hermitian matrix JSON file, '-' for stdin")
        solver_flags(g)
        g.set_defaults(func=func)

    v = sub.add_parser("verify", help="seeded verification suite")
    v.add_argument("--suite", required=True)
    v.add_argument("--n", type=int, default=2)
    v.add_argument("--samples", type=int, default=10)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--tolerance", type=float, help="pass threshold (suite default otherwise)")
    v.add_argument("--rho", choices=("connection", "constant"), default="connection")
    v.add_argument("--gamma", choices=("gamma", "exp"), default="gamma")
    v.add_argument("--no-richardson", action="store_true")
    v.add_argument("--no-timing", action="store_true", help="omit wall time for byte-stable reports")
    v.add_argument("--csv", help="write residuals and a convergence table")
    solver_flags(v)
    v.set_defaults(func=cmd_verify)
    return p


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        tol, solver = load_config(args.config)
        return args.func(args, tol, solver, out)
    except ConfigError as exc:
        _emit({"error": exc.code, "message": str(exc)}, out)
        return EXIT_CONFIG
    except GZError as exc:
        _emit({"error": exc.code, "message": str(exc)}, out)
        return EXIT_SOLVER
    except ValueError as exc:
        _emit({"error": "CONFIG", "message": str(exc)}, out)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
