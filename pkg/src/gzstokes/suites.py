"""Seeded verification suites shared by the CLI and the acceptance tests.

Every suite maps ``(n, samples, seed, options)`` to per-sample residuals.
A suite passes iff its largest residual is at most the tolerance.
"""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from .config import DEFAULT, Tolerances
from .connection import SolverConfig, connection_matrix, connection_matrix_oracle, default_sector
from .gz import GZChainConfig, composite_c, cone_margin, gamma, gz_map, log_gz_map, torus_action
from .linalg import expm
from .poisson import (
    LeviSelector,
    PointGT,
    chain_gauge_check,
    connection_rho,
    gamma_poisson_residual,
    gauge_residual,
    kks_bracket,
    pushforward_residual,
)
from .sampling import (
    random_complex,
    random_gl,
    random_hermitian,
    random_levi_element,
    random_unitary,
    rng_from_seed,
)

SUITES = ("unitarity", "equivariance", "monodromy", "gz", "torus", "kks", "poisson", "symplectic", "gauge", "chain")

DEFAULT_TOLERANCE = {
    "unitarity": 1e-7,
    "equivariance": 1e-6,
    "monodromy": 1e-7,
    "gz": 1e-7,
    "torus": 1e-6,
    "kks": 1e-5,
    "poisson": 1e-4,
    "symplectic": 1e-4,
    "gauge": 1e-3,
    "chain": 1e-3,
}


@dataclass
class VerifyReport:
    suite: str
    n: int
    samples: int
    seed: int
    residuals: list[float]
    max_residual: float
    median_residual: float
    tolerance: float
    passed: bool
    wall_time_s: float = 0.0
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["pass"] = d.pop("passed")
        return d


@dataclass(frozen=True)
class SuiteOptions:
    tol: Tolerances = DEFAULT
    solver: SolverConfig = field(default_factory=SolverConfig)
    # negative controls: "constant" rho, or exp in place of Gamma
    rho: str = "connection"
    gamma: str = "gamma"
    richardson: bool = True


def _spec(a, b, k, opts):
    return default_sector(a, b, k, opts.solver)


def _unitarity(n, rng, opts):
    A = random_hermitian(rng, n)
    C = connection_matrix(_spec(0.0, 1.0, n, opts), A, opts.tol).C
    return max(float(np.linalg.norm(C.conj().T @ C - np.eye(n))), float(abs(np.linalg.det(C) - 1)))


def _monodromy(n, rng, opts):
    # the looser 1e-6 bound on the formal monodromy block is folded in with weight 0.1
    A = random_hermitian(rng, n)
    r = connection_matrix(_spec(0.0, 1.0, n, opts), A, opts.tol).residuals
    return max(r["monodromy_residual"], 0.1 * r["formal_monodromy_error"])


def _equivariance(n, rng, opts):
    A = random_hermitian(rng, n)
    g = np.eye(n, dtype=complex)
    g[: n - 1, : n - 1] = random_gl(rng, n - 1)
    g_inv = np.linalg.inv(g)
    spec = _spec(0.0, 1.0, n, opts)
    lhs = connection_matrix(spec, g @ A @ g_inv, opts.tol).C
    rhs = g @ connection_matrix(spec, A, opts.tol).C @ g_inv
    return float(np.linalg.norm(lhs - rhs)) / float(np.linalg.cond(g))


def _chain_cfg(n, opts):
    return GZChainConfig(n, solvers=tuple([opts.solver] * n), tol=opts.tol)


def _gz(n, rng, opts):
    A = random_hermitian(rng, n)
    return log_gz_map(gamma(A, _chain_cfg(n, opts)), opts.tol).max_abs_diff(gz_map(A, opts.tol))


def cone_interior_sample(rng, n, margin=0.1, tol: Tolerances = DEFAULT):
    while True:
        A = random_hermitian(rng, n, (1.0, 3.0))
        if cone_margin(gz_map(A, tol)) > margin:
            return A


def _torus(n, rng, opts):
    A = cone_interior_sample(rng, n, tol=opts.tol)
    k = int(rng.integers(1, n))
    phases = np.exp(1j * rng.uniform(0, 2 * np.pi, k))
    cfg = _chain_cfg(n, opts)
    lhs = gamma(torus_action(phases, k, A, opts.tol), cfg)
    rhs = torus_action(phases, k, gamma(A, cfg), opts.tol)
    return float(np.linalg.norm(lhs - rhs))


def _kks(n, rng, opts):
    """Involutivity of GZ eigenvalue functions plus the bracket of linear functionals."""
    A = cone_interior_sample(rng, n, tol=opts.tol)
    k1, k2 = int(rng.integers(1, n + 1)), int(rng.integers(1, n + 1))
    i1, i2 = int(rng.integers(0, k1)), int(rng.integers(0, k2))

    def tau(k, i):
        return lambda X: float(np.linalg.eigvalsh(0.5 * (X[:k, :k] + X[:k, :k].conj().T))[i])

    invol = abs(kks_bracket(tau(k1, i1), tau(k2, i2), A, opts.tol, opts.richardson))
    X = random_complex(rng, n)
    Y = random_complex(rng, n)
    X, Y = X - X.conj().T, Y - Y.conj().T

    def lin(Z):
        return lambda B: float(2 * np.imag(np.trace(B @ Z)))

    lin_err = abs(kks_bracket(lin(X), lin(Y), A, opts.tol, opts.richardson) - lin(X @ Y - Y @ X)(A))
    return max(invol, lin_err)


def coordinate_pairs():
    fs = [lambda P: float(P[0, 0].real), lambda P: float(P[0, 1].real), lambda P: float(P[0, 1].imag)]
    return [(fs[0], fs[1]), (fs[1], fs[2]), (fs[0], fs[2])]


def _memo(F):
    cache = {}

    def wrapped(X):
        key = np.asarray(X, dtype=complex).tobytes()
        if key not in cache:
            cache[key] = F(X)
        return cache[key]

    return wrapped


def _poisson(n, rng, opts):
    A = random_hermitian(rng, n)
    if opts.gamma == "exp":
        G = _memo(lambda X: expm(X, opts.tol))
    else:
        cfg = _chain_cfg(n, opts)
        G = _memo(lambda X: gamma(X, cfg))
    return max(gamma_poisson_residual(A, f, g, G, opts.tol, opts.richardson) for f, g in coordinate_pairs())


def _rho(n, rng, opts):
    if opts.rho == "constant":
        U = random_unitary(rng, n)
        return (lambda x: U), LeviSelector(n, 0)
    return connection_rho(1.0, 0.0, n, opts.solver, opts.tol), LeviSelector(n, n - 1)


def _gt_point(rng, n, opts):
    g = expm(random_complex(rng, n, 0.3), opts.tol)
    t = rng.normal(size=n) + 1j * rng.normal(size=n)
    return PointGT.make(g, t, opts.tol)


def _symplectic(n, rng, opts):
    p = _gt_point(rng, n, opts)
    rho, sel = _rho(n, rng, opts)
    return pushforward_residual(rho, p, sel, opts.tol, opts.richardson)


def _gauge(n, rng, opts):
    x = random_complex(rng, n)
    rho, sel = _rho(n, rng, opts)
    return float(np.linalg.norm(gauge_residual(rho, x, sel, opts.tol, opts.richardson)))


def _chain(n, rng, opts):
    A = random_hermitian(rng, n)
    return chain_gauge_check(A, n, tol=opts.tol, richardson=opts.richardson)


_RUNNERS: dict[str, Callable] = {
    "unitarity": _unitarity,
    "equivariance": _equivariance,
    "monodromy": _monodromy,
    "gz": _gz,
    "torus": _torus,
    "kks": _kks,
    "poisson": _poisson,
    "symplectic": _symplectic,
    "gauge": _gauge,
    "chain": _chain,
}


def sample_residuals(suite: str, n: int, samples: int, seed: int, opts: SuiteOptions | None = None) -> list[float]:
    if suite not in _RUNNERS:
        raise KeyError(suite)
    opts = opts or SuiteOptions()
    rng = rng_from_seed(seed)
    return [float(_RUNNERS[suite](n, rng, opts)) for _ in range(samples)]


def run_suite(suite: str, n: int, samples: int, seed: int, tolerance: float | None = None, opts: SuiteOptions | None = None) -> VerifyReport:
    opts = opts or SuiteOptions()
    tolerance = DEFAULT_TOLERANCE[suite] if tolerance is None else tolerance
    start = time.perf_counter()
    res = sample_residuals(suite, n, samples, seed, opts)
    wall = time.perf_counter() - start
    mx = max(res) if res else 0.0
    return VerifyReport(
        suite=suite,
        n=n,
        samples=samples,
        seed=seed,
        residuals=res,
        max_residual=mx,
        median_residual=float(np.median(res)) if res else 0.0,
        tolerance=tolerance,
        passed=bool(mx <= tolerance),
        wall_time_s=wall,
        config={
            "tolerances": opts.tol.to_dict(),
            "solver": opts.solver.to_dict(),
            "rho": opts.rho,
            "gamma": opts.gamma,
            "richardson": opts.richardson,
        },
    )


def convergence_table(n: int, samples: int, seed: int, solver: SolverConfig | None = None, tol: Tolerances = DEFAULT, levels=(1e-8, 1e-9, 1e-10, 1e-11, 1e-12)):
    """Rows ``(sample, ode_tol, oracle_deviation, unitarity_defect)``."""
    solver = solver or SolverConfig()
    rng = rng_from_seed(seed)
    rows = []
    for s in range(samples):
        A = random_hermitian(rng, n)
        for level in levels:
            spec = default_sector(0.0, 1.0, n, solver).with_solver(ode_rel_tol=level, ode_abs_tol=level)
            C = connection_matrix(spec, A, tol).C
            Co = connection_matrix_oracle(spec, A, tol)
            rows.append((s, level, float(np.linalg.norm(C - Co)), float(np.linalg.norm(C.conj().T @ C - np.eye(n)))))
    return rows


def identity_on_levi_residual(rng, n: int, opts: SuiteOptions | None = None) -> float:
    """``||C(A) - I||`` for ``A`` commuting with the irregular type."""
    opts = opts or SuiteOptions()
    A = random_levi_element(rng, n, n - 1)
    return float(np.linalg.norm(connection_matrix(_spec(0.0, 1.0, n, opts), A, opts.tol).C - np.eye(n)))


def composite_unitarity(A, opts: SuiteOptions | None = None) -> float:
    opts = opts or SuiteOptions()
    n = np.asarray(A).shape[0]
    C = composite_c(A, _chain_cfg(n, opts))
    return float(np.linalg.norm(C.conj().T @ C - np.eye(n)))
