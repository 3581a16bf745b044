"""Gelfand-Zeitlin maps, torus actions and the map ``Gamma = Ad_C o exp``."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import DEFAULT, Tolerances
from .connection import SolverConfig, connection_matrix, default_sector
from .errors import DegenerateError, IndexRangeError, NotPositiveDefiniteError
from .linalg import as_hermitian, as_matrix, expm, hermitian_part


def principal_submatrix(A, k: int) -> np.ndarray:
    """Upper-left ``k x k`` block."""
    A = as_matrix(A)
    n = A.shape[0]
    if not 1 <= k <= n:
        raise IndexRangeError(f"k={k} outside 1..{n}")
    return A[:k, :k].copy()


@dataclass(frozen=True)
class GZPattern:
    """Row ``k - 1`` of ``entries`` holds the ascending spectrum of the ``k``-th corner."""

    n: int
    entries: tuple[tuple[float, ...], ...]

    def row(self, k: int) -> np.ndarray:
        return np.asarray(self.entries[k - 1], dtype=float)

    def flat(self) -> np.ndarray:
        return np.concatenate([np.asarray(r, dtype=float) for r in self.entries])

    def max_abs_diff(self, other: "GZPattern") -> float:
        if self.n != other.n:
            raise ValueError("patterns of different size")
        return float(np.max(np.abs(self.flat() - other.flat())))

    def to_list(self) -> list[list[float]]:
        return [list(r) for r in self.entries]


def gz_map(A, tol: Tolerances = DEFAULT) -> GZPattern:
    A = as_hermitian(A, tol)
    n = A.shape[0]
    rows = tuple(tuple(float(v) for v in np.linalg.eigvalsh(A[:k, :k])) for k in range(1, n + 1))
    return GZPattern(n, rows)


def log_gz_map(P, tol: Tolerances = DEFAULT) -> GZPattern:
    """Logarithms of the corner spectra of a positive-definite matrix."""
    P = as_hermitian(P, tol)
    if np.linalg.eigvalsh(P)[0] <= 0:
        raise NotPositiveDefiniteError("matrix is not positive definite")
    n = P.shape[0]
    rows = []
    for k in range(1, n + 1):
        w = np.linalg.eigvalsh(P[:k, :k])
        rows.append(tuple(float(v) for v in np.log(w)))
    return GZPattern(n, tuple(rows))


def cone_margin(p: GZPattern) -> float:
    """Smallest slack over all interlacing inequalities; ``inf`` when ``n = 1``."""
    margin = np.inf
    for k in range(1, p.n):
        lo, hi = p.row(k), p.row(k + 1)
        margin = min(margin, float(np.min(lo - hi[:-1])), float(np.min(hi[1:] - lo)))
    return float(margin)


def _normalise_phases(V: np.ndarray) -> np.ndarray:
    idx = np.argmax(np.abs(V), axis=0)
    lead = V[idx, np.arange(V.shape[1])]
    return V * (np.abs(lead) / lead)


def torus_action(phases, k: int, A, tol: Tolerances = DEFAULT) -> np.ndarray:
    """Conjugate ``A`` by ``V t V*`` where ``V`` diagonalises the ``k``-th corner.

    ``t = diag(phases)`` acts on the ascending eigenbasis of ``A^(k)``.
    """
    A = as_hermitian(A, tol)
    n = A.shape[0]
    if not 1 <= k < n:
        raise IndexRangeError(f"k={k} outside 1..{n - 1}")
    phases = np.asarray(phases, dtype=complex).ravel()
    if phases.shape != (k,):
        raise ValueError("need exactly k phases")
    if np.any(np.abs(np.abs(phases) - 1) > 1e-12):
        raise ValueError("phases must have unit modulus")
    if cone_margin(gz_map(A, tol)) <= tol.degeneracy_tol:
        raise DegenerateError("torus action undefined on the cone boundary")
    _, V = np.linalg.eigh(A[:k, :k])
    V = _normalise_phases(V)
    g = np.eye(n, dtype=complex)
    g[:k, :k] = (V * phases) @ V.conj().T
    return hermitian_part(g @ A @ g.conj().T)


@dataclass(frozen=True)
class GZChainConfig:
    """Irregular types ``(a_k, b_k)`` for levels ``k = 1..n``; level 1 is trivial."""

    n: int
    params: tuple[tuple[complex, complex], ...] | None = None
    solvers: tuple[SolverConfig, ...] | None = None
    tol: Tolerances = field(default=DEFAULT)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be positive")
        if self.params is not None:
            if len(self.params) != self.n:
                raise ValueError("need one (a, b) pair per level")
            for a, b in self.params:
                if a == b:
                    raise ValueError("a_k must differ from b_k")
        if self.solvers is not None and len(self.solvers) != self.n:
            raise ValueError("need one solver config per level")

    def level(self, k: int) -> tuple[complex, complex]:
        return (0.0, 1.0) if self.params is None else self.params[k - 1]

    def solver(self, k: int) -> SolverConfig:
        return SolverConfig() if self.solvers is None else self.solvers[k - 1]


def level_connection(A, k: int, cfg: GZChainConfig, oracle: bool = False):
    """``C_k(A^(k))`` as ``StokesData`` of size ``k``."""
    a, b = cfg.level(k)
    spec = default_sector(a, b, k, cfg.solver(k))
    return connection_matrix(spec, principal_submatrix(A, k), cfg.tol, oracle=oracle)


def composite_c(A, cfg: GZChainConfig | None = None) -> np.ndarray:
    """Product ``C_1(A^(1)) ... C_n(A^(n))`` of embedded level connection matrices."""
    A = as_matrix(A)
    n = A.shape[0]
    cfg = cfg or GZChainConfig(n)
    if cfg.n != n:
        raise ValueError("configuration size does not match A")
    C = np.eye(n, dtype=complex)
    for k in range(2, n + 1):
        Ck = np.eye(n, dtype=complex)
        Ck[:k, :k] = level_connection(A, k, cfg).C
        C = C @ Ck
    return C


def gamma_details(A, cfg: GZChainConfig | None = None) -> tuple[np.ndarray, np.ndarray, float]:
    """``(Gamma(A), C, asymmetry before symmetrisation)``."""
    A = as_hermitian(A, (cfg or GZChainConfig(1)).tol)
    cfg = cfg or GZChainConfig(A.shape[0])
    C = composite_c(A, cfg)
    M = C @ expm(A, cfg.tol) @ np.linalg.inv(C)
    asym = float(np.linalg.norm(M - M.conj().T))
    return hermitian_part(M), C, asym


def gamma(A, cfg: GZChainConfig | None = None) -> np.ndarray:
    """``C(A) e^A C(A)^-1``, symmetrised to be exactly Hermitian."""
    return gamma_details(A, cfg)[0]
