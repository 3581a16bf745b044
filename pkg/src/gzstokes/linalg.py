"""Dense complex linear algebra used throughout the package.

Matrices are plain ``numpy`` arrays of dtype ``complex128``. Operators on
``gl_n`` act on row-major vectorisations, so ``vec(E_ij)`` is the unit vector
with index ``i * n + j``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.linalg as sla

from .config import DEFAULT, Tolerances
from .errors import (
    BranchCutError,
    IllConditionedError,
    NonFiniteError,
    NotHermitianError,
    NotPositiveDefiniteError,
    OverflowRiskError,
    SingularBlockError,
    SingularValueError,
)

EPS = np.finfo(float).eps


def as_matrix(M) -> np.ndarray:
    """Coerce to a finite square complex matrix."""
    M = np.asarray(M, dtype=complex)
    if M.ndim == 0:
        M = M.reshape(1, 1)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise NonFiniteError("matrix has non-finite entries")
    return M


def hermitian_part(M: np.ndarray) -> np.ndarray:
    return 0.5 * (M + M.conj().T)


def as_hermitian(M, tol: Tolerances = DEFAULT) -> np.ndarray:
    """Validate Hermitian-ness within ``hermitian_tol`` and symmetrise exactly."""
    M = as_matrix(M)
    scale = np.linalg.norm(M)
    if np.linalg.norm(M - M.conj().T) > tol.hermitian_tol * max(scale, 1e-300):
        raise NotHermitianError("matrix is not Hermitian within tolerance")
    return hermitian_part(M)


def is_hermitian(M, tol: Tolerances = DEFAULT) -> bool:
    try:
        as_hermitian(M, tol)
    except (NotHermitianError, NonFiniteError):
        return False
    return True


def eig_hermitian(M, tol: Tolerances = DEFAULT) -> tuple[np.ndarray, np.ndarray]:
    """Ascending eigenvalues and a unitary eigenbasis of a Hermitian matrix."""
    H = as_hermitian(M, tol)
    values, U = np.linalg.eigh(H)
    return values, U


def sorted_eig(M) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition ordered by real part, ties broken by imaginary part."""
    values, V = np.linalg.eig(as_matrix(M))
    order = np.lexsort((values.imag, values.real))
    return values[order], V[:, order]


def expm(M, tol: Tolerances = DEFAULT) -> np.ndarray:
    """Matrix exponential by scaling and squaring (Pade)."""
    M = as_matrix(M)
    if np.linalg.norm(M, 2) > tol.expm_norm_bound:
        raise OverflowRiskError("norm exceeds configured exponential bound")
    return sla.expm(M)


def expm_normal(M) -> np.ndarray:
    """Exponential of a normal matrix through its eigendecomposition."""
    M = as_matrix(M)
    T, Z = sla.schur(M, output="complex")
    return (Z * np.exp(np.diag(T))) @ Z.conj().T


def _is_positive_definite_hermitian(M: np.ndarray, tol: Tolerances) -> bool:
    if not is_hermitian(M, tol):
        return False
    return bool(np.linalg.eigvalsh(hermitian_part(M))[0] > 0)


def logm_principal(M, tol: Tolerances = DEFAULT) -> np.ndarray:
    """Principal matrix logarithm.

    Positive-definite Hermitian input goes through ``eigh`` and yields an
    exactly Hermitian result. Otherwise every eigenvalue must stay off the
    closed negative real axis.
    """
    M = as_matrix(M)
    if _is_positive_definite_hermitian(M, tol):
        w, U = np.linalg.eigh(hermitian_part(M))
        return hermitian_part((U * np.log(w)) @ U.conj().T)
    w = np.linalg.eigvals(M)
    scale = max(np.max(np.abs(w)), 1.0)
    on_cut = (w.real <= 0) & (np.abs(w.imag) <= tol.branch_cut_tol * scale)
    if np.any(on_cut) or np.any(np.abs(w) <= tol.branch_cut_tol * scale):
        raise BranchCutError("eigenvalue on the closed negative real axis")
    L = sla.logm(M)
    return np.asarray(L, dtype=complex)


def log_positive_definite(P, tol: Tolerances = DEFAULT) -> np.ndarray:
    P = as_hermitian(P, tol)
    w, U = np.linalg.eigh(P)
    if w[0] <= 0:
        raise NotPositiveDefiniteError("matrix is not positive definite")
    return hermitian_part((U * np.log(w)) @ U.conj().T)


def block_lu(M, k: int, tol: Tolerances = DEFAULT):
    """Block LDU factorisation with respect to the split ``(k, n - k)``.

    Returns ``(L, D, U)`` with ``L`` unit lower block-triangular, ``D``
    block-diagonal and ``U`` unit upper block-triangular.
    """
    M = as_matrix(M)
    n = M.shape[0]
    if not 0 <= k <= n:
        raise ValueError("split index out of range")
    L = np.eye(n, dtype=complex)
    U = np.eye(n, dtype=complex)
    if k in (0, n):
        return L, M.copy(), U
    M11, M12 = M[:k, :k], M[:k, k:]
    M21, M22 = M[k:, :k], M[k:, k:]
    s = np.linalg.svd(M11, compute_uv=False)
    if s[-1] <= tol.singular_block_tol * max(np.linalg.norm(M), 1.0):
        raise SingularBlockError("leading block is singular", sigma_min=float(s[-1]))
    L21 = np.linalg.solve(M11.T, M21.T).T
    U12 = np.linalg.solve(M11, M12)
    D = np.zeros_like(M)
    D[:k, :k] = M11
    D[k:, k:] = M22 - M21 @ U12
    L[k:, :k] = L21
    U[:k, k:] = U12
    return L, D, U


# ---------------------------------------------------------------------------
# operators on gl_n


def ad_matrix(x: np.ndarray) -> np.ndarray:
    """Matrix of ``ad_x`` on row-major ``vec``."""
    x = as_matrix(x)
    n = x.shape[0]
    I = np.eye(n)
    return np.kron(x, I) - np.kron(I, x.T)


def Ad_matrix(g: np.ndarray) -> np.ndarray:
    """Matrix of ``Y -> g Y g^-1`` on row-major ``vec``."""
    g = as_matrix(g)
    return np.kron(g, np.linalg.inv(g).T)


@dataclass(frozen=True)
class AdOperator:
    """``ad_x`` on ``gl_n`` with its eigenstructure inherited from ``x``.

    If ``x = P diag(m) P^-1`` then ``ad_x`` has eigenvectors ``P E_ij P^-1``
    with eigenvalues ``m_i - m_j``.
    """

    base: np.ndarray

    @property
    def n(self) -> int:
        return self.base.shape[0]

    @property
    def matrix(self) -> np.ndarray:
        return ad_matrix(self.base)

    def eig(self, tol: Tolerances = DEFAULT) -> tuple[np.ndarray, np.ndarray]:
        x = as_matrix(self.base)
        if is_hermitian(x, tol):
            m, P = np.linalg.eigh(hermitian_part(x))
        else:
            m, P = np.linalg.eig(x)
            if np.linalg.cond(P) > tol.max_eig_condition:
                raise IllConditionedError("base matrix is not safely diagonalisable")
        values = (m[:, None] - m[None, :]).ravel()
        return values.astype(complex), np.kron(P, np.linalg.inv(P).T)


@dataclass(frozen=True)
class ScalarFunction:
    """Holomorphic scalar function with an optional pole-distance oracle."""

    name: str
    evaluate: Callable[[np.ndarray], np.ndarray]
    pole_distance: Callable[[np.ndarray], np.ndarray] | None = None

    def __call__(self, z):
        return self.evaluate(np.asarray(z, dtype=complex))


def _distance_to_nonzero_2pi_i_lattice(z: np.ndarray) -> np.ndarray:
    m = np.round(z.imag / (2 * np.pi))
    m = np.where(m == 0, np.where(z.imag >= 0, 1.0, -1.0), m)
    return np.abs(z - 2j * np.pi * m)


def _phi_am(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    out = np.empty_like(z)
    small = np.abs(z) < 0.5
    zs = z[small]
    z2 = zs * zs
    # Laurent tail of coth: z/12 - z^3/720 + z^5/30240 - z^7/1209600 + z^9/47900160
    out[small] = zs * (1 / 12 + z2 * (-1 / 720 + z2 * (1 / 30240 + z2 * (-1 / 1209600 + z2 / 47900160))))
    zl = z[~small]
    out[~small] = -1.0 / zl + 0.5 / np.tanh(zl / 2)
    return out


def _half_z_coth_half_z(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    return 1.0 + z * _phi_am(z)


phi_am = ScalarFunction("phi_am", _phi_am, _distance_to_nonzero_2pi_i_lattice)
"""``-1/z + coth(z/2)/2``, removable at 0, poles on ``2 pi i Z \\ {0}``."""

half_z_coth = ScalarFunction("half_z_coth", _half_z_coth_half_z, _distance_to_nonzero_2pi_i_lattice)
"""``(z/2) coth(z/2)``, equal to 1 at 0."""

exp_fn = ScalarFunction("exp", np.exp)


def fn_of_operator(L, f, tol: Tolerances = DEFAULT) -> np.ndarray:
    """Apply a scalar holomorphic function to a diagonalisable operator.

    ``L`` is either an :class:`AdOperator` or a square matrix. Eigenvalues
    closer than ``cluster_tol`` (relative) are merged and share one value of
    ``f``.
    """
    if isinstance(L, AdOperator):
        mu, V = L.eig(tol)
    else:
        M = as_matrix(L)
        mu, V = np.linalg.eig(M)
        if np.linalg.cond(V) > tol.max_eig_condition:
            raise IllConditionedError("operator eigenbasis is ill-conditioned")
    mu = _merge_clusters(mu, tol.cluster_tol)
    if isinstance(f, ScalarFunction) and f.pole_distance is not None:
        d = f.pole_distance(mu)
        if np.any(d < tol.singularity_tol):
            raise SingularValueError(f"{f.name} evaluated at a pole", min_distance=float(np.min(d)))
    fv = np.asarray(f(mu), dtype=complex)
    if not np.all(np.isfinite(fv)):
        raise SingularValueError("function is not finite at an eigenvalue")
    return (V * fv) @ np.linalg.inv(V)


def _merge_clusters(mu: np.ndarray, cluster_tol: float) -> np.ndarray:
    mu = np.asarray(mu, dtype=complex).copy()
    order = np.lexsort((mu.imag, mu.real))
    scale = max(1.0, float(np.max(np.abs(mu)))) if mu.size else 1.0
    start = 0
    sorted_mu = mu[order]
    groups = []
    for i in range(1, len(sorted_mu) + 1):
        if i == len(sorted_mu) or abs(sorted_mu[i] - sorted_mu[i - 1]) > cluster_tol * scale:
            groups.append(order[start:i])
            start = i
    for g in groups:
        mu[g] = mu[g].mean()
    return mu
