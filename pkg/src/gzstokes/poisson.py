"""Brackets, bivectors and r-matrices on ``gl_n``, with residual checks.

Two-tensors are ``n^2 x n^2`` arrays ``T`` with ``T[a, b]`` the coefficient
of ``e_a (x) e_b``, where ``e_a = E_ij`` and ``a = i * n + j``. An operator
``M`` acts on the first leg as ``M @ T`` and on the second as ``T @ M.T``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.linalg import expm_frechet

from .config import DEFAULT, Tolerances
from .connection import SolverConfig, connection_matrix, default_sector
from .errors import TPrimeViolationError
from .linalg import (
    AdOperator,
    Ad_matrix,
    as_hermitian,
    as_matrix,
    expm,
    fn_of_operator,
    half_z_coth,
    logm_principal,
    phi_am,
)

Functional = Callable[[np.ndarray], float]
MatrixMap = Callable[[np.ndarray], np.ndarray]


# ---------------------------------------------------------------------------
# basic tensors


def unit(n: int, i: int, j: int) -> np.ndarray:
    E = np.zeros((n, n), dtype=complex)
    E[i, j] = 1
    return E


def swap(T: np.ndarray) -> np.ndarray:
    return T.T


def skew_defect(T: np.ndarray) -> float:
    return float(np.max(np.abs(T + swap(T)))) if T.size else 0.0


def wedge(u: np.ndarray, v: np.ndarray, tol: Tolerances = DEFAULT) -> np.ndarray:
    u, v = u.ravel(), v.ravel()
    return tol.wedge_factor * (np.outer(u, v) - np.outer(v, u))


def casimir(n: int) -> np.ndarray:
    """``sum_ij E_ij (x) E_ji``: the commutation matrix on row-major ``vec``."""
    Om = np.zeros((n * n, n * n), dtype=complex)
    for i in range(n):
        for j in range(n):
            Om[i * n + j, j * n + i] = 1
    return Om


@dataclass(frozen=True)
class LeviSelector:
    """Top-left block ``gl_m`` inside ``gl_n``; its traceless part is ``g_1``."""

    n: int
    levi_size: int

    def __post_init__(self):
        if not 0 <= self.levi_size <= self.n:
            raise ValueError("levi_size must lie in 0..n")

    @property
    def m(self) -> int:
        return self.levi_size

    def embed(self, T: np.ndarray) -> np.ndarray:
        """Embed a two-tensor on ``gl_m`` into ``gl_n``."""
        n, m = self.n, self.m
        idx = np.array([i * n + j for i in range(m) for j in range(m)], dtype=int)
        out = np.zeros((n * n, n * n), dtype=complex)
        if m:
            out[np.ix_(idx, idx)] = T
        return out


def _full(n: int, selector: LeviSelector | None) -> LeviSelector:
    return selector if selector is not None else LeviSelector(n, n)


def standard_r(n: int, selector: LeviSelector | None = None, tol: Tolerances = DEFAULT) -> np.ndarray:
    """``sum_{i<j<=m} E_ij ^ E_ji``."""
    sel = _full(n, selector)
    r = np.zeros((n * n, n * n), dtype=complex)
    for i in range(sel.m):
        for j in range(i + 1, sel.m):
            r += wedge(unit(n, i, j), unit(n, j, i), tol)
    return r


def phi_of_ad(x: np.ndarray, tol: Tolerances = DEFAULT) -> np.ndarray:
    return fn_of_operator(AdOperator(as_matrix(x)), phi_am, tol)


def am_r(x, selector: LeviSelector | None = None, tol: Tolerances = DEFAULT) -> np.ndarray:
    """``(id (x) phi(ad_x)) Omega`` with ``phi(z) = -1/z + coth(z/2)/2``.

    With a selector, ``x`` is replaced by its top-left ``m x m`` block; the
    trace part drops out because ``phi(0) = 0``.
    """
    x = as_matrix(x)
    n = x.shape[0]
    sel = _full(n, selector)
    m = sel.m
    if m == 0:
        return np.zeros((n * n, n * n), dtype=complex)
    xm = x[:m, :m]
    r = casimir(m) @ phi_of_ad(xm, tol).T
    return r if m == n else sel.embed(r)


def sts_bivector(x, tol: Tolerances = DEFAULT) -> np.ndarray:
    """``(ad_x (x) (ad_x/2) coth(ad_x/2)) Omega - (ad_x (x) ad_x) r``, skew-symmetrised."""
    x = as_matrix(x)
    n = x.shape[0]
    op = AdOperator(x)
    ad = op.matrix
    coth = fn_of_operator(op, half_z_coth, tol)
    T = ad @ casimir(n) @ coth.T - ad @ standard_r(n, tol=tol) @ ad.T
    return 0.5 * (T - swap(T))


# ---------------------------------------------------------------------------
# gradients of real functionals on Herm(n)


def hermitian_basis(n: int) -> list[np.ndarray]:
    """Orthonormal basis of ``Herm(n)`` for the inner product ``Re tr(XY)``."""
    out = []
    s = 1 / np.sqrt(2)
    for i in range(n):
        out.append(unit(n, i, i))
        for j in range(i + 1, n):
            out.append(s * (unit(n, i, j) + unit(n, j, i)))
            out.append(1j * s * (unit(n, i, j) - unit(n, j, i)))
    return out


def directional(F: Callable[[np.ndarray], np.ndarray | float], X: np.ndarray, B: np.ndarray, h: float, richardson: bool = True):
    """Central difference of ``F`` at ``X`` along ``B``; optional Richardson step."""

    def cd(step):
        return (np.asarray(F(X + step * B)) - np.asarray(F(X - step * B))) / (2 * step)

    d1 = cd(h)
    if not richardson:
        return d1
    d2 = cd(h / 2)
    return (4 * d2 - d1) / 3


def hermitian_gradient(f: Functional, A: np.ndarray, h: float, richardson: bool = True) -> np.ndarray:
    """Hermitian ``G`` with ``Df_A[B] = Re tr(B G)``."""
    A = np.asarray(A, dtype=complex)
    G = np.zeros_like(A)
    for B in hermitian_basis(A.shape[0]):
        G = G + float(np.real(directional(f, A, B, h, richardson))) * B
    return G


def kks_bracket(f: Functional, g: Functional, A, tol: Tolerances = DEFAULT, richardson: bool = True) -> float:
    """Lie-Poisson bracket on ``u(n)* = Herm(n)`` under ``<A, xi> = 2 Im tr(A xi)``.

    Gradients are transported as ``eta = i G / 2``.
    """
    A = as_hermitian(A, tol)
    eta_f = 0.5j * hermitian_gradient(f, A, tol.fd_step, richardson)
    eta_g = 0.5j * hermitian_gradient(g, A, tol.fd_step, richardson)
    return float(2 * np.imag(np.trace(A @ (eta_f @ eta_g - eta_g @ eta_f))))


def _covector(G: np.ndarray) -> np.ndarray:
    # components of tr(. G) on the basis E_ij
    return G.T.ravel()


def sts_bracket(f: Functional, g: Functional, x, tol: Tolerances = DEFAULT, richardson: bool = True) -> complex:
    """``pi_STS(x)(df, dg)`` for real functionals of Hermitian ``x``.

    ``df`` is the complex-linear extension ``B -> tr(B G_f)`` of the real
    differential.
    """
    x = as_hermitian(x, tol)
    Gf = hermitian_gradient(f, x, tol.fd_step, richardson)
    Gg = hermitian_gradient(g, x, tol.fd_step, richardson)
    return complex(_covector(Gf) @ sts_bivector(x, tol) @ _covector(Gg))


def target_bracket(f: Functional, g: Functional, P, tol: Tolerances = DEFAULT, richardson: bool = True) -> float:
    """Bracket on ``Herm+(n)``: ``Im pi_STS(log P)`` on ``f o exp``, divided by the calibrated constant."""
    P = as_hermitian(P, tol)
    x = logm_principal(P, tol)

    def fe(X):
        return f(expm(X, tol))

    def ge(X):
        return g(expm(X, tol))

    val = sts_bracket(fe, ge, x, tol, richardson)
    return float(np.imag(val) / tol.sts_real_form_constant)


def gamma_poisson_residual(A, f: Functional, g: Functional, gamma_map: MatrixMap, tol: Tolerances = DEFAULT, richardson: bool = True) -> float:
    """``|{f o Gamma, g o Gamma}_KKS(A) - {f, g}_target(Gamma(A))|``."""
    A = as_hermitian(A, tol)
    if A.shape[0] == 1:
        return 0.0

    def fG(X):
        return f(gamma_map(X))

    def gG(X):
        return g(gamma_map(X))

    lhs = kks_bracket(fG, gG, A, tol, richardson)
    rhs = target_bracket(f, g, gamma_map(A), tol, richardson)
    return abs(lhs - rhs)


CALIBRATION_CANDIDATES = (1.0, -1.0, 2.0, -2.0)


def calibrate_sts_constant(samples, pairs, gamma_map: MatrixMap, tol: Tolerances = DEFAULT) -> tuple[float, dict]:
    """Pick the constant in ``CALIBRATION_CANDIDATES`` that zeroes the Poisson residuals.

    ``samples`` are Hermitian points and ``pairs`` functional pairs. Returns
    the winner and the worst residual for each candidate.
    """
    lhs, raw = [], []
    unit_tol = tol.with_(sts_real_form_constant=1.0)
    for A in samples:
        A = as_hermitian(A, tol)
        P = gamma_map(A)
        for f, g in pairs:
            lhs.append(kks_bracket(lambda X: f(gamma_map(X)), lambda X: g(gamma_map(X)), A, tol))
            raw.append(target_bracket(f, g, P, unit_tol))
    lhs, raw = np.array(lhs), np.array(raw)
    scores = {c: float(np.max(np.abs(lhs - raw / c))) for c in CALIBRATION_CANDIDATES}
    best = min(scores, key=scores.get)
    return best, scores


def exp_frechet_gradient(G: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Pull back the covector ``tr(. G)`` at ``exp(x)`` to ``x``."""
    n = x.shape[0]
    out = np.zeros_like(G)
    for i in range(n):
        for j in range(n):
            _, L = expm_frechet(x, unit(n, i, j))
            out[j, i] = np.trace(L @ G)
    return out


# ---------------------------------------------------------------------------
# bivectors on G x t


@dataclass(frozen=True)
class PointGT:
    """``(g, t)`` with ``t`` diagonal and off the affine root hyperplanes."""

    g: np.ndarray
    t: np.ndarray

    @staticmethod
    def make(g, t, tol: Tolerances = DEFAULT) -> "PointGT":
        g = as_matrix(g)
        t = np.asarray(t, dtype=complex)
        t = np.diag(t) if t.ndim == 1 else as_matrix(t)
        if t.shape != g.shape:
            raise ValueError("g and t must have the same size")
        if np.any(np.abs(t - np.diag(np.diag(t))) > 0):
            raise ValueError("t must be diagonal")
        check_t_prime(np.diag(t), tol)
        return PointGT(g, t)

    @property
    def n(self) -> int:
        return self.g.shape[0]

    @property
    def x(self) -> np.ndarray:
        return self.g @ self.t @ np.linalg.inv(self.g)


def check_t_prime(t, tol: Tolerances = DEFAULT) -> None:
    t = np.asarray(t, dtype=complex).ravel()
    d = (t[:, None] - t[None, :])[~np.eye(len(t), dtype=bool)]
    m = np.round(d.imag / (2 * np.pi))
    dist = np.abs(d - 2j * np.pi * m)
    if np.any(dist < tol.singularity_tol):
        raise TPrimeViolationError("t lies on an affine root hyperplane", min_distance=float(dist.min()))


@dataclass
class BivectorGT:
    """Element of ``Lambda^2(g + t)`` in the left trivialisation.

    ``full`` is indexed by ``[E_0, ..., E_{n^2-1}, dt_1, ..., dt_n]``.
    """

    n: int
    full: np.ndarray

    @property
    def gg(self) -> np.ndarray:
        N = self.n * self.n
        return self.full[:N, :N]

    @property
    def gt(self) -> np.ndarray:
        N = self.n * self.n
        return self.full[:N, N:]

    @property
    def tt(self) -> np.ndarray:
        N = self.n * self.n
        return self.full[N:, N:]

    def __sub__(self, other: "BivectorGT") -> "BivectorGT":
        return BivectorGT(self.n, self.full - other.full)

    def norm(self) -> float:
        return float(np.linalg.norm(self.full))


def _ad_t_pinv(t: np.ndarray) -> np.ndarray:
    """Inverse of ``ad_t`` on root spaces, zero on the centraliser (``t`` diagonal)."""
    d = np.diag(t)
    diff = (d[:, None] - d[None, :]).ravel()
    inv = np.where(np.abs(diff) > 0, 1 / np.where(np.abs(diff) > 0, diff, 1), 0)
    return np.diag(inv)


def pi_slice(p: PointGT, tol: Tolerances = DEFAULT) -> BivectorGT:
    """``l_g(t_j) ^ d/dt^j + l_g((id (x) ad_t^-1) Omega)``."""
    n = p.n
    N = n * n
    B = np.zeros((N + n, N + n), dtype=complex)
    B[:N, :N] = casimir(n) @ _ad_t_pinv(p.t).T
    for j in range(n):
        B[j * n + j, N + j] += tol.slice_gt_coefficient
        B[N + j, j * n + j] -= tol.slice_gt_coefficient
    return BivectorGT(n, B)


def _right_translate(p: PointGT, T: np.ndarray) -> np.ndarray:
    K = Ad_matrix(np.linalg.inv(p.g))
    return K @ T @ K.T


def _pi_levi(p: PointGT, selector: LeviSelector, tol: Tolerances) -> BivectorGT:
    base = pi_slice(p, tol)
    N = p.n * p.n
    corr = am_r(p.x, selector, tol) - standard_r(p.n, selector, tol)
    full = base.full.copy()
    full[:N, :N] += _right_translate(p, corr)
    return BivectorGT(p.n, full)


def pi_g(p: PointGT, tol: Tolerances = DEFAULT) -> BivectorGT:
    """``pi + r_g(r_AM(Ad_g t)) - r_g(r)``."""
    return _pi_levi(p, LeviSelector(p.n, p.n), tol)


def pi_g1(p: PointGT, selector: LeviSelector, tol: Tolerances = DEFAULT) -> BivectorGT:
    """``pi + r_g(r_AM_{g1}(Ad_g t)) - r_g(r_{g1})``."""
    return _pi_levi(p, selector, tol)


def nu_rho(rho: MatrixMap, p: PointGT) -> PointGT:
    """``(rho(g t g^-1) g, t)``."""
    return PointGT(as_matrix(rho(p.x)) @ p.g, p.t)


def _rho_log_derivatives(rho: MatrixMap, x: np.ndarray, h: float, richardson: bool = True) -> list[np.ndarray]:
    """``rho(x)^-1 d rho_x[E_a]`` for every basis element ``E_a``."""
    n = x.shape[0]
    R_inv = np.linalg.inv(as_matrix(rho(x)))
    return [R_inv @ directional(rho, x, unit(n, i, j), h, richardson) for i in range(n) for j in range(n)]


def nu_jacobian(rho: MatrixMap, p: PointGT, h: float, richardson: bool = True) -> np.ndarray:
    """Differential of ``nu_rho`` between left trivialisations at ``p`` and ``nu(p)``.

    A tangent ``(xi, s)`` moves ``x = g t g^-1`` by ``g([xi, t] + s) g^-1``
    and maps to ``(xi + g^-1 rho^-1 d rho[dx] g, s)``.
    """
    n = p.n
    N = n * n
    g, t = p.g, p.t
    g_inv = np.linalg.inv(g)
    D = _rho_log_derivatives(rho, p.x, h, richardson)
    J = np.eye(N + n, dtype=complex)
    for col in range(N + n):
        if col < N:
            xi = unit(n, col // n, col % n)
            dx = g @ (xi @ t - t @ xi) @ g_inv
        else:
            j = col - N
            dx = g @ unit(n, j, j) @ g_inv
        drho = sum(dx.ravel()[a] * D[a] for a in range(N))
        J[:N, col] += (g_inv @ drho @ g).ravel()
    return J


def pushforward_residual(rho: MatrixMap, p: PointGT, selector: LeviSelector, tol: Tolerances = DEFAULT, richardson: bool = True) -> float:
    """``|| J pi_g1(p) J^T - pi_g(nu(p)) ||`` over all coefficients."""
    J = nu_jacobian(rho, p, tol.fd_step_pushforward, richardson)
    pushed = J @ pi_g1(p, selector, tol).full @ J.T
    target = pi_g(nu_rho(rho, p), tol).full
    return float(np.linalg.norm(pushed - target))


# ---------------------------------------------------------------------------
# gauge equation


def gauge_residual(rho: MatrixMap, x, selector: LeviSelector, tol: Tolerances = DEFAULT, richardson: bool = True) -> np.ndarray:
    """``r_AM(x) - Ad_{rho^-1}^2 r_AM_{g1}(x) - (r - r_{g1})^rho`` as a two-tensor.

    With ``D_a = rho^-1 d rho[E_a^dual]`` (``E_ij^dual = E_ji``)::

        (r)^rho = sum D_a (x) E_a - sum E_a (x) D_a + Ad_{rho^-1}^2 r
                  + s sum_ab tr(x [E_a, E_b]) D_a (x) D_b

    where ``s`` is ``tol.gauge_bracket_sign``.
    """
    x = as_matrix(x)
    n = x.shape[0]
    N = n * n
    R_inv = np.linalg.inv(as_matrix(rho(x)))
    K = Ad_matrix(R_inv)
    D_by_dir = _rho_log_derivatives(rho, x, tol.fd_step, richardson)
    # trace dual of E_ij is E_ji
    D = np.array([D_by_dir[j * n + i].ravel() for i in range(n) for j in range(n)])
    E = np.eye(N, dtype=complex)
    lhs = am_r(x, tol=tol) - K @ am_r(x, selector, tol) @ K.T
    rel = standard_r(n, tol=tol) - standard_r(n, selector, tol)
    Xb = np.zeros((N, N), dtype=complex)
    for a in range(N):
        Ea = unit(n, a // n, a % n)
        for b in range(N):
            Eb = unit(n, b // n, b % n)
            Xb[a, b] = np.trace(x @ (Ea @ Eb - Eb @ Ea))
    rhs = D.T @ E - E.T @ D + K @ rel @ K.T + tol.gauge_bracket_sign * D.T @ Xb @ D
    return lhs - rhs


def connection_rho(a: complex, b: complex, n: int, solver: SolverConfig | None = None, tol: Tolerances = DEFAULT) -> MatrixMap:
    """``x -> C(x)`` for the irregular type ``diag(a, ..., a, b)``."""
    spec = default_sector(a, b, n, solver)

    def rho(x):
        return connection_matrix(spec, x, tol).C

    return rho


def chain_rho(n: int, params=None, levels: int | None = None, tol: Tolerances = DEFAULT) -> MatrixMap:
    """``x -> C_1(x^(1)) ... C_i(x^(i))`` embedded in ``gl_n``; ``levels`` defaults to ``n``."""
    levels = n if levels is None else levels

    def rho(x):
        x = as_matrix(x)
        C = np.eye(n, dtype=complex)
        for k in range(2, levels + 1):
            a, b = (0.0, 1.0) if params is None else params[k - 1]
            Ck = np.eye(n, dtype=complex)
            Ck[:k, :k] = connection_matrix(default_sector(a, b, k), x[:k, :k], tol).C
            C = C @ Ck
        return C

    return rho


def chain_gauge_check(A, i: int, params=None, tol: Tolerances = DEFAULT, richardson: bool = True) -> float:
    """Norm of the absolute gauge residual on ``gl_i`` for ``rho_i = C_1 ... C_i``."""
    A = as_matrix(A)
    if not 1 <= i <= A.shape[0]:
        raise ValueError("level out of range")
    x = A[:i, :i]
    rho = chain_rho(i, params, i, tol)
    return float(np.linalg.norm(gauge_residual(rho, x, LeviSelector(i, 0), tol, richardson)))
