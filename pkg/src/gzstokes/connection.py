"""Connection matrices of ``d - (lam/z^2 + A/(2 pi i z)) dz``.

The connection matrix ``C(A)`` is defined by ``F_inf = F_0 C`` where

* ``F_inf = H_inf(z) z^(A/2 pi i)`` with ``H_inf`` holomorphic away from 0 and
  ``H_inf(inf) = 1`` (convergent series in ``1/z``), and
* ``F_0 = H_0(z) exp(-lam/z) z^(delta(A)/2 pi i)`` is the canonical solution
  on the chosen Stokes sector, ``H_0`` asymptotic to 1 there.

``H_0`` is obtained by optimally truncating its formal power series at a small
radius ``r0`` on a ray inside the sector and integrating the ODE for ``H_0``
out to ``r1``, where ``F_inf`` is summed directly.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np
import scipy.linalg as sla
from scipy.integrate import DOP853

from .config import DEFAULT, Tolerances
from .errors import (
    DegenerateIrregularTypeError,
    MatchingDivergenceError,
    ResonantError,
    StepLimitError,
)
from .linalg import as_matrix, block_lu, expm

TWO_PI_I = 2j * np.pi


@dataclass(frozen=True)
class SolverConfig:
    """Matching radii, series truncation and step control.

    ``r0``/``r1`` of ``None`` are chosen adaptively from the spacing of the
    irregular type. The path runs along the sector bisector out to ``r1``;
    a nonzero ``path_offset`` then follows the circle ``|z| = r1`` to an
    endpoint rotated by that fraction of the sector width.
    """

    r0: float | None = None
    r1: float | None = None
    series_order_inf: int = 60
    series_order_zero: int = 80
    ode_rel_tol: float = 1e-12
    ode_abs_tol: float = 1e-12
    max_steps: int = 200_000
    path_offset: float = 0.0

    def __post_init__(self):
        if self.r0 is not None and self.r1 is not None and not 0 < self.r0 < self.r1:
            raise ValueError("need 0 < r0 < r1")
        if self.ode_rel_tol <= 0 or self.ode_abs_tol <= 0:
            raise ValueError("tolerances must be positive")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class ConnectionSpec:
    """Irregular type, Stokes sector and branch of ``log z``.

    ``branch_center`` is the bisector of the sector; ``arg z`` is taken in
    ``(branch_center - pi, branch_center + pi]`` and powers are
    ``z^M = exp(M (ln|z| + i (arg z - log_reference)))``.
    """

    lam: tuple[complex, ...]
    sector: tuple[float, float]
    branch_center: float
    log_reference: float = 0.0
    solver: SolverConfig = field(default_factory=SolverConfig)

    @property
    def k(self) -> int:
        return len(self.lam)

    @property
    def lam_matrix(self) -> np.ndarray:
        return np.diag(np.asarray(self.lam, dtype=complex))

    def with_solver(self, **changes) -> "ConnectionSpec":
        return replace(self, solver=replace(self.solver, **changes))

    def to_dict(self) -> dict:
        return {
            "lam": [[complex(v).real, complex(v).imag] for v in self.lam],
            "sector": list(self.sector),
            "branch_center": self.branch_center,
            "log_reference": self.log_reference,
            "solver": self.solver.to_dict(),
        }


@dataclass
class StokesData:
    C: np.ndarray
    b_minus: np.ndarray
    b_plus: np.ndarray
    middle: np.ndarray
    residuals: dict = field(default_factory=dict)


def _wrap(theta: float) -> float:
    return float(np.mod(theta, 2 * np.pi))


def stokes_rays(lam, tol: float = 1e-12) -> list[float]:
    """Sorted distinct directions of the nonzero differences ``lam_i - lam_j``."""
    lam = np.asarray(lam, dtype=complex).ravel() if np.ndim(lam) <= 1 else np.diag(as_matrix(lam))
    angles = []
    for i in range(len(lam)):
        for j in range(len(lam)):
            d = lam[i] - lam[j]
            if i != j and abs(d) > tol:
                angles.append(_wrap(np.angle(d)))
    angles.sort()
    out: list[float] = []
    for a in angles:
        if not out or min(abs(a - out[-1]), 2 * np.pi - abs(a - out[-1])) > 1e-12:
            out.append(a)
    if len(out) > 1 and 2 * np.pi - (out[-1] - out[0]) <= 1e-12:
        out.pop()
    return out


def default_sector(a: complex, b: complex, k: int, solver: SolverConfig | None = None) -> ConnectionSpec:
    """Irregular type ``diag(a, ..., a, b)`` with the Stokes sector preceding ``arg(a - b)``.

    The sector is ``(arg(a-b) - pi, arg(a-b))``; its bisector is
    perpendicular to ``a - b``. Going counterclockwise from this sector to its
    opposite crosses the ray through ``a - b``, so the roots ``e_i - e_k``
    (``i < k``) are positive and the Stokes factor ``b_+`` is upper block
    triangular. Logarithms are measured from the bisector.
    """
    if k < 1:
        raise ValueError("dimension must be positive")
    if abs(complex(a) - complex(b)) == 0:
        raise DegenerateIrregularTypeError("a and b coincide")
    theta0 = float(np.angle(complex(a) - complex(b)))
    lo, hi = theta0 - np.pi, theta0
    center = theta0 - np.pi / 2
    lam = tuple([complex(a)] * (k - 1) + [complex(b)])
    return ConnectionSpec(
        lam=lam,
        sector=(lo, hi),
        branch_center=center,
        log_reference=center,
        solver=solver or SolverConfig(),
    )


def validate_spec(spec: ConnectionSpec) -> None:
    lam = np.asarray(spec.lam, dtype=complex)
    rays = stokes_rays(lam)
    if spec.k > 1 and not rays:
        raise DegenerateIrregularTypeError("irregular type is scalar")
    lo, hi = spec.sector
    if not lo < hi:
        raise ValueError("sector must satisfy theta_minus < theta_plus")
    for r in rays:
        for shift in (-2 * np.pi, 0.0, 2 * np.pi):
            rr = r + shift
            if lo + 1e-12 < rr < hi - 1e-12:
                raise ValueError("sector contains a Stokes ray in its interior")


def check_nonresonant(A, tol: Tolerances = DEFAULT) -> bool:
    """True iff no eigenvalue difference of ``A`` is near ``2 pi i m``, ``m >= 1``."""
    mu = np.linalg.eigvals(as_matrix(A))
    d = (mu[:, None] - mu[None, :]).ravel()
    m = np.round((d / TWO_PI_I).real)
    hit = (m >= 1) & (np.abs(d - TWO_PI_I * m) < tol.resonance_tol)
    return not bool(np.any(hit))


def _centralizer_mask(lam: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    return np.abs(lam[:, None] - lam[None, :]) <= tol


def delta_part(A: np.ndarray, lam) -> np.ndarray:
    """Projection of ``A`` onto the centraliser of ``lam`` along the root spaces."""
    lam = np.asarray(lam, dtype=complex)
    return np.where(_centralizer_mask(lam), A, 0)


def _power(M: np.ndarray, z: complex, spec: ConnectionSpec) -> np.ndarray:
    """``z^M`` on the chosen branch."""
    arg = np.angle(z)
    c = spec.branch_center
    arg = arg + 2 * np.pi * np.ceil((c - np.pi - arg) / (2 * np.pi))
    if arg <= c - np.pi:
        arg += 2 * np.pi
    log = math.log(abs(z)) + 1j * (arg - spec.log_reference)
    return sla.expm(M * log)


# ---------------------------------------------------------------------------
# series at infinity


def h_infinity_series(spec: ConnectionSpec, A, m: int, tol: Tolerances = DEFAULT):
    """Coefficients ``H_1..H_m`` of ``H_inf = 1 + sum H_j z^-j``.

    Each order solves ``(ad_{A/2 pi i} + j) H_j = -lam H_{j-1}``, invertible
    exactly when ``A`` is non-resonant.
    """
    A = as_matrix(A)
    At = A / TWO_PI_I
    lam = spec.lam_matrix
    n = A.shape[0]
    coeffs = []
    prev = np.eye(n, dtype=complex)
    for j in range(1, m + 1):
        a = At + j * np.eye(n)
        rhs = -lam @ prev
        _check_sylvester(a, -At, j, tol)
        Hj = sla.solve_sylvester(a, -At, rhs)
        coeffs.append(Hj)
        prev = Hj
    return coeffs


def _check_sylvester(a: np.ndarray, b: np.ndarray, j: int, tol: Tolerances) -> None:
    ea = np.linalg.eigvals(a)
    eb = np.linalg.eigvals(b)
    gap = np.min(np.abs(ea[:, None] + eb[None, :]))
    if gap < tol.resonance_tol * max(1, j):
        raise ResonantError(f"order-{j} recursion is singular", gap=float(gap))


def h_infinity_residual(spec: ConnectionSpec, A, coeffs, z: complex) -> float:
    """Norm of ``H' + H At/z - (lam/z^2 + At/z) H`` for the truncated series."""
    A = as_matrix(A)
    At = A / TWO_PI_I
    lam = spec.lam_matrix
    n = A.shape[0]
    H = np.eye(n, dtype=complex)
    dH = np.zeros((n, n), dtype=complex)
    for j, Hj in enumerate(coeffs, start=1):
        H = H + Hj * z ** (-j)
        dH = dH - j * Hj * z ** (-j - 1)
    R = dH + H @ At / z - (lam / z**2 + At / z) @ H
    return float(np.linalg.norm(R))


def _sum_h_infinity(spec, A, z, m, tol):
    coeffs = h_infinity_series(spec, A, m, tol)
    n = spec.k
    H = np.eye(n, dtype=complex)
    last = 0.0
    for j, Hj in enumerate(coeffs, start=1):
        term = Hj * z ** (-j)
        H = H + term
        last = float(np.linalg.norm(term))
    return H, last, coeffs


# ---------------------------------------------------------------------------
# formal series at zero


def formal_series_zero(spec: ConnectionSpec, A, order: int, tol: Tolerances = DEFAULT):
    """Coefficients ``h_0 = 1, h_1, ...`` of the formal solution at 0.

    The off-centraliser part of ``h_{j+1}`` comes from
    ``[lam, h_{j+1}] = j h_j - At h_j + h_j L``; its centraliser part from the
    solvability of the next order, a Sylvester equation in ``ad_L``.
    """
    A = as_matrix(A)
    lam = np.asarray(spec.lam, dtype=complex)
    n = len(lam)
    At = A / TWO_PI_I
    mask = _centralizer_mask(lam)
    L = np.where(mask, At, 0)
    A_off = np.where(mask, 0, At)
    diff = lam[:, None] - lam[None, :]
    inv_diff = np.where(mask, 0, 1 / np.where(mask, 1, diff))
    coeffs = [np.eye(n, dtype=complex)]
    for j in range(order):
        h = coeffs[-1]
        R = j * h - At @ h + h @ L
        o = R * inv_diff
        q = -np.where(mask, A_off @ o, 0)
        a = L - (j + 1) * np.eye(n)
        _check_sylvester(a, -L, j + 1, tol)
        d = sla.solve_sylvester(a, -L, q)
        d = np.where(mask, d, 0)
        coeffs.append(o + d)
    return coeffs


def _sum_optimal(coeffs, z, target):
    """Optimally truncated sum; returns value and the first omitted term size."""
    H = np.zeros_like(coeffs[0])
    prev = np.inf
    omitted = np.inf
    for j, h in enumerate(coeffs):
        term = h * z**j
        size = float(np.linalg.norm(term))
        if j > 1 and size > prev:
            omitted = size
            break
        H = H + term
        prev = size
        if j > 0 and size < 1e-3 * target:
            nxt = float(np.linalg.norm(coeffs[j + 1] * z ** (j + 1))) if j + 1 < len(coeffs) else size
            omitted = nxt
            break
    return H, omitted


# ---------------------------------------------------------------------------
# integration


def _run(solver, steps, max_steps):
    while solver.status == "running":
        solver.step()
        steps += 1
        if steps > max_steps:
            raise StepLimitError("integrator exceeded max_steps", steps=steps)
    if solver.status != "finished":
        raise StepLimitError("integrator failed: " + str(solver.status))
    return steps


def _integrate_h0(spec, At, L, H_start, phi, r0, r1, phi_end):
    """Carry ``H_0`` radially from ``r0`` to ``r1`` at angle ``phi``, then along the arc to ``phi_end``."""
    lam = spec.lam_matrix
    n = spec.k
    cfg = spec.solver

    def field_(z, H):
        return (lam @ H - H @ lam) / z**2 + (At @ H - H @ L) / z

    z_dir = complex(np.exp(1j * phi))

    def radial(r, y):
        return (z_dir * field_(r * z_dir, y.reshape(n, n))).ravel()

    solver = DOP853(radial, r0, H_start.ravel(), r1, rtol=cfg.ode_rel_tol, atol=cfg.ode_abs_tol)
    steps = _run(solver, 0, cfg.max_steps)
    y = solver.y
    if phi_end != phi:

        def arc(t, y):
            z = r1 * np.exp(1j * t)
            return (1j * z * field_(z, y.reshape(n, n))).ravel()

        solver = DOP853(arc, phi, y, phi_end, rtol=cfg.ode_rel_tol, atol=cfg.ode_abs_tol)
        steps = _run(solver, steps, cfg.max_steps)
        y = solver.y
    return y.reshape(n, n), steps


def _spacing(lam: np.ndarray) -> tuple[float, float]:
    d = np.abs(lam[:, None] - lam[None, :])
    nz = d[d > 1e-12]
    return float(nz.min()), float(nz.max())


def _compute_C(spec: ConnectionSpec, A: np.ndarray, tol: Tolerances):
    lam = np.asarray(spec.lam, dtype=complex)
    n = len(lam)
    if n == 1 or np.allclose(lam, lam[0], atol=1e-14, rtol=0):
        return np.eye(n, dtype=complex), {"inner_error": 0.0, "outer_error": 0.0, "steps": 0}
    if not check_nonresonant(A, tol):
        raise ResonantError("A is resonant")
    cfg = spec.solver
    At = A / TWO_PI_I
    L = delta_part(At, lam)
    dmin, dmax = _spacing(lam)
    target = cfg.ode_abs_tol

    lo, hi = spec.sector
    phi = spec.branch_center
    phi_end = phi + cfg.path_offset * (hi - lo)
    z_dir = complex(np.exp(1j * phi))
    z_end = complex(np.exp(1j * phi_end))

    # inner matching
    r0 = cfg.r0 if cfg.r0 is not None else dmin / (math.log(1.0 / target) + 6.0)
    coeffs0 = formal_series_zero(spec, A, cfg.series_order_zero, tol)
    for _ in range(12):
        H_start, inner_err = _sum_optimal(coeffs0, r0 * z_dir, target)
        if inner_err <= target or cfg.r0 is not None:
            break
        r0 /= 1.5
    if inner_err > max(target, 1e-6):
        raise MatchingDivergenceError("inner series truncation error too large", inner_error=inner_err)

    # outer matching
    r1 = cfg.r1 if cfg.r1 is not None else max(1.0, dmax)
    for _ in range(20):
        z1 = r1 * z_end
        Hinf, last, coeffs_inf = _sum_h_infinity(spec, A, z1, cfg.series_order_inf, tol)
        outer_err = h_infinity_residual(spec, A, coeffs_inf, z1)
        if outer_err <= target or cfg.r1 is not None:
            break
        r1 *= 1.5
    if outer_err > max(target, 1e-6):
        raise MatchingDivergenceError("outer series residual too large", outer_error=outer_err)
    if r0 >= r1:
        raise MatchingDivergenceError("matching radii out of order")

    H1, steps = _integrate_h0(spec, At, L, H_start, phi, r0, r1, phi_end)
    F0 = H1 @ np.diag(np.exp(-(lam - lam[-1]) / z1)) @ _power(L, z1, spec)
    Finf = Hinf @ _power(At, z1, spec) * np.exp(lam[-1] / z1)
    C = np.linalg.solve(F0, Finf)
    diag = {
        "r0": r0,
        "r1": r1,
        "path_angle": phi_end,
        "inner_error": inner_err,
        "outer_error": outer_err,
        "steps": steps,
    }
    return C, diag


def stokes_factors(C, A, k: int, tol: Tolerances = DEFAULT):
    """Block LDU of ``C e^A C^-1`` at split ``k - 1``: ``(b_minus, middle, b_plus)``."""
    C = as_matrix(C)
    A = as_matrix(A)
    M = C @ expm(A, tol) @ np.linalg.inv(C)
    return block_lu(M, k - 1, tol)


def _assemble(C, A, spec, diag, tol):
    k = spec.k
    if k == 1:
        eA = expm(A, tol)
        return StokesData(C, np.eye(1, dtype=complex), np.eye(1, dtype=complex), eA, dict(diag, monodromy_residual=0.0))
    b_minus, middle, b_plus = stokes_factors(C, A, k, tol)
    M = C @ expm(A, tol) @ np.linalg.inv(C)
    res = dict(diag)
    res["monodromy_residual"] = float(np.linalg.norm(M - b_minus @ middle @ b_plus))
    res["formal_monodromy_error"] = float(np.linalg.norm(middle[: k - 1, : k - 1] - expm(A[: k - 1, : k - 1], tol)))
    res["unitarity_defect"] = float(np.linalg.norm(C.conj().T @ C - np.eye(k)))
    res["det_defect"] = float(abs(np.linalg.det(C) - 1))
    return StokesData(C, b_minus, b_plus, middle, res)


def connection_matrix(spec: ConnectionSpec, A, tol: Tolerances = DEFAULT, oracle: bool = False) -> StokesData:
    """Connection matrix and Stokes factors; ``oracle=True`` adds the cross-check."""
    A = as_matrix(A)
    if A.shape[0] != spec.k:
        raise ValueError("A has the wrong dimension")
    validate_spec(spec)
    C, diag = _compute_C(spec, A, tol)
    data = _assemble(C, A, spec, diag, tol)
    if oracle:
        Co = connection_matrix_oracle(spec, A, tol)
        data.residuals["oracle_deviation"] = float(np.linalg.norm(C - Co))
    return data


def oracle_spec(spec: ConnectionSpec) -> ConnectionSpec:
    """Independent configuration: other radii, orders, tolerances and ray."""
    s = spec.solver
    lam = np.asarray(spec.lam, dtype=complex)
    if spec.k > 1 and not np.allclose(lam, lam[0]):
        dmin, dmax = _spacing(lam)
        r0 = (s.r0 if s.r0 is not None else dmin / (math.log(1.0 / s.ode_abs_tol) + 6.0)) / 2
        r1 = 2 * (s.r1 if s.r1 is not None else max(1.0, dmax))
    else:
        r0, r1 = 0.5, 2.0
    return spec.with_solver(
        r0=r0,
        r1=r1,
        series_order_inf=2 * s.series_order_inf,
        series_order_zero=2 * s.series_order_zero,
        ode_rel_tol=max(s.ode_rel_tol / 100, 3e-14),
        ode_abs_tol=max(s.ode_abs_tol / 100, 1e-16),
        path_offset=0.25,
    )


def connection_matrix_oracle(spec: ConnectionSpec, A, tol: Tolerances = DEFAULT) -> np.ndarray:
    A = as_matrix(A)
    validate_spec(spec)
    C, _ = _compute_C(oracle_spec(spec), A, tol)
    return C
