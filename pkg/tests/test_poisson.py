import numpy as np
import pytest

from gzstokes.config import DEFAULT
from gzstokes.errors import SingularValueError, TPrimeViolationError
from gzstokes.gz import gamma
from gzstokes.linalg import Ad_matrix, ad_matrix, expm
from gzstokes.poisson import (
    LeviSelector,
    PointGT,
    am_r,
    calibrate_sts_constant,
    casimir,
    chain_gauge_check,
    chain_rho,
    connection_rho,
    gamma_poisson_residual,
    gauge_residual,
    hermitian_gradient,
    kks_bracket,
    nu_rho,
    pi_g,
    pi_g1,
    pi_slice,
    pushforward_residual,
    skew_defect,
    standard_r,
    sts_bivector,
    sts_bracket,
    target_bracket,
    unit,
)
from gzstokes.sampling import random_complex, random_hermitian, random_unitary
from gzstokes.suites import cone_interior_sample, coordinate_pairs


def lin(Z):
    """``B -> 2 Im tr(B Z)`` for anti-Hermitian ``Z``."""
    return lambda B: float(2 * np.imag(np.trace(B @ Z)))


def anti_hermitian(rng, n):
    X = random_complex(rng, n, 1.0)
    return X - X.conj().T


# ---------------------------------------------------------------------------
# tensors


def test_casimir():
    assert np.array_equal(casimir(1), np.ones((1, 1)))
    Om = casimir(2)
    assert Om.sum() == 4 and np.array_equal(Om, Om.T)
    x = random_complex(np.random.default_rng(0), 3, 1.0)
    ad = ad_matrix(x)
    Om = casimir(3)
    assert np.max(np.abs(ad @ Om + Om @ ad.T)) <= 1e-12


def test_standard_r():
    assert not np.any(standard_r(1))
    r = standard_r(2)
    E12, E21 = unit(2, 0, 1).ravel(), unit(2, 1, 0).ravel()
    expected = DEFAULT.wedge_factor * (np.outer(E12, E21) - np.outer(E21, E12))
    assert np.array_equal(r, expected)
    assert not np.any(standard_r(3, LeviSelector(3, 0)))
    r2 = standard_r(3, LeviSelector(3, 2))
    assert np.count_nonzero(r2) == 2


def test_am_r_basic():
    assert not np.any(am_r(np.zeros((3, 3))))
    with pytest.raises(SingularValueError):
        am_r(np.diag([0, 2j * np.pi]))
    x = random_complex(np.random.default_rng(1), 3)
    assert skew_defect(am_r(x)) <= 1e-12
    assert skew_defect(am_r(x, LeviSelector(3, 2))) <= 1e-12


def test_am_r_linear_order():
    rng = np.random.default_rng(2)
    x = random_complex(rng, 3, 1.0)
    errs = []
    for eps in (0.1, 0.05, 0.025):
        lin_term = casimir(3) @ (ad_matrix(eps * x) / 12).T
        errs.append(np.linalg.norm(am_r(eps * x) - lin_term) / np.linalg.norm(lin_term))
    # relative error O(eps^2)
    assert errs[0] / errs[1] == pytest.approx(4, rel=0.05)
    assert errs[1] / errs[2] == pytest.approx(4, rel=0.05)


def test_am_r_torus_equivariance():
    rng = np.random.default_rng(3)
    x = random_complex(rng, 3, 1.0)
    h = np.diag(np.exp(rng.normal(size=3) + 1j * rng.normal(size=3)))
    K = Ad_matrix(h)
    assert np.max(np.abs(K @ am_r(x) @ K.T - am_r(h @ x @ np.linalg.inv(h)))) <= 1e-9


def test_am_r_levi_ignores_trace_and_off_block():
    rng = np.random.default_rng(4)
    x = random_complex(rng, 3, 1.0)
    y = x.copy()
    y[:2, :2] += 0.7 * np.eye(2)
    y[2, :] += 1.0
    sel = LeviSelector(3, 2)
    assert np.allclose(am_r(x, sel), am_r(y, sel), atol=1e-13)


# ---------------------------------------------------------------------------
# brackets


def test_gradient_transport_recipe():
    rng = np.random.default_rng(5)
    A = random_hermitian(rng, 3)
    Z = anti_hermitian(rng, 3)
    G = hermitian_gradient(lin(Z), A, 1e-4)
    eta = 0.5j * G
    for _ in range(3):
        B = random_hermitian(rng, 3)
        assert 2 * np.imag(np.trace(B @ eta)) == pytest.approx(lin(Z)(B), abs=1e-9)


def test_kks_linear_functionals_and_antisymmetry():
    rng = np.random.default_rng(6)
    A = random_hermitian(rng, 3)
    X, Y = anti_hermitian(rng, 3), anti_hermitian(rng, 3)
    assert kks_bracket(lin(X), lin(X), A) == 0
    assert kks_bracket(lin(X), lin(Y), A) == pytest.approx(lin(X @ Y - Y @ X)(A), abs=1e-9)
    assert kks_bracket(lin(X), lin(Y), A) == pytest.approx(-kks_bracket(lin(Y), lin(X), A), abs=1e-12)


def test_kks_jacobi_on_linear_functionals():
    rng = np.random.default_rng(7)
    A = random_hermitian(rng, 3)
    X, Y, Z = (anti_hermitian(rng, 3) for _ in range(3))

    def br(P, Q):
        return P @ Q - Q @ P

    # the bracket of linear functionals is linear again
    total = 0.0
    for a, b, c in ((X, Y, Z), (Y, Z, X), (Z, X, Y)):
        total += kks_bracket(lin(a), lin(br(b, c)), A)
    assert abs(total) <= 1e-9


def test_kks_gz_involutivity():
    rng = np.random.default_rng(8)
    A = cone_interior_sample(rng, 3)

    def tau(k, i):
        return lambda X: float(np.linalg.eigvalsh(X[:k, :k])[i])

    for (k1, i1), (k2, i2) in [((1, 0), (3, 2)), ((2, 0), (2, 1)), ((2, 1), (3, 0))]:
        assert abs(kks_bracket(tau(k1, i1), tau(k2, i2), A)) <= 1e-5


def test_leibniz_kks_and_sts():
    rng = np.random.default_rng(9)
    A = random_hermitian(rng, 2)
    X, Y, Z = (anti_hermitian(rng, 2) for _ in range(3))
    f, g, h = lin(X), lambda B: lin(Y)(B) ** 2, lambda B: float(np.trace(B @ B).real) + lin(Z)(B)

    def gh(B):
        return g(B) * h(B)

    lhs = kks_bracket(f, gh, A)
    rhs = g(A) * kks_bracket(f, h, A) + h(A) * kks_bracket(f, g, A)
    assert abs(lhs - rhs) <= 1e-6
    lhs = sts_bracket(f, gh, A)
    rhs = g(A) * sts_bracket(f, h, A) + h(A) * sts_bracket(f, g, A)
    assert abs(lhs - rhs) <= 1e-6


def test_sts_examples():
    assert not np.any(sts_bivector(np.zeros((2, 2))))
    x = random_complex(np.random.default_rng(10), 3)
    assert skew_defect(sts_bivector(x)) <= 1e-12
    A = random_hermitian(np.random.default_rng(11), 2)
    f = lin(anti_hermitian(np.random.default_rng(12), 2))
    assert abs(sts_bracket(f, f, A)) <= 1e-12


def test_sts_linearises_to_lie_poisson():
    rng = np.random.default_rng(13)
    A = random_hermitian(rng, 2)
    f, g = lin(anti_hermitian(rng, 2)), lin(anti_hermitian(rng, 2))
    errs = []
    for eps in (0.2, 0.1, 0.05):
        kks = kks_bracket(f, g, eps * A)
        sts = np.imag(sts_bracket(f, g, eps * A)) / DEFAULT.sts_real_form_constant
        errs.append(abs(sts - kks))
    assert errs[0] / errs[1] == pytest.approx(4, rel=0.1)
    assert errs[1] / errs[2] == pytest.approx(4, rel=0.1)


def test_sts_spectral_functions_are_casimirs():
    rng = np.random.default_rng(14)
    x = random_hermitian(rng, 3)

    def spec(B):
        return float(np.trace(B @ B @ B).real)

    for _ in range(3):
        f = lin(anti_hermitian(rng, 3))
        assert abs(sts_bracket(spec, f, x)) <= 1e-5


def test_calibration_selects_two():
    rng = np.random.default_rng(15)
    samples = [random_hermitian(rng, 2) for _ in range(2)]
    best, scores = calibrate_sts_constant(samples, coordinate_pairs()[:2], gamma)
    assert best == DEFAULT.sts_real_form_constant == 2.0
    assert scores[2.0] <= 1e-8
    assert all(v > 1e-2 for c, v in scores.items() if c != 2.0)


def test_gamma_poisson_examples():
    assert gamma_poisson_residual(np.array([[0.3]]), lambda P: P[0, 0].real, lambda P: P[0, 0].real ** 2, gamma) == 0
    rng = np.random.default_rng(16)
    A = random_hermitian(rng, 2)

    def tr(P):
        return float(np.trace(P).real)

    def det(P):
        return float(np.linalg.det(P).real)

    assert abs(kks_bracket(lambda X: tr(gamma(X)), lambda X: det(gamma(X)), A)) <= 1e-6
    assert abs(target_bracket(tr, det, gamma(A))) <= 1e-6
    for f, g in coordinate_pairs():
        assert gamma_poisson_residual(A, f, g, gamma) <= 1e-4


# ---------------------------------------------------------------------------
# bivectors on G x t


def _point(rng, n):
    g = expm(random_complex(rng, n, 0.3))
    return PointGT.make(g, rng.normal(size=n) + 1j * rng.normal(size=n))


def test_point_validation():
    with pytest.raises(TPrimeViolationError):
        PointGT.make(np.eye(2), [1.0, 1.0 + 2j * np.pi])
    with pytest.raises(TPrimeViolationError):
        PointGT.make(np.eye(2), [0.5, 0.5])


def test_bivector_blocks_and_endpoints():
    rng = np.random.default_rng(17)
    p = _point(rng, 3)
    base = pi_slice(p)
    assert np.array_equal(pi_g1(p, LeviSelector(3, 0)).full, base.full)
    assert np.max(np.abs(pi_g1(p, LeviSelector(3, 3)).full - pi_g(p).full)) <= 1e-12
    for B in (base, pi_g(p), pi_g1(p, LeviSelector(3, 2))):
        assert skew_defect(B.gg) <= 1e-12
        assert not np.any(B.tt)


def test_pi_g_minus_slice_at_identity():
    t = np.array([0.3 + 0.1j, -1.0, 0.8j])
    p = PointGT.make(np.eye(3), t)
    diff = (pi_g(p) - pi_slice(p)).gg
    assert np.allclose(diff, am_r(np.diag(t)) - standard_r(3), atol=1e-13)


def test_nu_rho_identity_and_fixed_points():
    rng = np.random.default_rng(18)
    p = _point(rng, 2)
    q = nu_rho(lambda x: np.eye(2), p)
    assert np.array_equal(q.g, p.g) and np.array_equal(q.t, p.t)
    rho = connection_rho(1.0, 0.0, 2)
    h = np.diag(np.exp(rng.normal(size=2) + 1j * rng.normal(size=2)))
    ph = PointGT.make(h, p.t)
    assert np.allclose(nu_rho(rho, ph).g, h, atol=1e-9)


def test_nu_rho_levi_equivariance():
    rng = np.random.default_rng(19)
    rho = connection_rho(1.0, 0.0, 3)
    p = _point(rng, 3)
    h = np.eye(3, dtype=complex)
    h[:2, :2] = expm(random_complex(rng, 2, 0.4))
    h[2, 2] = np.exp(0.3 + 0.2j)
    lhs = nu_rho(rho, PointGT(h @ p.g, p.t)).g
    rhs = h @ nu_rho(rho, p).g
    assert np.linalg.norm(lhs - rhs) <= 1e-7


def test_pushforward_trivial_and_positive():
    rng = np.random.default_rng(20)
    p = _point(rng, 2)
    assert pushforward_residual(lambda x: np.eye(2), p, LeviSelector(2, 2)) <= 1e-12
    rho = connection_rho(1.0, 0.0, 2)
    assert pushforward_residual(rho, p, LeviSelector(2, 1)) <= 1e-4


def test_pushforward_constant_negative_control():
    rng = np.random.default_rng(21)
    res = []
    for _ in range(20):
        U = random_unitary(rng, 2)
        res.append(pushforward_residual(lambda x: U, _point(rng, 2), LeviSelector(2, 0)))
    assert min(res) > 1e-2


# ---------------------------------------------------------------------------
# gauge equation


def test_gauge_trivial():
    x = random_complex(np.random.default_rng(22), 3)
    res = gauge_residual(lambda y: np.eye(3), x, LeviSelector(3, 3))
    assert np.max(np.abs(res)) <= 1e-12


def test_gauge_constant_rho_closed_form():
    rng = np.random.default_rng(23)
    x = random_complex(rng, 2)
    R = np.eye(2) + random_complex(rng, 2, 0.5)
    K = Ad_matrix(np.linalg.inv(R))
    res = gauge_residual(lambda y: R, x, LeviSelector(2, 0))
    expected = am_r(x) - K @ standard_r(2) @ K.T
    assert np.allclose(res, expected, atol=1e-10)
    assert np.linalg.norm(res) > 1e-2


def test_gauge_at_zero_pins_conventions():
    # at x = 0 the equation reduces to Alt(sum D_a (x) E_a) = -r
    rho = connection_rho(1.0, 0.0, 2)
    assert np.linalg.norm(gauge_residual(rho, np.zeros((2, 2)), LeviSelector(2, 0))) <= 1e-8


def test_gauge_connection_relative_gl3():
    rng = np.random.default_rng(24)
    rho = connection_rho(1.0, 0.0, 3)
    x = random_complex(rng, 3)
    assert np.linalg.norm(gauge_residual(rho, x, LeviSelector(3, 2))) <= 1e-3


def test_chain_gauge():
    rng = np.random.default_rng(25)
    assert chain_gauge_check(np.array([[0.4]]), 1) == 0
    A = random_hermitian(rng, 2)
    assert chain_gauge_check(A, 2) <= 1e-3


def test_chain_negative_control_skipping_a_level():
    rng = np.random.default_rng(26)
    A = random_hermitian(rng, 3)
    top_only = connection_rho(0.0, 1.0, 3)
    bad = np.linalg.norm(gauge_residual(top_only, A, LeviSelector(3, 0)))
    good = np.linalg.norm(gauge_residual(chain_rho(3), A, LeviSelector(3, 0)))
    assert good <= 1e-3 < 10e-3 < bad
