"""Seeded random inputs. All generators are ``numpy.random.Generator`` (PCG64)."""

from __future__ import annotations

import numpy as np


def rng_from_seed(seed: int) -> np.random.Generator:
    return np.random.default_rng(seed)


def random_hermitian(rng: np.random.Generator, n: int, norm_range=(0.5, 2.0)) -> np.ndarray:
    """GUE-style sample rescaled to a Frobenius norm drawn uniformly from ``norm_range``."""
    X = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    H = 0.5 * (X + X.conj().T)
    return H * (rng.uniform(*norm_range) / np.linalg.norm(H))


def random_complex(rng: np.random.Generator, n: int, scale: float = 0.5) -> np.ndarray:
    return scale * (rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)))


def random_gl(rng: np.random.Generator, n: int, max_cond: float = 10.0) -> np.ndarray:
    """Complex matrix with condition number at most ``max_cond``."""
    while True:
        g = np.eye(n) + random_complex(rng, n, 0.4)
        if np.linalg.cond(g) <= max_cond:
            return g


def random_unitary(rng: np.random.Generator, n: int) -> np.ndarray:
    Q, R = np.linalg.qr(random_complex(rng, n, 1.0))
    return Q * (np.diag(R) / np.abs(np.diag(R)))


def random_levi_element(rng: np.random.Generator, n: int, m: int) -> np.ndarray:
    """Hermitian matrix block-diagonal for the split ``(m, n - m)``."""
    A = np.zeros((n, n), dtype=complex)
    A[:m, :m] = random_hermitian(rng, m)
    A[m:, m:] = random_hermitian(rng, n - m)
    return A
