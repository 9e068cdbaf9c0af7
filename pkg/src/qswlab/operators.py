"""Dense operators for a walk graph and their propagators.

Everything lives in the single-excitation basis, one amplitude per
node, so an N-node graph yields N x N matrices.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import expm

from .graph import GraphSpec


def build_hamiltonian(g: GraphSpec) -> np.ndarray:
    """Hermitian coupling matrix H[i, j] = g_ij."""
    h = np.zeros((g.node_count, g.node_count), dtype=complex)
    for (i, j), val in g.coherent.items():
        h[i, j] = val
    return h


def build_k(g: GraphSpec) -> np.ndarray:
    """Diagonal decay generator K = diag(lambda_k / 2).

    With the jump convention used here, the no-jump norm of a state
    resting on node k decays as exp(-lambda_k * t), which fixes the
    factor of one half.
    """
    return np.diag(g.lambda_vector() / 2.0).astype(complex)


def commutator_norm(h: np.ndarray, k: np.ndarray) -> float:
    """Frobenius norm of [H, K]; zero iff the two evolutions commute."""
    h = np.asarray(h, dtype=complex)
    k = np.asarray(k, dtype=complex)
    if h.shape != k.shape or h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ValueError("H and K must be square matrices of equal shape")
    return float(np.linalg.norm(h @ k - k @ h))


def propagator_nonhermitian(h: np.ndarray, k: np.ndarray, t: float) -> np.ndarray:
    """exp(-i (H - i K) t): coherent hopping with norm decay."""
    if t < 0:
        raise ValueError("t must be non-negative")
    a = -1j * (np.asarray(h, dtype=complex) - 1j * np.asarray(k, dtype=complex))
    return expm(a * t)


def trotter_propagator(
    h: np.ndarray, k: np.ndarray, t: float, steps: int
) -> np.ndarray:
    """First-order split (exp(-i H t/n) exp(-K t/n))^n.

    Useful when H and K do not commute: the deviation from the exact
    non-Hermitian propagator shrinks like 1/n.
    """
    if t < 0:
        raise ValueError("t must be non-negative")
    if steps < 1:
        raise ValueError("steps must be at least 1")
    dt = t / steps
    u = expm(-1j * np.asarray(h, dtype=complex) * dt)
    d = expm(-np.asarray(k, dtype=complex) * dt)
    return np.linalg.matrix_power(u @ d, steps)
