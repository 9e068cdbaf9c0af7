"""Single-ancilla dilation of the norm-decay segment.

The non-unitary factor exp(-K t) of a no-jump segment can be realized
by entangling the register with one D-level ancilla along the
eigenbasis of K, rotating each ancilla level so its amplitude on the
flagged outcome is exp(-k_n t), and post-selecting that outcome. The
success probability of the flag is N = sum_n |c_n|^2 exp(-2 k_n t) and
the surviving register state is exp(-K t) |psi> renormalized.

The joint register-ancilla state is built explicitly as a D x D array,
which keeps the bookkeeping transparent but caps the supported size.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import schur

from .rng import RngStream

MAX_ANCILLA_DIM = 64

_HERM_TOL = 1e-12
_NORMAL_TOL = 1e-10


@dataclass(frozen=True)
class AncillaOutcome:
    """Result of one post-selected decay segment.

    eigenvalues/eigenvectors decompose K (eigenvectors as columns);
    coefficients are the overlaps of the input state with that basis.
    """

    success_probability: float
    post_state: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    coefficients: np.ndarray


def eigendecompose_k(k: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal eigendecomposition of a normal matrix.

    Hermitian input goes through the symmetric solver; other normal
    matrices through a complex Schur form (diagonal for normal input).
    Non-normal matrices have no orthonormal eigenbasis and are
    rejected.
    """
    k = np.asarray(k, dtype=complex)
    if k.ndim != 2 or k.shape[0] != k.shape[1]:
        raise ValueError("K must be a square matrix")
    scale = max(1.0, float(np.linalg.norm(k)))
    if np.linalg.norm(k - k.conj().T) <= _HERM_TOL * scale:
        w, v = np.linalg.eigh(0.5 * (k + k.conj().T))
        return w.astype(complex), v
    kk = k @ k.conj().T - k.conj().T @ k
    if np.linalg.norm(kk) > _NORMAL_TOL * scale**2:
        raise ValueError(
            "K is not normal; the ancilla construction needs an "
            "orthonormal eigenbasis"
        )
    t, z = schur(k, output="complex")
    if np.linalg.norm(t - np.diag(np.diag(t))) > 1e-8 * scale:
        raise ValueError("Schur form of K is not diagonal; K is not normal")
    return np.diag(t).copy(), z


def ancilla_evolve(k: np.ndarray, psi0, t: float) -> AncillaOutcome:
    """Apply the dilated decay segment exp(-K t) to a normalized state.

    Materializes the entangled register-ancilla state (one ancilla
    level per eigenvector of K), rotates, and post-selects the flagged
    ancilla outcome.
    """
    if t < 0:
        raise ValueError("t must be non-negative")
    psi = np.asarray(psi0, dtype=complex)
    if psi.ndim != 1:
        raise ValueError("psi0 must be a vector")
    if abs(np.linalg.norm(psi) - 1.0) > 1e-9:
        raise ValueError("psi0 must be normalized")
    d = psi.size
    if d > MAX_ANCILLA_DIM:
        raise ValueError(
            f"dimension {d} exceeds the explicit joint-state cap "
            f"{MAX_ANCILLA_DIM}"
        )
    w, v = eigendecompose_k(k)
    if k.shape != (d, d):
        raise ValueError("K and psi0 dimensions disagree")
    c = v.conj().T @ psi
    # joint[i, n] = c_n <i|K_n>, register index i, ancilla level n
    joint = v * c[None, :]
    decay = np.exp(-w * t)
    success = float(np.sum(np.abs(c) ** 2 * np.abs(decay) ** 2))
    if success < 1e-300:
        raise ValueError("post-selection probability underflowed to zero")
    post = (joint @ decay) / np.sqrt(success)
    return AncillaOutcome(
        success_probability=success,
        post_state=post,
        eigenvalues=w,
        eigenvectors=v,
        coefficients=c,
    )


def segment_norm(psi_prev, k: np.ndarray, t: float) -> float:
    """Success probability of one decay segment without running it."""
    if t < 0:
        raise ValueError("t must be non-negative")
    psi = np.asarray(psi_prev, dtype=complex)
    if abs(np.linalg.norm(psi) - 1.0) > 1e-9:
        raise ValueError("psi_prev must be normalized")
    w, v = eigendecompose_k(k)
    c = v.conj().T @ psi
    return float(np.sum(np.abs(c) ** 2 * np.abs(np.exp(-w * t)) ** 2))


def measure_ancilla(outcome: AncillaOutcome, rng: RngStream) -> bool:
    """Simulate one post-selection attempt; True on the flagged result."""
    return rng.uniform_open() < outcome.success_probability
