"""Exact master-equation evolution of a walk density matrix.

For jump operators |m><n| at rate gamma(n->m) the generator reduces to
a closed form on the node basis: coherent commutator motion, population
transfer along the rates, and uniform damping of each coherence by half
the joined leaving rates. This module integrates it with a fixed-step
classical Runge-Kutta scheme so that results are deterministic and the
convergence order is known.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import GraphSpec
from .operators import build_hamiltonian

_HERM_TOL = 1e-10
_TRACE_TOL = 1e-9
_EIG_TOL = 1e-9


@dataclass(frozen=True)
class PopulationSeries:
    """Sampled node populations along an evolution.

    populations[s, k] is the occupation of node k at sample_times[s].
    When requested, rhos holds the full density matrix snapshots.
    """

    sample_times: np.ndarray
    populations: np.ndarray
    rhos: np.ndarray | None = None


def density_from_state(psi) -> np.ndarray:
    """Rank-one density matrix |psi><psi| from a normalized state."""
    psi = np.asarray(psi, dtype=complex)
    nrm = np.linalg.norm(psi)
    if nrm <= 0:
        raise ValueError("state must be nonzero")
    psi = psi / nrm
    return np.outer(psi, psi.conj())


def check_density_matrix(rho: np.ndarray) -> np.ndarray:
    """Validate Hermiticity, unit trace, and positivity; returns rho."""
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError("density matrix must be square")
    scale = max(1.0, float(np.linalg.norm(rho)))
    if np.linalg.norm(rho - rho.conj().T) > _HERM_TOL * scale:
        raise ValueError("density matrix is not Hermitian")
    if abs(np.trace(rho).real - 1.0) > _TRACE_TOL:
        raise ValueError(f"density matrix trace {np.trace(rho)!r}, expected 1")
    w = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))
    if w.min() < -_EIG_TOL:
        raise ValueError(f"density matrix has negative eigenvalue {w.min()!r}")
    return rho


def lindblad_rhs(g: GraphSpec, rho: np.ndarray) -> np.ndarray:
    """Time derivative of rho under the walk generator."""
    h = build_hamiltonian(g)
    gam = g.gamma_matrix()
    lam = g.lambda_vector()
    return _rhs(np.asarray(rho, dtype=complex), h, gam, lam)


def _rhs(rho: np.ndarray, h: np.ndarray, gam: np.ndarray, lam: np.ndarray):
    pops = np.real(np.diag(rho))
    out = -1j * (h @ rho - rho @ h)
    out -= 0.5 * (lam[:, None] + lam[None, :]) * rho
    # gain: node m collects gamma(n->m) * p_n
    out += np.diag(gam.T @ pops)
    return out


def default_step(g: GraphSpec) -> float:
    """Integration step keeping local error far below sampling needs."""
    h = build_hamiltonian(g)
    scale = max(
        float(np.linalg.norm(h, 2)),
        float(g.lambda_vector().max(initial=0.0)),
    )
    if scale <= 0:
        return 1e-2
    return min(1e-2, 0.01 / scale)


def integrate(
    g: GraphSpec,
    rho0: np.ndarray,
    t_final: float,
    dt: float | None = None,
    sample_times=None,
    keep_rhos: bool = False,
) -> PopulationSeries:
    """Evolve rho0 to t_final, sampling populations along the way.

    Marches with the classical fourth-order Runge-Kutta rule at fixed
    step dt (the final step is shortened to land on t_final) and
    re-Hermitizes after every step to stop drift. Each requested sample
    time is reported with the state at the last completed step boundary
    at or before it, so samples never interpolate.
    """
    rho = check_density_matrix(rho0).copy()
    if t_final < 0:
        raise ValueError("t_final must be non-negative")
    if dt is None:
        dt = default_step(g)
    if dt <= 0:
        raise ValueError("dt must be positive")
    if sample_times is None:
        sample_times = [t_final]
    times = np.asarray(sample_times, dtype=float)
    if times.ndim != 1 or times.size == 0:
        raise ValueError("sample_times must be a non-empty 1-d sequence")
    if np.any(np.diff(times) < 0):
        raise ValueError("sample_times must be sorted")
    if times[0] < 0 or times[-1] > t_final * (1 + 1e-12) + 1e-15:
        raise ValueError("sample_times must lie within [0, t_final]")

    h = build_hamiltonian(g)
    gam = g.gamma_matrix()
    lam = g.lambda_vector()

    n_steps = max(0, int(np.ceil(t_final / dt - 1e-9)))
    tol = 1e-9 * max(dt, 1.0)

    pops_out = np.empty((times.size, g.node_count))
    rhos_out = np.empty((times.size, *rho.shape), dtype=complex) if keep_rhos else None
    cursor = 0

    def record_until(t_next_boundary: float, t_now: float):
        nonlocal cursor
        while cursor < times.size and times[cursor] < t_next_boundary - tol:
            p = np.real(np.diag(rho))
            if p.min() < -1e-9 or abs(p.sum() - 1.0) > 1e-9:
                raise RuntimeError(
                    f"integration lost positivity or trace at t={t_now!r}"
                )
            pops_out[cursor] = p
            if rhos_out is not None:
                rhos_out[cursor] = rho
            cursor += 1

    t = 0.0
    for step in range(n_steps):
        t_end = min((step + 1) * dt, t_final)
        record_until(t_end, t)
        hstep = t_end - t
        k1 = _rhs(rho, h, gam, lam)
        k2 = _rhs(rho + 0.5 * hstep * k1, h, gam, lam)
        k3 = _rhs(rho + 0.5 * hstep * k2, h, gam, lam)
        k4 = _rhs(rho + hstep * k3, h, gam, lam)
        rho = rho + (hstep / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        rho = 0.5 * (rho + rho.conj().T)
        t = t_end
    record_until(np.inf, t)

    return PopulationSeries(
        sample_times=times.copy(), populations=pops_out, rhos=rhos_out
    )
