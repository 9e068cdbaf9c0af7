"""Emulation of the hybrid jump protocol that needs no norm tracking.

When every coherent component shares a single leaving rate lambda, the
no-jump norm is exp(-lambda t) independent of the state, so the next
jump time is available in closed form: t = -ln(R)/lambda. A trajectory
then alternates unitary evolution inside the active component, a
projective node measurement at the jump time, and a classical draw of
the destination from the source's outgoing rates. This module runs
that protocol classically, drawing from the same kind of seeded stream
as the reference engine, and prices its measurement budget.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .graph import GraphSpec, coherent_subgraphs, validate
from .operators import build_hamiltonian
from .rng import RngStream
from .trajectories import TrajectoryRecord

_LAMBDA_TOL = 1e-9
_SUPPORT_TOL = 1e-12


class InadmissibleGraphError(ValueError):
    """Raised when the protocol's equal-rate condition fails."""

    def __init__(self, message, violations=()):
        super().__init__(message)
        self.violations = tuple(violations)


def sample_jump_time(lam: float, r: float) -> float:
    """Invert the no-jump norm law: exp(-lam t) = r.

    Returns infinity when lam is zero (the walker never jumps).
    """
    if not 0.0 < r < 1.0:
        raise ValueError("r must lie in (0, 1)")
    if lam < 0:
        raise ValueError("lam must be non-negative")
    if lam == 0.0:
        return math.inf
    return -math.log(r) / lam


def coherent_evolve(h: np.ndarray, psi, t: float) -> np.ndarray:
    """Unitary evolution exp(-i H t) |psi> via eigendecomposition."""
    if t < 0:
        raise ValueError("t must be non-negative")
    h = np.asarray(h, dtype=complex)
    psi = np.asarray(psi, dtype=complex)
    w, v = np.linalg.eigh(h)
    return v @ (np.exp(-1j * w * t) * (v.conj().T @ psi))


def measure_node(psi, rng: RngStream) -> int:
    """Projective measurement in the node basis; Born weights |psi_k|^2."""
    psi = np.asarray(psi, dtype=complex)
    return rng.weighted_choice(np.abs(psi) ** 2)


def sample_destination(g: GraphSpec, source: int, rng: RngStream) -> int:
    """Draw the jump destination from the source's outgoing rates."""
    pairs = [
        (m, rate) for (n, m), rate in sorted(g.incoherent.items())
        if n == source and rate > 0
    ]
    if not pairs:
        raise ValueError(f"node {source} has no outgoing rate")
    c = rng.weighted_choice([rate for _, rate in pairs])
    return pairs[c][0]


@dataclass(frozen=True)
class QtqcConfig:
    """Run parameters for the hybrid protocol emulator."""

    t_final: float
    sample_times: tuple[float, ...]
    master_seed: int
    trajectory_count: int = 1


@dataclass(frozen=True)
class ResourceEstimate:
    """Measurement budget of the protocol on an admissible graph.

    Per component: the shared leaving rate, the median waiting time
    ln(2)/lambda between jumps, and the mean waiting time 1/lambda.
    worst_case_measurements is the horizon divided by the smallest
    median waiting time over decaying components (zero when nothing
    decays), the expected number of mid-circuit measurements if the
    walker stayed on the fastest component throughout.
    """

    horizon: float
    subgraphs: tuple[tuple[int, ...], ...]
    lambdas: tuple[float, ...]
    median_interjump: tuple[float, ...]
    mean_interjump: tuple[float, ...]
    worst_case_measurements: float

    def to_dict(self, labels=None) -> dict:
        name = (lambda k: labels[k]) if labels is not None else (lambda k: k)
        fin = lambda x: x if math.isfinite(x) else None
        return {
            "horizon": self.horizon,
            "subgraphs": [
                {
                    "nodes": [name(k) for k in comp],
                    "lambda": lam,
                    "t_avg": fin(med),
                    "mean_interjump": fin(mean),
                }
                for comp, lam, med, mean in zip(
                    self.subgraphs,
                    self.lambdas,
                    self.median_interjump,
                    self.mean_interjump,
                )
            ],
            "worst_case_measurements": self.worst_case_measurements,
        }


def resource_estimate(g: GraphSpec, horizon: float) -> ResourceEstimate:
    """Price the protocol's measurements over a time horizon."""
    if horizon < 0:
        raise ValueError("horizon must be non-negative")
    report = validate(g)
    if not report.admissible:
        raise InadmissibleGraphError(
            "resource estimate requires an admissible graph",
            report.violations,
        )
    lambdas = tuple(float(x) for x in report.subgraph_lambdas)
    median = tuple(math.log(2) / x if x > 0 else math.inf for x in lambdas)
    mean = tuple(1.0 / x if x > 0 else math.inf for x in lambdas)
    finite = [m for m in median if math.isfinite(m)]
    worst = horizon / min(finite) if finite else 0.0
    return ResourceEstimate(
        horizon=float(horizon),
        subgraphs=report.subgraphs,
        lambdas=lambdas,
        median_interjump=median,
        mean_interjump=mean,
        worst_case_measurements=worst,
    )


class QtqcEngine:
    """Reusable protocol context: components, rates, and eigenbases.

    Requires an admissible graph; each coherent component's restricted
    coupling block is diagonalized once so per-trajectory evolution is
    a phase rotation in the eigenbasis.
    """

    def __init__(self, g: GraphSpec):
        report = validate(g)
        if not report.admissible:
            raise InadmissibleGraphError(
                "protocol requires equal leaving rates on every coherent "
                "component",
                report.violations,
            )
        self.graph = g
        self.subgraphs = report.subgraphs
        self.lambdas = tuple(float(x) for x in report.subgraph_lambdas)
        self._comp_of = np.empty(g.node_count, dtype=int)
        for ci, comp in enumerate(self.subgraphs):
            for k in comp:
                self._comp_of[k] = ci
        h = build_hamiltonian(g)
        self._eig = []
        for comp in self.subgraphs:
            idx = np.array(comp, dtype=int)
            w, v = np.linalg.eigh(h[np.ix_(idx, idx)])
            self._eig.append((idx, w, v))
        self._dest: dict[int, tuple[np.ndarray, np.ndarray]] = {}
        for n in range(g.node_count):
            pairs = [
                (m, rate)
                for (src, m), rate in sorted(g.incoherent.items())
                if src == n and rate > 0
            ]
            if pairs:
                self._dest[n] = (
                    np.array([m for m, _ in pairs], dtype=int),
                    np.array([rate for _, rate in pairs]),
                )

    def _evolve(self, psi: np.ndarray, comps: set[int], t: float) -> np.ndarray:
        if t == 0.0:
            return psi
        out = psi.copy()
        for ci in comps:
            idx, w, v = self._eig[ci]
            out[idx] = v @ (np.exp(-1j * w * t) * (v.conj().T @ psi[idx]))
        return out

    def _active(self, psi: np.ndarray) -> set[int]:
        comps = {
            int(self._comp_of[k])
            for k in np.flatnonzero(np.abs(psi) ** 2 > _SUPPORT_TOL)
        }
        if not comps:
            raise ValueError("state has no support")
        lams = [self.lambdas[c] for c in comps]
        if max(lams) - min(lams) > _LAMBDA_TOL * max(1.0, max(lams)):
            raise ValueError(
                "initial state spans coherent components with different "
                "leaving rates; the shared jump clock is undefined"
            )
        return comps

    def run_one(
        self,
        psi0,
        t_final: float,
        sample_times,
        rng: RngStream,
        trajectory_index: int | None = None,
    ) -> TrajectoryRecord:
        """Run one protocol trajectory.

        Per jump cycle the stream is consumed in a fixed order: the
        clock draw R, then the measurement draw, then the destination
        draw. Snapshots are the normalized register state at each
        sample time.
        """
        times = np.asarray(sample_times, dtype=float)
        if times.ndim != 1 or times.size == 0:
            raise ValueError("sample_times must be a non-empty 1-d sequence")
        if np.any(np.diff(times) < 0):
            raise ValueError("sample_times must be sorted")
        if times[0] < 0 or times[-1] > t_final * (1 + 1e-12) + 1e-15:
            raise ValueError("sample_times must lie within [0, t_final]")
        psi = np.asarray(psi0, dtype=complex).copy()
        nrm = np.linalg.norm(psi)
        if psi.shape != (self.graph.node_count,) or nrm == 0:
            raise ValueError("psi0 must be a nonzero state over the nodes")
        psi = psi / nrm

        comps = self._active(psi)
        lam = self.lambdas[next(iter(comps))]
        t = 0.0
        t_jump = t + sample_jump_time(lam, rng.uniform_open())
        jumps: list[tuple[float, int, int]] = []
        snapshots = np.empty((times.size, psi.size), dtype=complex)
        cursor = 0

        bounds = [(float(b), True) for b in times]
        if t_final > times[-1] + 1e-15:
            bounds.append((float(t_final), False))
        for b, is_sample in bounds:
            while t_jump < b:
                psi = self._evolve(psi, comps, t_jump - t)
                t = t_jump
                n = measure_node(psi, rng)
                dests, rates = self._dest.get(n, (None, None))
                if dests is None:
                    raise RuntimeError(
                        f"measured node {n} has no outgoing rate"
                    )
                m = int(dests[rng.weighted_choice(rates)])
                jumps.append((t, n, m))
                psi = np.zeros_like(psi)
                psi[m] = 1.0
                comps = {int(self._comp_of[m])}
                lam = self.lambdas[next(iter(comps))]
                t_jump = t + sample_jump_time(lam, rng.uniform_open())
            psi = self._evolve(psi, comps, b - t)
            t = b
            if is_sample:
                snapshots[cursor] = psi
                cursor += 1

        return TrajectoryRecord(
            trajectory_index=(
                rng.stream_index if trajectory_index is None else trajectory_index
            ),
            total_time=float(t_final),
            jumps=tuple(jumps),
            sample_times=times.copy(),
            snapshots=snapshots,
            seed=(rng.master_seed, rng.stream_index),
        )


def run_qtqc_trajectory(
    g: GraphSpec,
    psi0,
    t_final: float,
    rng: RngStream,
    sample_times,
) -> TrajectoryRecord:
    """One protocol trajectory on a fresh engine; see QtqcEngine.run_one."""
    return QtqcEngine(g).run_one(psi0, t_final, sample_times, rng)
