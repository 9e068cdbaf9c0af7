"""Stochastic unraveling of the walk by norm-watched quantum jumps.

Between jumps a trajectory follows the non-Hermitian propagator
exp(-i(H - iK)t); the squared norm of the unnormalized state decays
monotonically and a jump fires when it reaches a uniform draw R. The
jump channel (n -> m) is chosen with probability proportional to
gamma(n->m) |<n|psi>|^2, after which the walker restarts at node m with
a fresh R.

Crossing times are located with a precomputed dyadic ladder of
propagators for step widths s/2^j. Any advance of length r <= s is a
walk down the ladder (binary digits of r), and locating a crossing is
a binary descent, so no matrix exponential is ever computed inside the
trajectory loop and the crossing satisfies |norm^2 - R| <= 1e-10.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .graph import GraphSpec
from .operators import build_hamiltonian, build_k
from .rng import RngStream, RunningStats

# Dyadic resolution of event times: with marching steps covering at
# most 0.05 of the fastest decay timescale, depth 34 localizes a
# crossing to |norm^2 - R| < 1e-11, comfortably inside the 1e-10
# contract, at 34 matrix-vector products per refinement.
LADDER_DEPTH = 34
# fraction of the fastest timescale covered by one marching step
_STEP_FRACTION = 0.05
_TIME_EPS = 1e-9


@dataclass(frozen=True)
class TrajectoryRecord:
    """One stochastic trajectory: jump log plus normalized snapshots.

    jumps holds (time, source, destination) triples in time order;
    snapshots[s] is the normalized state at sample_times[s]. seed is the
    (master_seed, stream_index) pair that reproduces the trajectory.
    """

    trajectory_index: int
    total_time: float
    jumps: tuple[tuple[float, int, int], ...]
    sample_times: np.ndarray
    snapshots: np.ndarray
    seed: tuple[int, int]


@dataclass(frozen=True)
class EnsembleResult:
    """Trajectory-averaged populations with per-node standard errors."""

    sample_times: np.ndarray
    mean_populations: np.ndarray
    stderr_populations: np.ndarray
    trajectory_count: int
    mean_density: np.ndarray | None = None


def _build_ladder(
    h: np.ndarray, k: np.ndarray, s: float, trotter: bool = False
) -> list[np.ndarray]:
    """Propagators for widths s/2^j, j = 0..LADDER_DEPTH.

    Every level is computed by its own matrix exponential. Squaring the
    finest level upward would be cheaper but amplifies its rounding
    error by 2^LADDER_DEPTH, which is fatal at this depth; independent
    exponentials keep each level at machine precision, and a descent
    composes at most one factor per level. Split mode forms
    exp(-iH w) exp(-K w) at every width, so each level is a genuine
    first-order split step of its own width.
    """
    ladder = []
    for j in range(LADDER_DEPTH + 1):
        w = s * 0.5**j
        if trotter:
            ladder.append(expm(-1j * h * w) @ expm(-k * w))
        else:
            ladder.append(expm((-1j * h - k) * w))
    return ladder


def _norm2(psi: np.ndarray) -> float:
    return float(np.real(np.vdot(psi, psi)))


def _descend(ladder, s: float, psi: np.ndarray, watch: float, j0: int):
    """Binary descent to the crossing inside a window of width s/2^(j0-1).

    Entered knowing the norm^2 crosses watch somewhere in the window.
    Returns (dt, psi) with psi just above the crossing, localized to
    within s/2^LADDER_DEPTH.
    """
    t = 0.0
    for j in range(j0, LADDER_DEPTH + 1):
        trial = ladder[j] @ psi
        if _norm2(trial) > watch:
            psi = trial
            t += s * 0.5**j
    return t, psi


def _advance_watch(ladder, s: float, psi: np.ndarray, watch: float, r: float):
    """Advance by r <= s, stopping at the norm^2 crossing if one occurs.

    Returns (crossed, dt, psi): dt is the time actually covered and psi
    the unnormalized state there. Without a crossing dt equals r up to
    the dyadic resolution s/2^LADDER_DEPTH.
    """
    t_done = 0.0
    frac = r / s
    resolution = 0.5**LADDER_DEPTH
    for j in range(LADDER_DEPTH + 1):
        if frac < resolution:
            break
        w = 0.5**j
        if frac + 1e-12 < w:
            continue
        trial = ladder[j] @ psi
        if _norm2(trial) > watch:
            psi = trial
            t_done += w * s
            frac -= w
        else:
            dt, psi = _descend(ladder, s, psi, watch, j + 1)
            return True, t_done + dt, psi
    return False, t_done, psi


def _step_width(g: GraphSpec, horizon: float) -> float:
    h = build_hamiltonian(g)
    scale = max(
        float(np.linalg.norm(h, 2)),
        float(g.lambda_vector().max(initial=0.0)),
    )
    if scale <= 0:
        return max(horizon, 1.0)
    return min(_STEP_FRACTION / scale, max(horizon, 1e-30))


def evolve_until_event(
    h: np.ndarray,
    k: np.ndarray,
    psi: np.ndarray,
    event_threshold: float,
    t_max: float,
    step: float | None = None,
) -> tuple[float | None, np.ndarray]:
    """Propagate without jumps until norm^2 hits event_threshold.

    Returns (t_event, psi_at_event) with psi unnormalized, or
    (None, psi_at_t_max) when the threshold is not reached by t_max.
    """
    if not 0.0 < event_threshold < 1.0:
        raise ValueError("event_threshold must lie in (0, 1)")
    if t_max < 0:
        raise ValueError("t_max must be non-negative")
    h = np.asarray(h, dtype=complex)
    k = np.asarray(k, dtype=complex)
    psi = np.asarray(psi, dtype=complex).copy()
    if step is None:
        scale = max(float(np.linalg.norm(h, 2)), float(np.linalg.norm(k, 2)) * 2)
        step = _STEP_FRACTION / scale if scale > 0 else max(t_max, 1.0)
    ladder = _build_ladder(h, k, step)
    t = 0.0
    while t_max - t > _TIME_EPS * step:
        r = min(step, t_max - t)
        crossed, dt, psi = _advance_watch(ladder, step, psi, event_threshold, r)
        t += dt
        if crossed:
            return t, psi
    return None, psi


def jump_weights(g: GraphSpec, psi) -> dict[tuple[int, int], float]:
    """Normalized firing probabilities per channel for the given state.

    Channel (n, m) carries weight gamma(n->m) |psi_n|^2 / total. Raises
    when no channel can fire from the state's support.
    """
    psi = np.asarray(psi, dtype=complex)
    raw = {
        (n, m): rate * float(abs(psi[n]) ** 2)
        for (n, m), rate in g.incoherent.items()
        if rate > 0
    }
    total = sum(raw.values())
    if total <= 0.0:
        raise ValueError("no jump channel can fire from this state")
    return {key: w / total for key, w in raw.items()}


def apply_jump(psi, source: int, destination: int) -> np.ndarray:
    """Collapse the state to the destination node of a fired channel."""
    psi = np.asarray(psi, dtype=complex)
    if abs(psi[source]) == 0.0:
        raise ValueError(f"state has no amplitude on source node {source}")
    out = np.zeros_like(psi)
    out[destination] = 1.0
    return out


class JumpEngine:
    """Reusable per-graph context for running jump trajectories.

    Holds the operators, the jump channel table, and the dyadic
    propagator ladder so that ensembles pay the matrix exponential cost
    once. With trotter=True all propagation (including crossing
    refinement) uses first-order split steps, which permits graphs
    whose H and K do not commute at the price of an O(step) error.
    """

    def __init__(self, g: GraphSpec, trotter: bool = False, step: float | None = None):
        self.graph = g
        self.trotter = bool(trotter)
        self.h = build_hamiltonian(g)
        self.k = build_k(g)
        channels = sorted(
            (pair, rate) for pair, rate in g.incoherent.items() if rate > 0
        )
        self._chan_pairs = tuple(pair for pair, _ in channels)
        self._chan_src = np.array([n for (n, _m), _ in channels], dtype=int)
        self._chan_rate = np.array([rate for _, rate in channels])
        self.step = float(step) if step is not None else _step_width(g, 1.0)
        if self.step <= 0:
            raise ValueError("step must be positive")
        self._ladder = _build_ladder(self.h, self.k, self.step, trotter=self.trotter)

    def _pick_jump(self, psi: np.ndarray, rng: RngStream) -> tuple[int, int]:
        w = self._chan_rate * np.abs(psi[self._chan_src]) ** 2
        total = float(w.sum())
        if total <= 0.0:
            raise RuntimeError("norm decayed but no jump channel can fire")
        c = rng.weighted_choice(w)
        return self._chan_pairs[c]

    def run_one(
        self,
        psi0,
        t_final: float,
        sample_times,
        rng: RngStream,
        trajectory_index: int | None = None,
    ) -> TrajectoryRecord:
        """Run a single trajectory, sampling at the given times."""
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

        s = self.step
        ladder = self._ladder
        tol_t = _TIME_EPS * s
        bounds = [(float(b), True) for b in times]
        if t_final > times[-1] + tol_t:
            bounds.append((float(t_final), False))

        snapshots = np.empty((times.size, psi.size), dtype=complex)
        jumps: list[tuple[float, int, int]] = []
        watch = rng.uniform_open()
        t = 0.0
        cursor = 0
        for b, is_sample in bounds:
            while b - t > tol_t:
                r = min(s, b - t)
                crossed, dt, psi = _advance_watch(ladder, s, psi, watch, r)
                t += dt
                if crossed:
                    src, dst = self._pick_jump(psi, rng)
                    jumps.append((t, src, dst))
                    psi = np.zeros_like(psi)
                    psi[dst] = 1.0
                    watch = rng.uniform_open()
            if is_sample:
                snapshots[cursor] = psi / np.linalg.norm(psi)
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


def run_trajectory(
    g: GraphSpec,
    psi0,
    t_final: float,
    rng: RngStream,
    sample_times,
) -> TrajectoryRecord:
    """One jump trajectory on a fresh engine; see JumpEngine.run_one."""
    return JumpEngine(g).run_one(psi0, t_final, sample_times, rng)


def ensemble_density(
    records: list[TrajectoryRecord], keep_density: bool = False
) -> EnsembleResult:
    """Average trajectory populations on their common sample grid.

    Records are folded in trajectory-index order so the result does not
    depend on the order the list was assembled in. Standard errors are
    the per-node sample standard deviations divided by sqrt(count).
    """
    if not records:
        raise ValueError("need at least one trajectory")
    records = sorted(records, key=lambda r: r.trajectory_index)
    times = records[0].sample_times
    dim = records[0].snapshots.shape[1]
    stats = RunningStats()
    density = (
        np.zeros((times.size, dim, dim), dtype=complex) if keep_density else None
    )
    for rec in records:
        if rec.snapshots.shape != (times.size, dim) or not np.array_equal(
            rec.sample_times, times
        ):
            raise ValueError("trajectories were sampled on different grids")
        stats.push(np.abs(rec.snapshots) ** 2)
        if density is not None:
            density += np.einsum("si,sj->sij", rec.snapshots, rec.snapshots.conj())
    if density is not None:
        density /= len(records)
    return EnsembleResult(
        sample_times=times.copy(),
        mean_populations=stats.mean,
        stderr_populations=stats.stderr,
        trajectory_count=len(records),
        mean_density=density,
    )
