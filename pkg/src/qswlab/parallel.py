"""Ensemble execution with scheduling-independent results.

Trajectory i always draws from the stream keyed by (master_seed, i),
so the ensemble is a pure function of the seed: running on one process
or many, in any chunk layout, yields identical records.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .graph import GraphSpec
from .qtqc import QtqcEngine
from .rng import RngStream
from .trajectories import JumpEngine, TrajectoryRecord

ENGINES = ("trajectories", "qtqc")


def _make_engine(g: GraphSpec, engine: str, trotter: bool):
    if engine == "trajectories":
        return JumpEngine(g, trotter=trotter)
    if engine == "qtqc":
        if trotter:
            raise ValueError(
                "the split-step relaxation runs through the 'trajectories' "
                "engine"
            )
        return QtqcEngine(g)
    raise ValueError(f"unknown engine {engine!r}; expected one of {ENGINES}")


def _run_chunk(args) -> list[TrajectoryRecord]:
    g, psi0, t_final, times, engine, trotter, master_seed, lo, hi = args
    eng = _make_engine(g, engine, trotter)
    return [
        eng.run_one(psi0, t_final, times, RngStream(master_seed, i), i)
        for i in range(lo, hi)
    ]


def run_ensemble(
    g: GraphSpec,
    psi0,
    t_final: float,
    sample_times,
    count: int,
    master_seed: int,
    engine: str = "trajectories",
    jobs: int | None = None,
    trotter: bool = False,
) -> list[TrajectoryRecord]:
    """Run `count` trajectories, optionally across worker processes.

    Returns records ordered by trajectory index. jobs=None or 1 runs
    in-process; larger values fan contiguous index chunks out to a
    process pool. The output is byte-for-byte independent of jobs.
    """
    if count < 1:
        raise ValueError("count must be at least 1")
    psi0 = np.asarray(psi0, dtype=complex)
    times = np.asarray(sample_times, dtype=float)
    if jobs is None or jobs <= 1 or count == 1:
        return _run_chunk(
            (g, psi0, t_final, times, engine, trotter, master_seed, 0, count)
        )
    jobs = min(jobs, count)
    n_chunks = min(count, jobs * 4)
    edges = np.linspace(0, count, n_chunks + 1).astype(int)
    tasks = [
        (g, psi0, t_final, times, engine, trotter, master_seed, lo, hi)
        for lo, hi in zip(edges[:-1], edges[1:])
        if hi > lo
    ]
    records: list[TrajectoryRecord] = []
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        for chunk in pool.map(_run_chunk, tasks):
            records.extend(chunk)
    return records
