"""Acceptance gate: ten numbered criteria, each printing one verdict line.

Run with `pytest -v tests/test_acceptance.py` (add -s to see the
verdict lines inline). Statistical criteria use fixed seeds, so they
are deterministic.
"""

import json
import math
import time

import numpy as np
import pytest

from qswlab import (
    GraphSpec,
    JumpEngine,
    QtqcEngine,
    RngStream,
    ancilla_evolve,
    build_hamiltonian,
    build_k,
    commutator_norm,
    density_from_state,
    ensemble_density,
    integrate,
    measure_ancilla,
    propagator_nonhermitian,
    resource_estimate,
    run_ensemble,
    trotter_propagator,
    validate,
)
from qswlab.cli import main
from scipy.linalg import expm

from conftest import (
    break_admissibility,
    random_admissible,
    random_state,
    two_node_hopper,
)


def _verdict(num: int, name: str, ok: bool, detail: str):
    print(f"criterion {num:02d} {name}: {'PASS' if ok else 'FAIL'} ({detail})")
    assert ok, f"criterion {num} {name}: {detail}"


def crossgraph():
    """3-node graph with every leaving rate 0.5; used by criteria 2-3."""
    return GraphSpec.from_edges(
        ["a", "b", "c"],
        coherent={(0, 1): 1.0},
        incoherent={(0, 2): 0.5, (1, 2): 0.5, (2, 0): 0.2, (2, 1): 0.3},
        initial=[1, 0, 0],
    )


@pytest.fixture(scope="module")
def cross_validation():
    """Shared oracle and ensembles for criteria 2 and 3."""
    g = crossgraph()
    t_final, count = 5.0, 20_000
    times = np.linspace(0.0, t_final, 20)
    oracle = integrate(
        g,
        density_from_state(g.initial),
        t_final,
        dt=times[1] / math.ceil(times[1] / 0.01),
        sample_times=times,
    ).populations

    t0 = time.perf_counter()
    jump = ensemble_density(
        run_ensemble(g, g.initial, t_final, times, count, 20260822, jobs=1)
    )
    jump_seconds = time.perf_counter() - t0
    qtqc = ensemble_density(
        run_ensemble(
            g, g.initial, t_final, times, count, 20260822, engine="qtqc", jobs=4
        )
    )
    return {
        "oracle": oracle,
        "jump": jump,
        "qtqc": qtqc,
        "count": count,
        "jump_seconds": jump_seconds,
    }


def test_criterion_01_oracle_correctness():
    g = two_node_hopper()
    times = np.linspace(0.0, 3.0, 31)
    t0 = time.perf_counter()
    series = integrate(
        g, density_from_state(g.initial), 3.0, dt=1e-3, sample_times=times
    )
    seconds = time.perf_counter() - t0
    analytic = 0.5 + 0.5 * np.exp(-2.0 * times)
    err = float(np.max(np.abs(series.populations[:, 0] - analytic)))
    _verdict(
        1,
        "oracle-correctness",
        err <= 1e-8 and seconds < 1.0,
        f"max|p1 - analytic| = {err:.2e} <= 1e-8, {seconds:.2f}s < 1s",
    )


def test_criterion_02_unraveling_equivalence(cross_validation):
    c = cross_validation
    tol = 4.0 / math.sqrt(c["count"])
    dev = float(np.max(np.abs(c["jump"].mean_populations - c["oracle"])))
    _verdict(
        2,
        "unraveling-equivalence",
        dev <= tol and c["jump_seconds"] < 60.0,
        f"S={c['count']}: max dev {dev:.4f} <= {tol:.4f}, "
        f"{c['jump_seconds']:.1f}s single-threaded < 60s",
    )


def test_criterion_03_protocol_equivalence(cross_validation):
    c = cross_validation
    tol = 4.0 / math.sqrt(c["count"])
    dev = float(np.max(np.abs(c["qtqc"].mean_populations - c["oracle"])))
    diff = np.abs(c["qtqc"].mean_populations - c["jump"].mean_populations)
    band = 3.0 * np.sqrt(
        c["qtqc"].stderr_populations ** 2 + c["jump"].stderr_populations ** 2
    )
    within = bool(np.all(diff <= band + 1e-12))
    _verdict(
        3,
        "protocol-equivalence",
        dev <= tol and within,
        f"max dev vs oracle {dev:.4f} <= {tol:.4f}, "
        f"engine agreement within 3 sigma everywhere: {within}",
    )


def test_criterion_04_admissibility_iff_commutation():
    rng = np.random.default_rng(41)
    checked = agreements = 0
    closed_form_ok = True
    n_admissible = 0
    while checked < 200:
        g = random_admissible(rng)
        if checked % 2 == 1:
            try:
                g = break_admissibility(g, rng)
            except ValueError:
                continue
        h, k = build_hamiltonian(g), build_k(g)
        comm = commutator_norm(h, k)
        scale = np.linalg.norm(h) * np.linalg.norm(k)
        commutes = comm <= 1e-10 * max(scale, 1e-300)
        verdict = validate(g).admissible
        agreements += verdict == commutes
        n_admissible += verdict
        # closed form: entries g_ij (lambda_j - lambda_i) / 2
        lam = g.lambda_vector()
        closed = 0.5 * np.linalg.norm(h * (lam[None, :] - lam[:, None]))
        closed_form_ok &= abs(comm - closed) <= 1e-12 * max(1.0, closed)
        checked += 1
    _verdict(
        4,
        "admissibility-iff-commutation",
        agreements == 200 and closed_form_ok and 0 < n_admissible < 200,
        f"{agreements}/200 verdicts agree ({n_admissible} admissible), "
        f"closed-form match: {closed_form_ok}",
    )


def test_criterion_05_norm_law():
    rng = np.random.default_rng(52)
    worst = 0.0
    for _ in range(50):
        g = random_admissible(rng, single_rate=True)
        h, k = build_hamiltonian(g), build_k(g)
        lam = float(g.lambda_vector()[0])
        for _ in range(10):
            psi = random_state(rng, g.node_count)
            t = float(rng.uniform(0.0, 2.0))
            n2 = float(
                np.linalg.norm(propagator_nonhermitian(h, k, t) @ psi) ** 2
            )
            worst = max(worst, abs(n2 - math.exp(-lam * t)))
    _verdict(
        5,
        "norm-law",
        worst <= 1e-9,
        f"500 cases: max |norm^2 - exp(-lambda t)| = {worst:.2e} <= 1e-9",
    )


def test_criterion_06_jump_time_statistics():
    r = RngStream(606, 0).uniforms(100_000)
    t = -np.log(r)  # sample_jump_time at lambda = 1, vectorized
    med, mean = float(np.median(t)), float(np.mean(t))
    med_ok = abs(med - math.log(2.0)) <= 0.02 * math.log(2.0)
    mean_ok = abs(mean - 1.0) <= 0.02
    _verdict(
        6,
        "jump-time-statistics",
        med_ok and mean_ok,
        f"median {med:.4f} vs ln2 {math.log(2):.4f} (2%), "
        f"mean {mean:.4f} vs 1 (2%)",
    )


def test_criterion_07_measurement_budget():
    g = two_node_hopper()  # single lambda = 1, H = 0
    t_final, count = 100.0, 10_000
    records = run_ensemble(
        g, g.initial, t_final, [t_final], count, 707, engine="qtqc", jobs=4
    )
    counts = np.array([len(r.jumps) for r in records])
    mean = float(counts.mean())
    est = resource_estimate(g, t_final)
    worst = est.worst_case_measurements
    mean_ok = abs(mean - 100.0) <= 3.0
    bound_ok = worst >= float(np.median(counts))
    _verdict(
        7,
        "measurement-budget",
        mean_ok and bound_ok and worst == pytest.approx(144.26950408889634),
        f"empirical mean jumps {mean:.2f} in 100+-3, worst-case "
        f"{worst:.2f} >= median {np.median(counts):.0f}",
    )


def test_criterion_08_ancilla_protocol():
    k2 = np.diag([0.0, 1.0])
    psi0 = np.array([1.0, 1.0]) / math.sqrt(2.0)
    out = ancilla_evolve(k2, psi0, math.log(2.0))
    worked_ok = abs(out.success_probability - 0.625) <= 1e-12 and np.all(
        np.abs(out.post_state - [2 / math.sqrt(5), 1 / math.sqrt(5)]) <= 1e-10
    )

    rng = np.random.default_rng(88)
    fid_ok = True
    for _ in range(50):
        d = int(rng.integers(2, 17))
        a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        k = (a + a.conj().T) / 2
        psi = random_state(rng, d)
        t = float(rng.uniform(0.0, 1.0))
        res = ancilla_evolve(k, psi, t)
        ref = expm(-k * t) @ psi
        ref /= np.linalg.norm(ref)
        fid_ok &= abs(np.vdot(ref, res.post_state)) ** 2 >= 1.0 - 1e-10

    shots = 10_000
    stream = RngStream(808, 0)
    hits = sum(measure_ancilla(out, stream) for _ in range(shots))
    p = out.success_probability
    sampled_ok = abs(hits / shots - p) <= 3.0 * math.sqrt(p * (1 - p) / shots)
    _verdict(
        8,
        "ancilla-protocol",
        worked_ok and fid_ok and sampled_ok,
        f"worked case N=0.625: {worked_ok}, 50 random fidelities >= 1-1e-10: "
        f"{fid_ok}, sampled rate {hits / shots:.4f} within 3 sigma of {p:.4g}: "
        f"{sampled_ok}",
    )


def test_criterion_09_trotter_relaxation():
    g = GraphSpec.from_edges(
        ["a", "b", "c"],
        coherent={(0, 1): 1.0},
        incoherent={(0, 2): 0.5, (1, 2): 0.475},
    )
    assert validate(g).trotter_mismatch == pytest.approx(0.05)
    h, k = build_hamiltonian(g), build_k(g)
    exact = propagator_nonhermitian(h, k, 1.0)
    steps = [8, 16, 32, 64, 128, 256]
    devs = [
        float(np.linalg.norm(trotter_propagator(h, k, 1.0, n) - exact))
        for n in steps
    ]
    ratios = [a / b for a, b in zip(devs, devs[1:])]
    ok = all(1.6 <= r <= 2.4 for r in ratios)
    _verdict(
        9,
        "trotter-relaxation",
        ok,
        "deviation ratios per doubling: "
        + ", ".join(f"{r:.3f}" for r in ratios)
        + " all in 2.0+-0.4",
    )


def test_criterion_10_parallel_determinism(tmp_path):
    graph = tmp_path / "graph.json"
    graph.write_text(json.dumps({
        "nodes": ["a", "b", "c"],
        "coherent": [{"i": "a", "j": "b", "re": 1.0}],
        "incoherent": [
            {"from": "a", "to": "c", "rate": 0.5},
            {"from": "b", "to": "c", "rate": 0.5},
            {"from": "c", "to": "a", "rate": 0.2},
            {"from": "c", "to": "b", "rate": 0.3},
        ],
        "initial": [{"node": "a", "re": 1.0}],
    }))
    payloads = []
    for jobs in ("1", "8"):
        out = tmp_path / f"jobs{jobs}.csv"
        rc = main([
            "run", str(graph), "--engine", "trajectories",
            "--t-final", "2", "--samples", "9", "--num-traj", "400",
            "--seed", "31", "--jobs", jobs, "--out", str(out),
        ])
        assert rc == 0
        lines = out.read_text().splitlines()
        manifest = json.loads(lines[0][len("# manifest: "):])
        manifest.pop("wall_seconds")
        payloads.append((manifest, lines[1:]))
    identical = payloads[0] == payloads[1]
    _verdict(
        10,
        "parallel-determinism",
        identical,
        "jobs=1 and jobs=8 CSV byte-identical (wall clock excluded): "
        f"{identical}",
    )
