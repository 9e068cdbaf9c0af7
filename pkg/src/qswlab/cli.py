"""Command-line front end.

Subcommands: validate, run, compare, resources, ancilla. Exit codes:
0 success, 1 usage or format error, 2 admissibility rejection,
3 numerical failure or an out-of-tolerance comparison.

Every output carries a manifest (command, graph digest, effective
parameters, wall time) so a result file identifies the run that made
it. CSV payloads are deterministic for a fixed seed: identical across
process counts, with only the wall_seconds manifest field varying.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import time

import numpy as np

from . import __version__
from .ancilla import ancilla_evolve
from .graph import GraphFormatError, GraphSpec, load_graph, validate
from .lindblad import default_step, density_from_state, integrate
from .operators import build_hamiltonian, build_k
from .parallel import run_ensemble
from .qtqc import InadmissibleGraphError, resource_estimate
from .trajectories import ensemble_density

_SEED_ENV = "QSWLAB_SEED"


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors; 2 is taken, remap to 1
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _build_parser() -> _Parser:
    p = _Parser(prog="qswlab", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"qswlab {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def add_common(sp, seed=False, out=True):
        sp.add_argument("graph", help="path to a JSON graph file")
        if out:
            sp.add_argument("--out", help="output file (default: stdout)")
        if seed:
            sp.add_argument(
                "--seed",
                type=int,
                help=f"master seed (default: ${_SEED_ENV} or 0)",
            )
            sp.add_argument(
                "--jobs", type=int, default=1, help="worker processes"
            )

    sp = sub.add_parser("validate", help="check the equal-rate condition")
    add_common(sp)

    sp = sub.add_parser("run", help="evolve and write sampled populations")
    add_common(sp, seed=True)
    sp.add_argument(
        "--engine",
        choices=("master", "trajectories", "qtqc"),
        default="master",
    )
    sp.add_argument("--t-final", type=float, required=True)
    sp.add_argument("--dt", type=float, help="integration or marching step")
    sp.add_argument(
        "--samples", type=int, default=101, help="uniform sample count on [0, T]"
    )
    sp.add_argument("--num-traj", type=int, default=1000)
    sp.add_argument("--start-node", help="start from this node (overrides file)")
    sp.add_argument(
        "--trotter-threshold",
        type=float,
        help="tolerate this much rate mismatch via split-step propagation",
    )
    sp.add_argument(
        "--log-trajectories", help="write per-trajectory jump logs (JSONL)"
    )
    sp.add_argument(
        "--dump-operators",
        metavar="PREFIX",
        help="write PREFIX_h.csv and PREFIX_k.csv ('re,im' cells)",
    )

    sp = sub.add_parser("compare", help="cross-validate engines on one graph")
    add_common(sp, seed=True)
    sp.add_argument("--t-final", type=float, required=True)
    sp.add_argument("--dt", type=float)
    sp.add_argument("--samples", type=int, default=21)
    sp.add_argument("--num-traj", type=int, default=2000)
    sp.add_argument("--start-node")

    sp = sub.add_parser("resources", help="price the protocol's measurements")
    add_common(sp)
    sp.add_argument("--t-final", type=float, required=True)

    sp = sub.add_parser("ancilla", help="one post-selected decay segment")
    add_common(sp)
    sp.add_argument("--t-final", type=float, required=True)
    sp.add_argument("--start-node")
    return p


def _resolve_seed(args) -> int:
    if getattr(args, "seed", None) is not None:
        return args.seed
    env = os.environ.get(_SEED_ENV)
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise GraphFormatError(f"${_SEED_ENV} must be an integer, got {env!r}")
    return 0


def _initial_state(g: GraphSpec, start_node: str | None) -> np.ndarray:
    if start_node is not None:
        psi = np.zeros(g.node_count, dtype=complex)
        psi[g.index(start_node)] = 1.0
        return psi
    if g.initial is not None:
        return np.asarray(g.initial, dtype=complex)
    raise GraphFormatError(
        "graph file has no initial state; pass --start-node"
    )


def _manifest(args, graph_bytes: bytes, t0: float, **extra) -> dict:
    m = {
        "command": args.command,
        "graph_sha256": hashlib.sha256(graph_bytes).hexdigest(),
        "version": __version__,
        "wall_seconds": round(time.perf_counter() - t0, 6),
    }
    m.update({k: v for k, v in extra.items() if v is not None})
    return m


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _emit_json(payload: dict, out: str | None) -> None:
    _emit(json.dumps(payload, indent=2, sort_keys=True) + "\n", out)


def _csv_num(x: float) -> str:
    return f"{x:.12g}"


def _populations_csv(manifest, labels, times, pops, stderr=None) -> str:
    lines = ["# manifest: " + json.dumps(manifest, sort_keys=True)]
    header = ["t"] + [f"p_{x}" for x in labels]
    if stderr is not None:
        header += [f"se_{x}" for x in labels]
    lines.append(",".join(header))
    for s, t in enumerate(times):
        row = [_csv_num(float(t))] + [_csv_num(float(x)) for x in pops[s]]
        if stderr is not None:
            row += [_csv_num(float(x)) for x in stderr[s]]
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def _matrix_csv(m: np.ndarray) -> str:
    rows = []
    for row in np.asarray(m, dtype=complex):
        rows.append(
            ",".join(f"{_csv_num(x.real)} {_csv_num(x.imag)}" for x in row)
        )
    return "\n".join(rows) + "\n"


def _aligned_dt(gap: float, dt: float) -> float:
    # shrink dt to divide the sample gap so snapshots land exactly
    return gap / max(1, math.ceil(gap / dt - 1e-12))


def _grid(t_final: float, samples: int) -> np.ndarray:
    if t_final <= 0:
        raise GraphFormatError("--t-final must be positive")
    if samples < 2:
        raise GraphFormatError("--samples must be at least 2")
    return np.linspace(0.0, t_final, samples)


def _read_graph(path: str) -> tuple[GraphSpec, bytes]:
    with open(path, "rb") as fh:
        raw = fh.read()
    from .graph import parse_graph

    return parse_graph(raw), raw


def _cmd_validate(args) -> int:
    t0 = time.perf_counter()
    g, raw = _read_graph(args.graph)
    report = validate(g)
    payload = report.to_dict(g.labels)
    payload["manifest"] = _manifest(args, raw, t0)
    _emit_json(payload, args.out)
    return 0 if report.admissible else 2


def _write_trajectory_log(path: str, records, labels) -> None:
    with open(path, "w") as fh:
        for rec in records:
            fh.write(
                json.dumps(
                    {
                        "idx": rec.trajectory_index,
                        "jumps": [
                            [t, labels[n], labels[m]] for t, n, m in rec.jumps
                        ],
                    }
                )
                + "\n"
            )


def _cmd_run(args) -> int:
    t0 = time.perf_counter()
    g, raw = _read_graph(args.graph)
    psi0 = _initial_state(g, args.start_node)
    times = _grid(args.t_final, args.samples)
    seed = _resolve_seed(args)

    if args.dump_operators:
        with open(f"{args.dump_operators}_h.csv", "w") as fh:
            fh.write(_matrix_csv(build_hamiltonian(g)))
        with open(f"{args.dump_operators}_k.csv", "w") as fh:
            fh.write(_matrix_csv(build_k(g)))

    if args.engine == "master":
        dt = _aligned_dt(times[1] - times[0], args.dt or default_step(g))
        series = integrate(
            g, density_from_state(psi0), args.t_final, dt=dt, sample_times=times
        )
        manifest = _manifest(
            args, raw, t0, engine="master", t_final=args.t_final, dt=dt,
            samples=args.samples,
        )
        _emit(
            _populations_csv(
                manifest, g.labels, series.sample_times, series.populations
            ),
            args.out,
        )
        return 0

    if args.num_traj < 1:
        raise GraphFormatError("--num-traj must be at least 1")
    engine = args.engine
    approximate = False
    if engine == "qtqc":
        report = validate(g)
        if not report.admissible:
            if (
                args.trotter_threshold is not None
                and report.trotter_mismatch <= args.trotter_threshold
            ):
                # fall back to split-step jump propagation
                engine, approximate = "trajectories", True
            else:
                raise InadmissibleGraphError(
                    "graph violates the equal-rate condition "
                    f"(mismatch {report.trotter_mismatch:.3g}); rerun with "
                    "--trotter-threshold to accept a split-step "
                    "approximation",
                    report.violations,
                )
    records = run_ensemble(
        g,
        psi0,
        args.t_final,
        times,
        args.num_traj,
        seed,
        engine=engine,
        jobs=args.jobs,
        trotter=approximate,
    )
    result = ensemble_density(records)
    if args.log_trajectories:
        _write_trajectory_log(args.log_trajectories, records, g.labels)
    manifest = _manifest(
        args, raw, t0,
        engine=args.engine,
        approximate=approximate or None,
        seed=seed,
        t_final=args.t_final,
        samples=args.samples,
        num_traj=args.num_traj,
        dt=args.dt,
    )
    _emit(
        _populations_csv(
            manifest,
            g.labels,
            result.sample_times,
            result.mean_populations,
            result.stderr_populations,
        ),
        args.out,
    )
    return 0


def _cmd_compare(args) -> int:
    t0 = time.perf_counter()
    g, raw = _read_graph(args.graph)
    psi0 = _initial_state(g, args.start_node)
    times = _grid(args.t_final, args.samples)
    seed = _resolve_seed(args)
    if args.num_traj < 2:
        raise GraphFormatError("--num-traj must be at least 2")

    dt = _aligned_dt(times[1] - times[0], args.dt or default_step(g))
    oracle = integrate(
        g, density_from_state(psi0), args.t_final, dt=dt, sample_times=times
    ).populations

    tol = 4.0 / math.sqrt(args.num_traj)
    report = validate(g)
    engines = ["trajectories"] + (["qtqc"] if report.admissible else [])
    results = {}
    for engine in engines:
        records = run_ensemble(
            g, psi0, args.t_final, times, args.num_traj, seed,
            engine=engine, jobs=args.jobs,
        )
        results[engine] = ensemble_density(records)

    payload: dict = {
        "tolerance": tol,
        "engines": {},
        "num_traj": args.num_traj,
    }
    ok = True
    for engine, res in results.items():
        dev = float(np.max(np.abs(res.mean_populations - oracle)))
        passed = dev <= tol
        ok = ok and passed
        payload["engines"][engine] = {
            "max_abs_deviation": dev,
            "pass": passed,
        }
    if "qtqc" in results:
        a, b = results["trajectories"], results["qtqc"]
        se2 = a.stderr_populations**2 + b.stderr_populations**2
        sigma = float(
            np.max(
                np.abs(a.mean_populations - b.mean_populations)
                / np.sqrt(se2 + 1e-24)
            )
        )
        passed = sigma <= 6.0
        ok = ok and passed
        payload["qtqc_vs_trajectories"] = {"max_sigma": sigma, "pass": passed}
    else:
        payload["qtqc_skipped"] = "graph is not admissible"
    payload["overall_pass"] = ok
    payload["manifest"] = _manifest(
        args, raw, t0, seed=seed, t_final=args.t_final, dt=dt,
        samples=args.samples, num_traj=args.num_traj,
    )
    _emit_json(payload, args.out)
    return 0 if ok else 3


def _cmd_resources(args) -> int:
    t0 = time.perf_counter()
    g, raw = _read_graph(args.graph)
    est = resource_estimate(g, args.t_final)
    payload = est.to_dict(g.labels)
    payload["manifest"] = _manifest(args, raw, t0, t_final=args.t_final)
    _emit_json(payload, args.out)
    return 0


def _cmd_ancilla(args) -> int:
    t0 = time.perf_counter()
    g, raw = _read_graph(args.graph)
    psi0 = _initial_state(g, args.start_node)
    outcome = ancilla_evolve(build_k(g), psi0, args.t_final)
    payload = {
        "success_probability": outcome.success_probability,
        "post_state": [
            {"node": lbl, "re": float(a.real), "im": float(a.imag)}
            for lbl, a in zip(g.labels, outcome.post_state)
        ],
        "decay_rates": [float(x.real) for x in outcome.eigenvalues],
        "manifest": _manifest(args, raw, t0, t_final=args.t_final),
    }
    _emit_json(payload, args.out)
    return 0


_DISPATCH = {
    "validate": _cmd_validate,
    "run": _cmd_run,
    "compare": _cmd_compare,
    "resources": _cmd_resources,
    "ancilla": _cmd_ancilla,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _DISPATCH[args.command](args)
    except InadmissibleGraphError as exc:
        print(f"qswlab: {exc}", file=sys.stderr)
        for n, m, g_, ln, lm in exc.violations:
            print(
                f"  edge ({n},{m}): |g|={abs(g_):.6g}, "
                f"lambda {ln:.6g} vs {lm:.6g}",
                file=sys.stderr,
            )
        return 2
    except (GraphFormatError, OSError, KeyError, ValueError) as exc:
        msg = exc.args[0] if exc.args else exc
        print(f"qswlab: {msg}", file=sys.stderr)
        return 1
    except (RuntimeError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"qswlab: numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
