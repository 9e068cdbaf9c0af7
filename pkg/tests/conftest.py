"""Shared graph builders for the test suite."""

import numpy as np
import pytest

from qswlab import GraphSpec


def two_node_hopper() -> GraphSpec:
    """Classical hopper: no coupling, symmetric unit rates."""
    return GraphSpec.from_edges(
        ["a", "b"],
        incoherent={(0, 1): 1.0, (1, 0): 1.0},
        initial=[1, 0],
    )


def admissible_three() -> GraphSpec:
    """Coherent pair feeding a relay node; every lambda equals 0.5."""
    return GraphSpec.from_edges(
        ["a", "b", "c"],
        coherent={(0, 1): 1.0},
        incoherent={(0, 2): 0.5, (1, 2): 0.5, (2, 0): 0.2, (2, 1): 0.3},
        initial=[1, 0, 0],
    )


def mismatched_three() -> GraphSpec:
    """Same shape but lambda_b = 0.475: relative rate mismatch 0.05."""
    return GraphSpec.from_edges(
        ["a", "b", "c"],
        coherent={(0, 1): 1.0},
        incoherent={(0, 2): 0.5, (1, 2): 0.475},
        initial=[1, 0, 0],
    )


def random_admissible(
    rng: np.random.Generator, n_max: int = 8, single_rate: bool = False
) -> GraphSpec:
    """Random graph satisfying the equal-rate condition exactly.

    Nodes are partitioned into coherent components; each component gets
    one leaving rate, and every node splits that rate over random
    destinations. single_rate forces one shared rate across all
    components (so the whole graph has a single decay law).
    """
    n = int(rng.integers(2, n_max + 1))
    labels = [f"n{k}" for k in range(n)]
    n_cuts = int(rng.integers(0, min(3, n - 1)))
    cut = sorted(rng.choice(n - 1, size=n_cuts, replace=False) + 1)
    comps = np.split(np.arange(n), cut)
    shared = float(rng.uniform(0.2, 2.0))
    coherent = {}
    incoherent = {}
    for comp in comps:
        lam = shared if single_rate else float(rng.uniform(0.2, 2.0))
        # random spanning tree keeps the component coherently connected
        for a, b in zip(comp[:-1], comp[1:]):
            coherent[(int(a), int(b))] = complex(
                rng.normal(), rng.normal() if rng.random() < 0.5 else 0.0
            )
        if len(comp) > 2 and rng.random() < 0.5:
            coherent[(int(comp[0]), int(comp[-1]))] = complex(rng.normal())
        for k in comp:
            dests = rng.choice(n, size=int(rng.integers(1, min(4, n + 1))), replace=False)
            w = rng.dirichlet(np.ones(len(dests))) * lam
            for d, r in zip(dests, w):
                incoherent[(int(k), int(d))] = (
                    incoherent.get((int(k), int(d)), 0.0) + float(r)
                )
    return GraphSpec.from_edges(labels, coherent, incoherent)


def random_state(rng: np.random.Generator, n: int) -> np.ndarray:
    psi = rng.normal(size=n) + 1j * rng.normal(size=n)
    return psi / np.linalg.norm(psi)


def break_admissibility(g: GraphSpec, rng: np.random.Generator) -> GraphSpec:
    """Scale one coherently coupled node's rates to spoil equal rates."""
    touched = sorted({i for (i, j), v in g.coherent.items() if v != 0 and i != j})
    if not touched:
        raise ValueError("graph has no coherent edge to violate")
    node = int(rng.choice(touched))
    factor = 1.0 + float(rng.uniform(0.2, 0.8))
    inc = {
        pair: rate * factor if pair[0] == node else rate
        for pair, rate in g.incoherent.items()
    }
    if not any(pair[0] == node for pair in inc):
        inc[(node, node)] = 0.5
    return GraphSpec.from_edges(g.labels, dict(g.coherent), inc)


@pytest.fixture
def np_rng():
    return np.random.default_rng(20260822)
