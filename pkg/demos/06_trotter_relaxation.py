"""
Running a nearly admissible graph anyway: first-order splitting.

When coherent neighbors have slightly different total decay rates the
single-record protocol is not exact, but alternating short coherent and
decay segments approximates the true non-Hermitian propagator with an
error that falls off like 1/steps. On an admissible graph the split is
exact (the factors commute), so the relaxation costs nothing there.
"""
import numpy as np

from qswlab import (
    GraphSpec,
    build_hamiltonian,
    build_k,
    propagator_nonhermitian,
    trotter_propagator,
    validate,
)

# two coherent edges into a shared sink, rates off by 0.05
g = GraphSpec.from_edges(
    ["1", "2", "3"],
    coherent={(0, 1): 1.0},
    incoherent={(0, 2): 0.5, (1, 2): 0.475},
    initial={0: 1.0},
)
report = validate(g)
print("admissible:", report.admissible)
print("largest relative rate mismatch:", report.trotter_mismatch)

h, k = build_hamiltonian(g), build_k(g)
T = 2.0
exact = propagator_nonhermitian(h, k, T)

print(f"\n{'steps':>6} {'deviation':>12} {'ratio':>7}")
prev = None
for n in (8, 16, 32, 64, 128, 256):
    dev = np.linalg.norm(trotter_propagator(h, k, T, n) - exact)
    print(f"{n:6d} {dev:12.3e} {'' if prev is None else f'{prev / dev:7.3f}'}")
    prev = dev

# commuting case: the split is exact at any step count
g2 = GraphSpec.from_edges(
    ["1", "2", "3"],
    coherent={(0, 1): 1.0},
    incoherent={(0, 2): 0.5, (1, 2): 0.5},
    initial={0: 1.0},
)
h2, k2 = build_hamiltonian(g2), build_k(g2)
dev = np.linalg.norm(trotter_propagator(h2, k2, T, 1) - propagator_nonhermitian(h2, k2, T))
print(f"\nequal rates, single step: deviation {dev:.2e}")
