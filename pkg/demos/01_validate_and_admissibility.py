"""
Check whether a graph supports the single-measurement-record protocol.

A graph is admissible when every coherently coupled pair of nodes has the
same total outgoing incoherent rate. The checker reports per-edge
violations and the equivalent operator test [H, K] = 0.
"""
import numpy as np

from qswlab import (
    GraphSpec,
    build_hamiltonian,
    build_k,
    commutator_norm,
    validate,
)

# ring of four nodes, uniform hopping, uniform dephasing-free decay
ring = GraphSpec.from_edges(
    ["a", "b", "c", "d"],
    coherent={(0, 1): 1.0, (1, 2): 1.0, (2, 3): 1.0, (3, 0): 1.0},
    incoherent={(0, 1): 0.5, (1, 2): 0.5, (2, 3): 0.5, (3, 0): 0.5},
    initial={0: 1.0},
)

report = validate(ring)
print("uniform ring:")
print("  admissible:", report.admissible)
print("  node rates:", {lb: float(x) for lb, x in zip(ring.labels, ring.lambda_vector())})
print("  [H,K] Frobenius norm:", commutator_norm(build_hamiltonian(ring), build_k(ring)))

# now bump one node's outgoing rate; the two coherent edges touching it break
broken = GraphSpec.from_edges(
    ["a", "b", "c", "d"],
    coherent={(0, 1): 1.0, (1, 2): 1.0, (2, 3): 1.0, (3, 0): 1.0},
    incoherent={(0, 1): 0.5, (1, 2): 0.8, (2, 3): 0.5, (3, 0): 0.5},
    initial={0: 1.0},
)

report = validate(broken)
print("\nring with one boosted rate:")
print("  admissible:", report.admissible)
for i, j, coupling, lam_i, lam_j in report.violations:
    print(f"  edge ({broken.labels[i]},{broken.labels[j]})"
          f" rates {lam_i:.2f} vs {lam_j:.2f}")

# closed form for the commutator norm: only the rate gaps along coherent
# edges contribute, so the norm is half the weighted gap magnitude
h = build_hamiltonian(broken)
lam = broken.lambda_vector()
closed = 0.5 * np.linalg.norm(h * (lam[None, :] - lam[:, None]))
print("  [H,K] norm:", commutator_norm(h, build_k(broken)))
print("  closed form:", closed)
