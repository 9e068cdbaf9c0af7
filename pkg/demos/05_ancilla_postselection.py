"""
Non-unitary decay segment as a unitary on register plus ancilla.

exp(-K t) is not a quantum gate, but entangling the register with an
ancilla indexed by the eigenvectors of K, rotating each ancilla level by
the corresponding decay factor, and keeping only the flagged measurement
outcome applies exactly that map. The price is a finite success
probability per segment.
"""
import numpy as np

from qswlab import RngStream, ancilla_evolve, measure_ancilla, segment_norm

# two-level register, decay rates 1 and 0 (only the first level decays)
k = np.diag([1.0, 0.0])
psi0 = np.array([1.0, 1.0]) / np.sqrt(2)
t = np.log(2) / 2  # exp(-2 k t) halves the decaying level's weight

out = ancilla_evolve(k, psi0, t)
# level weights decay from (1/2, 1/2) to (1/4, 1/2); success is their sum
print("success probability:", out.success_probability)
print("post-selected state:", np.round(out.post_state.real, 6))
predicted = np.sqrt([0.25, 0.5]) / np.sqrt(0.75)
print("predicted       :", np.round(predicted, 6))

# segment_norm prices a segment without building the joint state
print("\nsegment_norm agrees:", segment_norm(psi0, k, t))

# chained segments: success probabilities multiply along the walk
p1 = segment_norm(psi0, k, t)
out1 = ancilla_evolve(k, psi0, t)
p2 = segment_norm(out1.post_state, k, t)
print("two-segment joint success:", p1 * p2,
      " direct:", segment_norm(psi0, k, 2 * t))

# sampling the flag bit reproduces the success rate
rng = RngStream(42, 0)
shots = 20000
hits = sum(measure_ancilla(out, rng) for _ in range(shots))
print(f"\nsampled flag rate over {shots} shots: {hits / shots:.4f}"
      f" (expected {out.success_probability:.4f})")
