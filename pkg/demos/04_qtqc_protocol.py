"""
Hardware-shaped trajectory protocol and its measurement budget.

On an admissible graph the jump clock separates from the coherent motion:
the waiting time comes from a single exponential draw, the unitary between
jumps acts inside one coherent component, and the jump itself is a node
measurement followed by a classical destination draw. No norm tracking,
no propagator ladder.
"""
import numpy as np

from qswlab import (
    GraphSpec,
    density_from_state,
    ensemble_density,
    integrate,
    resource_estimate,
    run_ensemble,
)

g = GraphSpec.from_edges(
    ["a", "b", "c"],
    coherent={(0, 1): 1.0},
    incoherent={(0, 2): 0.5, (1, 2): 0.5, (2, 0): 0.2, (2, 1): 0.3},
    initial={0: 1.0},
)

T = 4.0
samples = np.linspace(0.0, T, 9)

# price the run before doing it
est = resource_estimate(g, T)
print("resource estimate over horizon", T)
print("  coherent components:", est.subgraphs)
print("  component rates:", est.lambdas)
print("  median inter-jump times:", tuple(round(x, 4) for x in est.median_interjump))
print("  worst-case measurement count:", round(est.worst_case_measurements, 2))

S = 4000
records = run_ensemble(g, g.initial, T, samples, S, master_seed=11, engine="qtqc", jobs=4)
ens = ensemble_density(records)
exact = integrate(g, density_from_state(g.initial), T, sample_times=samples)

print(f"\n{'t':>5} {'exact p_c':>11} {'protocol':>10} {'sigmas':>7}")
for k, t in enumerate(samples):
    e = exact.populations[k, 2]
    m = ens.mean_populations[k, 2]
    se = max(ens.stderr_populations[k, 2], 1e-12)
    print(f"{t:5.1f} {e:11.6f} {m:10.6f} {abs(m - e) / se:7.2f}")

mean_jumps = np.mean([len(r.jumps) for r in records])
print(f"\nmean jumps per trajectory: {mean_jumps:.2f}"
      f" (rate {est.lambdas[0]} times horizon {T} = {est.lambdas[0] * T:.1f})")
