"""
Exact density-matrix reference: integrate the master equation and check it
against closed-form decay, then show the integrator's fourth-order step
convergence.
"""
import numpy as np

from qswlab import GraphSpec, density_from_state, integrate

# single node "a" leaking into a sink "b" at rate 2 with no coherent
# coupling: p_a(t) = exp(-2 t) exactly
leak = GraphSpec.from_edges(
    ["a", "b"],
    incoherent={(0, 1): 2.0},
    initial={0: 1.0},
)

times = [0.0, 0.25, 0.5, 1.0, 2.0]
series = integrate(leak, density_from_state(leak.initial), 2.0, dt=1e-3,
                   sample_times=times)

print("pure decay vs analytic:")
print(f"{'t':>6} {'p_a':>18} {'exp(-2t)':>18} {'abs err':>10}")
for t, row in zip(series.sample_times, series.populations):
    exact = np.exp(-2 * t)
    print(f"{t:6.2f} {row[0]:18.12f} {exact:18.12f} {abs(row[0] - exact):10.2e}")

# convergence study on a graph with both coherent and incoherent parts;
# reference is the same integrator at a much finer step
mixed = GraphSpec.from_edges(
    ["a", "b"],
    coherent={(0, 1): 1.0},
    incoherent={(0, 1): 0.7, (1, 0): 0.7},
    initial={0: 1.0},
)
rho0 = density_from_state(mixed.initial)
ref = integrate(mixed, rho0, 1.0, dt=1e-4, sample_times=[1.0]).populations[0, 0]

print("\nstep halving on a mixed graph (errors should drop 16x):")
prev = None
for dt in (0.02, 0.01, 0.005, 0.0025):
    val = integrate(mixed, rho0, 1.0, dt=dt, sample_times=[1.0]).populations[0, 0]
    err = abs(val - ref)
    ratio = f"{prev / err:6.1f}" if prev else "     -"
    print(f"  dt={dt:<7} err={err:.3e}  ratio={ratio}")
    prev = err
