"""Open quantum walks on graphs, three ways.

A walk graph couples nodes coherently (Hermitian couplings) and
incoherently (directed jump rates). This package evolves such walks by
exact master-equation integration, by norm-watched jump trajectories,
and by a hybrid protocol emulation that replaces norm tracking with an
analytic jump clock whenever every coherent component decays at one
shared rate. It also checks that equal-rate condition, prices the
protocol's measurement budget, and realizes single decay segments by
ancilla post-selection.
"""

from .ancilla import (
    AncillaOutcome,
    ancilla_evolve,
    eigendecompose_k,
    measure_ancilla,
    segment_norm,
)
from .graph import (
    GraphFormatError,
    GraphSpec,
    ValidationReport,
    coherent_subgraphs,
    load_graph,
    node_lambda,
    parse_graph,
    validate,
)
from .lindblad import (
    PopulationSeries,
    density_from_state,
    integrate,
    lindblad_rhs,
)
from .operators import (
    build_hamiltonian,
    build_k,
    commutator_norm,
    propagator_nonhermitian,
    trotter_propagator,
)
from .parallel import run_ensemble
from .qtqc import (
    InadmissibleGraphError,
    QtqcEngine,
    ResourceEstimate,
    coherent_evolve,
    measure_node,
    resource_estimate,
    run_qtqc_trajectory,
    sample_destination,
    sample_jump_time,
)
from .rng import RngStream, RunningStats, merge_stats
from .trajectories import (
    EnsembleResult,
    JumpEngine,
    TrajectoryRecord,
    apply_jump,
    ensemble_density,
    evolve_until_event,
    jump_weights,
    run_trajectory,
)

__version__ = "0.1.0"

__all__ = [
    "AncillaOutcome",
    "EnsembleResult",
    "GraphFormatError",
    "GraphSpec",
    "InadmissibleGraphError",
    "JumpEngine",
    "PopulationSeries",
    "QtqcEngine",
    "ResourceEstimate",
    "RngStream",
    "RunningStats",
    "TrajectoryRecord",
    "ValidationReport",
    "ancilla_evolve",
    "apply_jump",
    "build_hamiltonian",
    "build_k",
    "coherent_evolve",
    "coherent_subgraphs",
    "commutator_norm",
    "density_from_state",
    "eigendecompose_k",
    "ensemble_density",
    "evolve_until_event",
    "integrate",
    "jump_weights",
    "lindblad_rhs",
    "load_graph",
    "measure_ancilla",
    "measure_node",
    "merge_stats",
    "node_lambda",
    "parse_graph",
    "propagator_nonhermitian",
    "resource_estimate",
    "run_ensemble",
    "run_qtqc_trajectory",
    "run_trajectory",
    "sample_destination",
    "sample_jump_time",
    "segment_norm",
    "trotter_propagator",
    "validate",
]
