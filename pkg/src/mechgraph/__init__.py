"""Dissipative preparation of continuous-variable graph states of mechanical resonators.

A single optical cavity coupled to N mechanical resonators is driven, two
sidebands per resonator, through a sequence of N switching steps; cavity
decay then cools one collective mechanical mode per step into a squeezed
vacuum, leaving the resonators in the Gaussian graph state of a chosen
adjacency matrix.  The package synthesises the drive tables, propagates
the covariance dynamics exactly (with optional mechanical thermal noise),
and sweeps fidelity against noise, squeezing, and evolution time.
"""

__version__ = "0.1.0"

from .gaussian import (
    GaussianState,
    SqueezingSpec,
    fidelity_to_pure_target,
    partial_trace,
    physicality_deficit,
    purity,
    symplectic_form,
    symplectic_from_unitary,
    thermal,
    vacuum,
)
from .graphs import (
    GraphTarget,
    builtin_graph,
    graph_unitary,
    load_adjacency,
    nullifier_covariance,
    target_covariance,
    validate_adjacency,
)
from .model import (
    DriftDiffusion,
    DriveSchedule,
    DriveStep,
    SystemParams,
    beta_optimal,
    build_drift_diffusion,
    collective_step_system,
    drive_schedule,
    step_drift_spectrum,
    thermal_occupation,
    validate_regime,
)
from .numerics import (
    NotHurwitzError,
    eigenvalues,
    polar_decompose,
    propagate_lyapunov,
    solve_lyapunov,
    sqrtm_spd,
    transition_kernel,
)
from .protocol import (
    OptimizeResult,
    ProtocolConfig,
    Trajectory,
    final_fidelity,
    final_fidelity_vs_switchtime,
    noise_sweep,
    optimize_evolution_time,
    run_switching,
    squeezing_sweep,
)

__all__ = [
    "__version__",
    "GaussianState",
    "SqueezingSpec",
    "fidelity_to_pure_target",
    "partial_trace",
    "physicality_deficit",
    "purity",
    "symplectic_form",
    "symplectic_from_unitary",
    "thermal",
    "vacuum",
    "GraphTarget",
    "builtin_graph",
    "graph_unitary",
    "load_adjacency",
    "nullifier_covariance",
    "target_covariance",
    "validate_adjacency",
    "DriftDiffusion",
    "DriveSchedule",
    "DriveStep",
    "SystemParams",
    "beta_optimal",
    "build_drift_diffusion",
    "collective_step_system",
    "drive_schedule",
    "step_drift_spectrum",
    "thermal_occupation",
    "validate_regime",
    "NotHurwitzError",
    "eigenvalues",
    "polar_decompose",
    "propagate_lyapunov",
    "solve_lyapunov",
    "sqrtm_spd",
    "transition_kernel",
    "OptimizeResult",
    "ProtocolConfig",
    "Trajectory",
    "final_fidelity",
    "final_fidelity_vs_switchtime",
    "noise_sweep",
    "optimize_evolution_time",
    "run_switching",
    "squeezing_sweep",
]
