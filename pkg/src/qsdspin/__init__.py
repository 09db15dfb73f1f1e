"""Stochastic trajectories of continuously monitored spins.

This package simulates single spins (1/2, 1, 3/2) whose z component is
monitored continuously while a transverse field drives coherent rotation.
Individual measurement records are unravelled as quantum-state-diffusion
trajectories; strong monitoring freezes the spin near measurement
eigenstates and the statistics of the resulting jump-and-dwell dynamics
quantify the quantum Zeno effect.

Layout
------
``algebra``
    Spin operators, generator bases, coherence-vector parametrizations.
``noise``
    Reproducible Wiener increments and branch-selection uniforms.
``models``
    Drift/diffusion coefficient functions for every state parametrization.
``engine``
    Euler-Maruyama / Kraus steppers, deterministic ensemble-mean integrator,
    trajectory and ensemble drivers.
``analysis``
    Zeno statistics: residence probabilities, return times, angle
    distributions, occupancy maps, mean precession rates.
``config`` / ``storage`` / ``cli``
    Run configuration, CSV round-tripping and the command-line front end.
"""

__version__ = "0.1.0"

from .algebra import (
    CoherenceVector,
    GeneratorBasis,
    PhysicalityReport,
    SpinSystem,
    build_spin_system,
    canonical_model,
    check_physical,
    coherence_to_density,
    density_to_coherence,
    eigenstate_coherence,
    eigenstate_projector,
    generator_basis,
    maximally_mixed,
    purity,
    spin_components,
)
from .analysis import (
    AngleDistribution,
    AnalysisSummary,
    Occupancy2D,
    ReturnTimeStats,
    VicinitySpec,
    angle_pdf,
    angle_reference_density,
    mean_rabi_rate,
    mean_return_times,
    occupancy_2d,
    residence_probabilities,
    summarize,
)
from .config import ConfigError, RunConfig, parse_config, render_config
from .engine import (
    EnsembleResult,
    NumericalError,
    TrajectoryRecord,
    euler_maruyama_step,
    kraus_completeness_residual,
    kraus_operators,
    kraus_step,
    lindblad_integrate,
    lindblad_rhs,
    qsd_matrix_step,
    run_ensemble,
    run_trajectory,
)
from .models import ModelParams, make_ito_system
from .noise import NoisePath, wiener_path
from .storage import read_trajectory, write_ensemble, write_summary, write_trajectory

__all__ = [
    "CoherenceVector",
    "GeneratorBasis",
    "PhysicalityReport",
    "SpinSystem",
    "build_spin_system",
    "canonical_model",
    "check_physical",
    "coherence_to_density",
    "density_to_coherence",
    "eigenstate_coherence",
    "eigenstate_projector",
    "generator_basis",
    "maximally_mixed",
    "purity",
    "spin_components",
    "AngleDistribution",
    "AnalysisSummary",
    "Occupancy2D",
    "ReturnTimeStats",
    "VicinitySpec",
    "angle_pdf",
    "angle_reference_density",
    "mean_rabi_rate",
    "mean_return_times",
    "occupancy_2d",
    "residence_probabilities",
    "summarize",
    "ConfigError",
    "RunConfig",
    "parse_config",
    "render_config",
    "EnsembleResult",
    "NumericalError",
    "TrajectoryRecord",
    "euler_maruyama_step",
    "kraus_completeness_residual",
    "kraus_operators",
    "kraus_step",
    "lindblad_integrate",
    "lindblad_rhs",
    "qsd_matrix_step",
    "run_ensemble",
    "run_trajectory",
    "ModelParams",
    "make_ito_system",
    "NoisePath",
    "wiener_path",
    "read_trajectory",
    "write_ensemble",
    "write_summary",
    "write_trajectory",
    "__version__",
]
