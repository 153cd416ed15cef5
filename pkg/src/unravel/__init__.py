"""Stochastic unravelings of Markovian open quantum systems.

The package simulates pure-state trajectories whose projector average
reproduces the Lindblad master equation (diffusive and jump flavors),
checks them against a deterministic density-matrix oracle, and extracts
constant-phase surfaces of section from classical and quantum Duffing
dynamics.
"""

__version__ = "0.1.0"

from .classical import (
    CoherentAmplitude,
    PhasePoint,
    classical_duffing_map,
    coherent_qj_step,
    coherent_qsd_step,
    duffing_rhs,
    ehrenfest_defect,
    integrate_classical,
    integrate_classical_arrays,
)
from .errors import (
    ConfigurationError,
    DivergenceError,
    GapError,
    NumericalError,
    ShapeError,
    StepFailureError,
    StepSizeError,
    TruncationBreachError,
    UnravelError,
    ValidationError,
)
from .fock import (
    OperatorMatrix,
    StateVector,
    TruncationWarning,
    annihilation_op,
    coherent_state,
    creation_op,
    expectation,
    fock_state,
    identity_op,
    momentum_op,
    number_op,
    position_op,
    variance,
)
from .master import DensityMatrix, lindblad_rhs, moment, propagate, pure_density, purity
from .model import (
    DuffingParams,
    HOParams,
    LindbladModel,
    build_damped_ho,
    build_duffing,
    hamiltonian_at,
)
from .noise import NoiseStream, sample_complex_wiener
from .poincare import (
    SectionPoint,
    SectionSeries,
    classical_section,
    quantum_section,
    read_section_csv,
    strobe_aligned_dt,
    write_section_csv,
)
from .trajectories import (
    EnsembleResult,
    TrajectoryRecord,
    ensemble_density,
    qj_step,
    qsd_step,
    run_trajectory,
)

__all__ = [name for name in dir() if not name.startswith("_")]
