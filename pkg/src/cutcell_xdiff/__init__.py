"""Structure-preserving cut-cell finite volumes for two cross-diffusion phases
coupled by a moving interface in one space dimension."""

from .diagnostics import free_energy, l1_spacetime_error, masses
from .errors import (
    CFLViolation,
    ConfigurationError,
    DegenerateEdgeError,
    DomainError,
    InvalidMassError,
    NumericalFailure,
    StepFailure,
)
from .mesh import CutMesh, Move
from .model import (
    PhaseKind,
    StationaryState,
    TwoPhaseParams,
    butler_volmer,
    coexistence_condition,
    solve_stationary,
    tc1_params,
    tc1_profiles,
)
from .stepper import State, StepConfig, Trajectory, advance, initial_state, run

__version__ = "0.1.0"
