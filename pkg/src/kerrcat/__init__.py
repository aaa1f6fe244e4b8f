"""Optimal-adiabatic cat-state preparation in a Kerr-nonlinear resonator."""

__version__ = "0.1.0"

from .errors import (
    AdiabaticityError,
    ConfigError,
    DegenerateGapError,
    GridTooSmallError,
    KerrcatError,
    LobeDetectionError,
    NumericsError,
    PlannerStuckError,
    PositivityError,
    StepSizeError,
    TraceError,
    TruncationError,
)
from .fock import (
    FockBasis,
    HamiltonianParams,
    QuantumState,
    Spectrum,
    analytic_energy,
    build_annihilation,
    build_hamiltonian,
    cat_state,
    coherent_state,
    displaced_fock,
    displacement_operator,
    eigendecompose,
)
from .planner import (
    AdiabaticityReport,
    ControlPath,
    PathPoint,
    PlannerConfig,
    Schedule,
    adiabaticity_report,
    default_planner_dim,
    descent_step,
    penalty_density,
    plan_path,
    schedule_from_path,
    spc_schedule,
    time_for_penalty,
)
from .dynamics import (
    EvolutionConfig,
    SpectrumTrace,
    Trajectory,
    evolve_lindblad,
    evolve_schrodinger,
    spectrum_along_schedule,
)
from .analysis import (
    PhaseGrid,
    ProtocolReport,
    WignerMap,
    cat_size,
    fidelity,
    nonclassical_volume,
    protocol_report,
    wigner,
    wigner_point,
)
from . import io
