"""Pseudo-spectral Galerkin solver for damped compressible flow coupled to
a mean-zero potential on the periodic box, with energy and entropy
diagnostics and regularization-limit sweeps."""

from .config import (
    DensityMode,
    InitialDataSpec,
    RandomPerturbation,
    RunConfig,
    VelocityMode,
    build_initial_state,
    check_stability,
    config_from_json,
    config_to_json,
    initial_norms,
    load_config,
    save_config,
    timestep_for_horizon,
)
from .continuity import (
    ContinuityConfig,
    PositivityLossError,
    comparison_bounds,
    stable_dt_bound,
    step_continuity,
)
from .diagnostics import (
    CSV_COLUMNS,
    ComparisonEnvelopeReport,
    DiagnosticsRecord,
    DissipationLedger,
    ENERGY_SLACK_CONSTANT,
    EnergyBreakdown,
    EntropyBoundReport,
    EntropyBreakdown,
    EntropyDissipations,
    IDENTITY_KINDS,
    InequalityReport,
    SolutionClassNorms,
    check_comparison_envelope,
    check_energy_inequality,
    check_entropy_bound,
    check_identity,
    compute_energy,
    compute_entropy,
    solution_class_norms,
    write_diagnostics_csv,
)
from .galerkin import (
    MassOperator,
    NoContractionError,
    NonPositiveDensityError,
    PicardStepResult,
    SimulationAbortedError,
    Trajectory,
    build_mass_operator,
    mass_solve,
    momentum_rhs,
    momentum_rhs_terms,
    picard_step,
    run_simulation,
)
from .grid import (
    SpectralField,
    TorusGrid,
    VectorField,
    galerkin_mode_budget,
    mode_count_for_ball,
)
from .poisson import PoissonConfig, poisson_residual, solve_poisson
from .pressure import EnvelopeReport, PressureLaw, certify_envelope
from .report import read_diagnostics_csv, write_report
from .snapshot import SnapshotFormatError, read_snapshot, write_snapshot
from .state import GalerkinState, RegularizationParams
from .sweep import (
    STAGES,
    ColdPressureTrend,
    SweepPlan,
    SweepReport,
    cauchy_distance,
    cold_pressure_vanishing,
    measured_order,
    run_sweep,
)

__version__ = "0.1.0"
