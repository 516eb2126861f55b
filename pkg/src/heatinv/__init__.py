"""heatinv: recover the source, boundary input and initial data of the 1-D
heat equation from the observation triple {u_1(t), u_3(t), u(y, t)}."""

from .basis import (
    BASIS_NORM,
    Mode,
    ObservationPointCheck,
    SineSeries,
    check_observation_point,
    eval_basis,
    mode_constants,
    project,
    synthesize,
)
from .errors import (
    ConfigError,
    DataError,
    DomainError,
    GridMismatchError,
    HeatInvError,
    InversionError,
    ParseError,
    PreconditionError,
    ScheduleError,
)
from .forward import (
    FDSolution,
    NoiseSpec,
    Observations,
    ProblemInstance,
    SpectralSolution,
    make_observations,
    mode_evolve,
    solve_fd,
    solve_spectral,
)
from .grid import GridFn, rel_l2
from .inverse import (
    DET_EXACT,
    AssembledG,
    DerivativeScheme,
    Diagnostics,
    InversionConfig,
    PeelPlan,
    PeelResult,
    Reconstruction,
    assemble_g,
    compute_w,
    extract_g13,
    invert,
    peel_lsq,
    peel_sequential,
    plan_peel,
    recover_vh,
    system_determinant,
)
from .io import ExperimentConfig, load_config, read_observations, save_config, write_observations
from .presets import PRESETS, make_problem, preset_names
from .regularize import (
    AmplificationProfile,
    NoiseStudy,
    TrialRecord,
    amplification_profile,
    run_noise_study,
)

__version__ = "0.1.0"

__all__ = [
    "AmplificationProfile",
    "AssembledG",
    "BASIS_NORM",
    "ConfigError",
    "DET_EXACT",
    "DataError",
    "DerivativeScheme",
    "Diagnostics",
    "DomainError",
    "ExperimentConfig",
    "FDSolution",
    "GridFn",
    "GridMismatchError",
    "HeatInvError",
    "InversionConfig",
    "InversionError",
    "Mode",
    "NoiseSpec",
    "NoiseStudy",
    "ObservationPointCheck",
    "Observations",
    "ParseError",
    "PeelPlan",
    "PeelResult",
    "PreconditionError",
    "PRESETS",
    "ProblemInstance",
    "Reconstruction",
    "ScheduleError",
    "SineSeries",
    "SpectralSolution",
    "TrialRecord",
    "amplification_profile",
    "assemble_g",
    "check_observation_point",
    "compute_w",
    "eval_basis",
    "extract_g13",
    "invert",
    "load_config",
    "make_observations",
    "make_problem",
    "mode_constants",
    "mode_evolve",
    "peel_lsq",
    "peel_sequential",
    "plan_peel",
    "preset_names",
    "project",
    "read_observations",
    "recover_vh",
    "rel_l2",
    "run_noise_study",
    "save_config",
    "solve_fd",
    "solve_spectral",
    "synthesize",
    "system_determinant",
    "write_observations",
]
