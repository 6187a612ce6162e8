"""Simulation and analysis of two competing dispersing populations under
proportional harvesting: time integration, semi-trivial steady states,
principal eigenvalues, coexistence/exclusion bounds, sustainable yield,
and harvesting-rate sweeps on 1-D habitats with zero-flux boundaries."""

__version__ = "0.1.0"

from .analysis import (
    BoundsReport,
    IdealFreePair,
    InequalityCheck,
    InequalityReport,
    Outcome,
    OutcomeRecord,
    YieldReport,
    alpha_star,
    alpha_star_ifp,
    classify,
    detect_ideal_free_pair,
    fit_convex_hull,
    inequality_suite,
    invasion_potential,
    sustainable_yield,
)
from .config import (
    RunConfig,
    apply_overrides,
    build_environment,
    load_config,
    parse_config_text,
)
from .dynamics import (
    HarvestRates,
    PopulationState,
    SimulationConfig,
    TransformedParams,
    run_to_time,
    solve_semitrivial,
    step,
    transform,
)
from .errors import (
    ConfigurationError,
    ConvergenceError,
    ExpressionError,
    HarvestCompError,
    NumericalError,
    SingularSystemError,
    UnstableStepError,
)
from .grid import Field, SpatialGrid, average, integrate
from .operators import (
    DiffusionOperator,
    apply,
    build_operator,
    shifted_solver,
    solve_shifted,
)
from .profiles import (
    EnvironmentProfile,
    environment_from_expressions,
    evaluate,
    parse,
    sample,
    to_string,
    validate_environment,
)
from .spectral import EigenResult, principal_eigen, rayleigh_lower_bound
from .sweep import (
    CellFailure,
    SweepGrid,
    SwitchPoint,
    find_switch,
    simulate_cell,
    sweep_alpha,
    sweep_grid,
)
