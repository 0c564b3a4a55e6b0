"""Thresholds, regimes and simulations of stochastic competitive Lotka-Volterra systems."""

from .analysis import (
    KsResult,
    LyapunovEstimate,
    MonteCarloReport,
    empirical_vs_stationary,
    ergodic_average,
    extinction_probabilities,
    lyapunov_exponent,
    wilson_interval,
)
from .errors import (
    BoundaryExtinct,
    ComponentExtinct,
    CriticalCase,
    DegenerateNoise,
    LVError,
    MixedModeUnsupported,
    MomentDiverges,
    NonFiniteState,
    NonPositiveCoefficient,
    NoStationaryDensity,
    QuadratureFailure,
    ValidationError,
)
from .model import (
    EXAMPLE_1,
    EXAMPLE_2,
    EXAMPLE_3,
    DeterministicCase,
    DeterministicRegime,
    ModelParams,
    NoiseMode,
    classify_deterministic,
    validate_params,
)
from .pdmp import (
    BoundaryLambdas,
    PdmpSpec,
    SwitchedPath,
    invariant_box,
    occupation_fraction,
    pdmp_boundary_lambdas,
    pdmp_exclusion_mc,
    simulate_pdmp,
)
from .rng import gaussian_stream
from .sde import Path, SimConfig, simulate_boundary, simulate_full
from .stationary import (
    BoundarySpec,
    Regime,
    RegimeReport,
    StationaryDensity,
    boundary_spec,
    classify_stochastic,
    lambda1,
    lambda2,
    lambda_linear,
    moment,
    stationary_density,
)

__version__ = "0.1.0"
