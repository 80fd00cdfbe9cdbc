"""Numerical laboratory for the robustness of generalized Bell-inequality
violations in bipartite d-level systems."""

from .analysis import (
    ErfFit,
    FitConvergenceError,
    GaussianFit,
    Histogram,
    PowerLawFit,
    build_histogram,
    erf_profile,
    fit_erf_profile,
    fit_power_law,
    gaussian_summary,
    l_star,
)
from .bell import (
    BellKind,
    BellResult,
    bell_values,
    classical_bound,
    evaluate,
    evaluate_I,
    evaluate_Id,
    evaluate_Id_projector,
    projection_probability,
)
from .concentration import (
    ConcentrationReport,
    bound_main,
    bound_median,
    empirical_concentration,
    lipschitz_bound,
    sample_uniform_values,
)
from .experiments import (
    EPSILON_BELOW_RANGE,
    SampleRun,
    ViolationStats,
    critical_epsilon,
    dim_from_l,
    epsilon_grid,
    l_from_dim,
    random_measurement_run,
    sample_distribution,
    violation_profile,
    violation_stats,
)
from .linalg import (
    derive_rng,
    expm_i_hermitian,
    haar_unitary,
    tensor_product,
    uniform_sphere_state,
)
from .measurements import (
    MeasurementBasis,
    MeasurementSettings,
    OutcomeTable,
    correlated_probability,
    optimal_settings,
    outcome_table,
)
from .optimizer import (
    NelderMeadResult,
    ObjectiveError,
    ObservableParams,
    OptimizationResult,
    SimplexConfig,
    nelder_mead,
    optimize_settings,
    params_to_settings,
)
from .perturbations import (
    PerturbationConfig,
    PerturbationKind,
    apply_bilocal,
    apply_global,
    random_hermitian,
)
from .states import PureState, bell_state, random_entangled_state, random_product_state

__version__ = "0.1.0"
