"""Change-plane regression.

Least-squares estimation of a two-regime linear model whose regimes are
separated by an unknown hyperplane in moderating covariates, with
level-set midpoint estimators, exact sampling from the joint limit law,
and a parametric bootstrap for confidence intervals.
"""

from .bootstrap import (
    BootstrapConfig,
    CIRow,
    CISet,
    ResidualSummary,
    confidence_intervals,
    kernel_density_at_zero,
    neighborhood_set,
    orthonormal_complement,
    parametric_bootstrap,
    residual_resampler,
    residual_summary,
)
from .data import (
    ChangePlaneParams,
    Dataset,
    ScenarioSpec,
    ValidationReport,
    mean_response,
    read_dataset_csv,
    simulate_scenario,
    validate_dataset,
    write_dataset_csv,
)
from .errors import (
    ChangePlaneError,
    ConvergenceError,
    NoSplitError,
    NumericalError,
    ValidationError,
)
from .limitlaw import (
    JumpProcessDraw,
    LimitDraw,
    LimitSpec,
    extend_jump_process,
    limit_corridor,
    limit_mean_midargmin,
    limit_mode_midargmin,
    minimize_q02,
    sample_jump_process,
    sample_limit_distribution,
    sample_w,
    scenario_limit_spec,
    sigma_covariances,
)
from .midpoint import (
    Corridor,
    LevelSet,
    MidpointConfig,
    canonicalize_orientation,
    corridor,
    induced_signs,
    mean_midargmin,
    mode_midargmin,
)
from .objective import (
    FeasibilityReport,
    ProfileCurve,
    SplitFit,
    feasibility,
    profile_curve,
    profile_gamma,
    ssr,
    subgroup_least_squares,
    subgroup_mask,
)
from .search import (
    FitResult,
    SearchConfig,
    SearchTrace,
    fit,
    maximize_ssr,
    sample_local_sphere,
    sample_uniform_sphere,
)
from .studies import (
    StudyResult,
    coverage_study,
    limit_sample_study,
    rate_study,
    weakconv_study,
)

__version__ = "0.1.0"

__all__ = [
    "BootstrapConfig",
    "CIRow",
    "CISet",
    "ChangePlaneError",
    "ChangePlaneParams",
    "ConvergenceError",
    "Corridor",
    "Dataset",
    "FeasibilityReport",
    "FitResult",
    "JumpProcessDraw",
    "LevelSet",
    "LimitDraw",
    "LimitSpec",
    "MidpointConfig",
    "NoSplitError",
    "NumericalError",
    "ProfileCurve",
    "ResidualSummary",
    "ScenarioSpec",
    "SearchConfig",
    "SearchTrace",
    "SplitFit",
    "StudyResult",
    "ValidationError",
    "ValidationReport",
    "canonicalize_orientation",
    "confidence_intervals",
    "corridor",
    "coverage_study",
    "extend_jump_process",
    "feasibility",
    "fit",
    "induced_signs",
    "kernel_density_at_zero",
    "limit_corridor",
    "limit_mean_midargmin",
    "limit_mode_midargmin",
    "limit_sample_study",
    "maximize_ssr",
    "mean_midargmin",
    "mean_response",
    "minimize_q02",
    "mode_midargmin",
    "neighborhood_set",
    "orthonormal_complement",
    "parametric_bootstrap",
    "profile_curve",
    "profile_gamma",
    "rate_study",
    "read_dataset_csv",
    "residual_resampler",
    "residual_summary",
    "sample_jump_process",
    "sample_limit_distribution",
    "sample_local_sphere",
    "sample_uniform_sphere",
    "sample_w",
    "scenario_limit_spec",
    "sigma_covariances",
    "simulate_scenario",
    "ssr",
    "subgroup_least_squares",
    "subgroup_mask",
    "validate_dataset",
    "weakconv_study",
    "write_dataset_csv",
]
