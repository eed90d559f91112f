"""Simulation of SDEs driven by fractional Brownian motion (H > 1/2) and
nonparametric kernel estimation of their drift, with a verification
harness that turns the consistency argument into runnable checks."""

__version__ = "0.1.0"

from .errors import (
    EmptyCurveError,
    EmptyReportError,
    FbmDriftError,
    InvalidExponentError,
    InvalidGammaError,
    InvalidParamsError,
    MissingFineGridError,
    NegativeEigenvalueError,
    NonFiniteStateError,
    PlanInvalidError,
    UnknownKernelError,
    UnknownModelError,
)
from .fbm import (
    FbmPath,
    HurstIndex,
    circulant_eigenvalues,
    fbm_covariance,
    fgn_batch,
    holder_coefficient,
    increment_autocovariance,
    sample_fbm,
)
from .models import (
    AssumptionReport,
    DriftModel,
    Kernel,
    builtin_drift,
    builtin_kernel,
    certify_drift,
    certify_kernel,
    scaled_kernel_eval,
    validate_assumptions,
)
from .sde import ObservationGrid, SamplePath, euler_path, make_grid, simulate, simulate_batch
from .malliavin import (
    MalliavinProfile,
    WickWorkspace,
    hilbert_weight,
    log_sensitivity_prefix,
    malliavin_derivative,
    malliavin_profile,
    wick_correction_vector,
    wick_increment,
)
from .estimator import (
    EstimateCurve,
    EstimatorConfig,
    TermDecomposition,
    decompose,
    decompose_curve,
    default_x_grid,
    denominator_mass,
    nw_estimate,
    nw_estimate_weighted_baseline,
    smoothing_oracle,
    smoothing_oracle_curve,
)
from .ergodic import (
    TestFunction,
    builtin_test_function,
    ergodic_summary,
    fou_stationary_variance,
    stationary_moment,
    step_average,
    time_average,
    within_proven_regime,
)
from .harness import ExperimentPlan, run_consistency, run_term_decay
from .report import ConvergenceReport, DecayTable, emit_decay, emit_report, svg_line_plot

__all__ = [
    "__version__",
    # errors
    "FbmDriftError", "NegativeEigenvalueError", "InvalidExponentError",
    "UnknownModelError", "InvalidParamsError", "UnknownKernelError",
    "InvalidGammaError", "NonFiniteStateError", "MissingFineGridError",
    "EmptyCurveError", "PlanInvalidError", "EmptyReportError",
    # fbm
    "HurstIndex", "FbmPath", "fbm_covariance", "increment_autocovariance",
    "circulant_eigenvalues", "sample_fbm", "fgn_batch", "holder_coefficient",
    # models
    "DriftModel", "Kernel", "AssumptionReport", "builtin_drift", "builtin_kernel",
    "scaled_kernel_eval", "certify_drift", "certify_kernel", "validate_assumptions",
    # sde
    "ObservationGrid", "SamplePath", "make_grid", "simulate", "simulate_batch",
    "euler_path",
    # malliavin
    "MalliavinProfile", "WickWorkspace", "log_sensitivity_prefix",
    "malliavin_derivative", "malliavin_profile", "hilbert_weight",
    "wick_increment", "wick_correction_vector",
    # estimator
    "EstimatorConfig", "EstimateCurve", "TermDecomposition", "default_x_grid",
    "denominator_mass", "nw_estimate", "decompose", "decompose_curve",
    "nw_estimate_weighted_baseline", "smoothing_oracle", "smoothing_oracle_curve",
    # ergodic
    "TestFunction", "builtin_test_function", "time_average", "step_average",
    "within_proven_regime", "fou_stationary_variance", "stationary_moment",
    "ergodic_summary",
    # harness / report
    "ExperimentPlan", "run_consistency", "run_term_decay",
    "ConvergenceReport", "DecayTable", "emit_report", "emit_decay", "svg_line_plot",
]
