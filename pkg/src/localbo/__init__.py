"""Local Bayesian optimization: gradient-uncertainty query design, the
descent loop, analytic error bounds, and experiment tooling."""

from .kernels import MATERN25, RBF, KernelInputError, StationaryKernel
from .gp import ConditioningError, Dataset, GpModel, GpPosterior
from .design import (
    Design,
    ErrorFunctionConfig,
    MinimizerConfig,
    alpha_trace,
    bound_matern,
    bound_noiseless,
    bound_rbf_lambert,
    bound_rbf_taylor,
    central_design,
    central_trace_bound,
    error_bound,
    error_function_empirical,
    forward_design,
    forward_trace_bound,
    lambert_w0,
    minimize_acquisition,
)
from .sampler import SamplePath, TestFunction, UndefinedGradientError, draw_path
from .optimizer import (
    BatchSchedule,
    IterRecord,
    RunConfig,
    RunTrace,
    estimate_smoothness,
    gradient_mapping,
    project_box,
    rate_reference,
    run_local_bo,
)
from .baselines import (
    equivalent_grid_size,
    expected_extreme_bound,
    run_gp_ucb,
    run_random_search,
)

__version__ = "0.1.0"

__all__ = [
    "MATERN25",
    "RBF",
    "KernelInputError",
    "StationaryKernel",
    "ConditioningError",
    "Dataset",
    "GpModel",
    "GpPosterior",
    "Design",
    "ErrorFunctionConfig",
    "MinimizerConfig",
    "alpha_trace",
    "bound_matern",
    "bound_noiseless",
    "bound_rbf_lambert",
    "bound_rbf_taylor",
    "central_design",
    "central_trace_bound",
    "error_bound",
    "error_function_empirical",
    "forward_design",
    "forward_trace_bound",
    "lambert_w0",
    "minimize_acquisition",
    "SamplePath",
    "TestFunction",
    "UndefinedGradientError",
    "draw_path",
    "BatchSchedule",
    "IterRecord",
    "RunConfig",
    "RunTrace",
    "estimate_smoothness",
    "gradient_mapping",
    "project_box",
    "rate_reference",
    "run_local_bo",
    "equivalent_grid_size",
    "expected_extreme_bound",
    "run_gp_ucb",
    "run_random_search",
]
