"""Jump diffusion simulation and projection least squares drift estimation."""

from .basis import (
    BasisSpec,
    LBound,
    compute_L,
    dimension_cap,
    eval_all,
    eval_basis,
    growth_bound,
    hermite_basis,
    project_coefficients,
    trig_basis,
)
from .estimator import (
    DriftFit,
    TruncationConstants,
    empirical_inner,
    empirical_vector,
    evaluate_fit,
    fit_projection,
    gram_matrix,
    objective_gamma,
)
from .exceptions import (
    BundleFormatError,
    DegenerateDataError,
    DivergenceError,
    NumericsError,
    ParameterError,
    SingularMatrixError,
)
from .linalg import SymMatrix, cholesky_solve, inv_op_norm, jacobi_eigh, sym_eigen_min
from .metrics import (
    CalibrationResult,
    ExperimentConfig,
    ExperimentReport,
    TraceCheck,
    calibrate_penalty_const,
    empirical_risk,
    mise,
    plot_data,
    run_experiment,
    trace_bound_check,
)
from .selection import (
    DEFAULT_PENALTY_CONST,
    SelectionConfig,
    SelectionResult,
    admissible_dims,
    estimate_density_sup,
    penalty,
    select_model,
)
from .simulate import (
    JumpTrain,
    PathBundle,
    SdeModel,
    TimeGrid,
    builtin_model,
    normal_jump_law,
    path_stream,
    sample_compound_poisson,
    simulate_bundle,
    simulate_path,
)

__version__ = "0.1.0"
