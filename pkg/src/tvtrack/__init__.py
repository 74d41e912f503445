"""Tracking solvers and benchmarks for time-varying convex optimization."""

from .benchmarks import (
    PowerGridProblem,
    make_power_grid,
    make_robot_tracking,
    make_sinusoid_quadratic,
)
from .correctors import (
    CorrectorKind,
    contraction_factor,
    default_alpha,
    projected_gradient_step,
    proximal_gradient_step,
)
from .discrete import (
    SolverConfig,
    TrajectoryRecord,
    reference_trajectory,
    run_prediction_correction,
    run_unstructured,
    solve_frozen,
)
from .flows import (
    BarrierSchedules,
    ConstrainedProblem,
    ConstraintFunction,
    FlowConfig,
    barrier_flow,
    barrier_oracle,
    initial_slack,
    integrate_flow,
    optimal_flow_rhs,
)
from .metrics import (
    MetricsReport,
    compute_ate,
    compute_ate_mean,
    compute_report,
    compute_sg,
    compute_tr,
    estimate_cr,
    improvement_ratio,
    loglog_slope,
    path_length,
)
from .navigation import (
    NavigationRecord,
    RobotScene,
    default_scene,
    local_free_space,
    project_goal_reference,
    run_robot_navigation,
)
from .predictors import (
    HintStream,
    KalmanModel,
    QuadraticModel,
    build_taylor_model,
    hint_gradient,
    kalman_predict,
    predict_by_parameter,
    predict_composite,
    predict_unconstrained,
)
from .problems import (
    ConvexityProfile,
    DriftBounds,
    ParameterizedFamily,
    QuadraticBoxStructure,
    TimeGrid,
    TVProblemOracle,
    finite_diff_time_grad,
)
from .regularizers import L1Norm, SetIndicator, ZeroFunction, prox, soft_threshold
from .sets import Ball, Box, HalfspaceIntersection, WholeSpace, project

__version__ = "0.1.0"
