"""Preconditioned online gradient descent for iterative learning control.

Simulates repeated trajectory-tracking trials where the controller's lifted
model carries multiplicative uncertainty, applies a metric-projected gradient
update per trial, and instruments the run with dynamic/static regret, their
analytic bounds, and contraction certificates.
"""

from .linalg import (
    BoxSet,
    SpdMatrix,
    solve_box_qp,
    spectral_norm,
    weighted_mat_norm,
    weighted_project,
    weighted_vec_norm,
)
from .model import (
    LiftedModel,
    StateSpace,
    UncertaintyDraw,
    default_standin,
    lift,
    sample_uncertainty,
    synth_standin_model,
    true_plant,
)
from .cost import (
    QuadCost,
    build_reference,
    eval_cost,
    hindsight_static_optimum,
    model_grad,
    solve_optimal,
    true_grad,
)
from .controller import (
    ControllerState,
    StepSchedule,
    StepSizeError,
    UncertaintyBudgetError,
    adaptive_step,
    choose_regularization,
    classic_ilc_step,
    contraction_factor,
    max_step,
    pogd_step,
    preconditioner,
    w_factor,
)
from .regret import (
    RegretError,
    RegretTrace,
    audit_bound_recursions,
    average_dynamic_regret,
    dynamic_regret,
    dynamic_regret_bound,
    empirical_constants,
    geometric_double_sum_bound,
    invariant_regret_bound,
    static_regret,
    static_regret_bound,
)
from .harness import (
    ConfigError,
    ExperimentConfig,
    RunAborted,
    check_bounds,
    compare_adaptive,
    prepare,
    run_experiment,
    sweep_step_sizes,
)

__version__ = "0.1.0"

__all__ = [
    "BoxSet", "SpdMatrix", "solve_box_qp", "spectral_norm",
    "weighted_mat_norm", "weighted_project", "weighted_vec_norm",
    "LiftedModel", "StateSpace", "UncertaintyDraw", "default_standin",
    "lift", "sample_uncertainty", "synth_standin_model", "true_plant",
    "QuadCost", "build_reference", "eval_cost", "hindsight_static_optimum",
    "model_grad", "solve_optimal", "true_grad",
    "ControllerState", "StepSchedule", "StepSizeError",
    "UncertaintyBudgetError", "adaptive_step", "choose_regularization",
    "classic_ilc_step", "contraction_factor", "max_step", "pogd_step",
    "preconditioner", "w_factor",
    "RegretError", "RegretTrace", "audit_bound_recursions",
    "average_dynamic_regret", "dynamic_regret", "dynamic_regret_bound",
    "empirical_constants", "geometric_double_sum_bound",
    "invariant_regret_bound", "static_regret", "static_regret_bound",
    "ConfigError", "ExperimentConfig", "RunAborted", "check_bounds",
    "compare_adaptive", "prepare", "run_experiment", "sweep_step_sizes",
]
