"""Per-iteration quadratic tracking costs, their gradients, and optimizers.

The measured cost of an iteration is
    f(x) = 0.5 * (||H x - r||_Q^2 + ||x||_R^2)
with H the realized plant.  The controller never sees H; it forms its gradient
estimate from the nominal model M and the measured output y = H x:
    g_hat(x) = M^T Q (y - r) + R x.
The estimate and the true gradient differ exactly by (M Delta)^T Q (H x - r)
when H = M + M Delta, which is what the mismatch-bias constant of the regret
bound measures.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import BoxSet, SpdMatrix, solve_box_qp
from .model import LiftedModel

STRICT_CONVEXITY_RTOL = 1e-10
OPTIMALITY_KKT_TOL = 1e-9
OPTIMIZER_MAX_ITER = 200_000


class ConvexityError(ValueError):
    """The requested optimum is not defined by a strictly convex problem."""


@dataclass(frozen=True)
class QuadCost:
    """One iteration's tracking cost with its plant/model pair.

    plant: realized lifted map H (hidden from the controller),
    nominal: modeled lifted map M, reference: target output r,
    output_weight: Q (SPD), input_weight: R (symmetric PSD, may be 0).
    """

    plant: LiftedModel
    nominal: LiftedModel
    reference: np.ndarray
    output_weight: SpdMatrix
    input_weight: np.ndarray

    def __post_init__(self):
        n = self.plant.horizon
        r = np.asarray(self.reference, dtype=float)
        reg = np.asarray(self.input_weight, dtype=float)
        if self.nominal.horizon != n:
            raise ValueError("plant and nominal model horizons differ")
        if r.shape != (n,):
            raise ValueError(f"reference shape {r.shape} != ({n},)")
        if self.output_weight.n != n:
            raise ValueError("output weight size does not match horizon")
        if reg.shape != (n, n):
            raise ValueError(f"input weight shape {reg.shape} != ({n}, {n})")
        if np.linalg.norm(reg - reg.T) > 1e-12 * max(1.0, np.linalg.norm(reg)):
            raise ValueError("input weight must be symmetric")
        ev_min = float(np.linalg.eigvalsh(0.5 * (reg + reg.T))[0])
        if ev_min < -1e-10 * max(1.0, float(np.abs(reg).max())):
            raise ValueError(f"input weight must be PSD (min eig {ev_min:.3e})")
        object.__setattr__(self, "reference", r)
        object.__setattr__(self, "input_weight", reg)
        self.reference.flags.writeable = False
        self.input_weight.flags.writeable = False

    @property
    def dim(self):
        return self.plant.horizon


def eval_cost(cost: QuadCost, x):
    """f(x) = 0.5 (||H x - r||_Q^2 + ||x||_R^2); nonnegative by construction."""
    resid = cost.plant.matrix @ x - cost.reference
    q = cost.output_weight.mat
    return 0.5 * float(resid @ (q @ resid) + x @ (cost.input_weight @ x))


def true_grad(cost: QuadCost, x):
    """Exact gradient H^T Q (H x - r) + R x (simulator side only)."""
    resid = cost.plant.matrix @ x - cost.reference
    return cost.plant.matrix.T @ (cost.output_weight.mat @ resid) + cost.input_weight @ x


def model_grad(cost: QuadCost, x, y_measured):
    """Controller-side estimate M^T Q (y - r) + R x from the measured output."""
    y_measured = np.asarray(y_measured, dtype=float)
    dev = cost.output_weight.mat @ (y_measured - cost.reference)
    return cost.nominal.matrix.T @ dev + cost.input_weight @ x


def hessian(cost: QuadCost):
    """H^T Q H + R, the curvature of the measured cost."""
    qh = cost.output_weight.mat @ cost.plant.matrix
    hess = cost.plant.matrix.T @ qh + cost.input_weight
    return 0.5 * (hess + hess.T)


def _linear_term(cost: QuadCost):
    return cost.plant.matrix.T @ (cost.output_weight.mat @ cost.reference)


def _solve_strictly_convex(hess, lin, box, x0, what):
    ev = np.linalg.eigvalsh(hess)
    if ev[0] <= STRICT_CONVEXITY_RTOL * ev[-1] or ev[0] <= 0.0:
        raise ConvexityError(
            f"{what}: not strictly convex (eig range [{ev[0]:.3e}, {ev[-1]:.3e}])"
        )
    if box is None or box.is_unconstrained:
        return np.linalg.solve(hess, lin)
    free = np.linalg.solve(hess, lin)
    start = box.clamp(free) if x0 is None else np.asarray(x0, dtype=float)
    return solve_box_qp(
        hess, lin, box,
        tol=OPTIMALITY_KKT_TOL, max_iter=OPTIMIZER_MAX_ITER,
        x0=start, eig_range=(float(ev[0]), float(ev[-1])), what=what,
    )


def solve_optimal(cost: QuadCost, box: BoxSet | None = None, x0=None):
    """Minimizer of the measured cost, optionally over a box.

    Unconstrained: direct solve of (H^T Q H + R) x = H^T Q r.  Constrained:
    accelerated projected gradient down to a 1e-9 projected-gradient KKT
    residual (same solver as the weighted projection).  Raises ConvexityError
    when H^T Q H + R is not strictly positive definite.
    """
    return _solve_strictly_convex(hessian(cost), _linear_term(cost), box, x0,
                                  "per-iteration optimum")


def hindsight_static_optimum(costs, box: BoxSet | None = None, x0=None):
    """Single input minimizing the summed cost of a list of iterations."""
    if not costs:
        raise ValueError("hindsight optimum of an empty cost list")
    hess = sum(hessian(c) for c in costs)
    lin = sum(_linear_term(c) for c in costs)
    return _solve_strictly_convex(hess, lin, box, x0, "hindsight optimum")


def build_reference(dc_gain, horizon, low_input, high_input, high_fraction=0.9):
    """Raised-cosine ramp between the DC responses of the two power levels.

    Starts at dc_gain * low_input and ends at high_fraction * dc_gain *
    high_input, so the target band sits strictly inside what the input box can
    reach in steady state while the initial transient is genuinely hard.
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    lo = dc_gain * low_input
    hi = high_fraction * dc_gain * high_input
    if horizon == 1:
        return np.array([lo])
    tau = np.arange(horizon) / (horizon - 1)
    return lo + (hi - lo) * 0.5 * (1.0 - np.cos(np.pi * tau))
