"""Preconditioned online gradient descent steps and contraction certificates.

Update rule, in the metric of the preconditioner W = M^T Q M + R:
    x_{k+1} = proj_X^W( x_k - alpha_k W^{-1} g_hat_k(x_k) )
with g_hat the measurement-based gradient estimate.  The per-step contraction
factor ||I - alpha W^{-1}(M^T Q H + R)||_W certifies geometric decay whenever
alpha < 2 / (1 + w*gamma), where w = ||W^{-1} M^T Q M||_W and gamma bounds the
multiplicative uncertainty in the W norm.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .cost import QuadCost, model_grad
from .linalg import BoxSet, SpdMatrix, spectral_norm, weighted_project

PHI_LOG_SPACE_THRESHOLD = 1e-8
REG_RHO_START = 1e-6
REG_MAX_DOUBLINGS = 200


class StepSizeError(ValueError):
    """Step-size schedule outside the contraction range."""


class UncertaintyBudgetError(ValueError):
    """w * gamma >= 1: the uncertainty is too large for any valid step size."""


def preconditioner(m, q: SpdMatrix, r) -> SpdMatrix:
    """W = M^T Q M + R; raises if the result is not SPD."""
    m = np.asarray(m, dtype=float)
    r = np.asarray(r, dtype=float)
    w = m.T @ (q.mat @ m) + r
    return SpdMatrix(0.5 * (w + w.T))


def w_factor(w: SpdMatrix, m, q: SpdMatrix):
    """w = ||W^{-1} M^T Q M||_W, the preconditioned model-curvature gain.

    Equals the largest eigenvalue of the symmetric W^{-1/2} M^T Q M W^{-1/2},
    so it is computed by eigvalsh rather than a general SVD.
    """
    m = np.asarray(m, dtype=float)
    g = m.T @ (q.mat @ m)
    s = w.inv_sqrt @ g @ w.inv_sqrt
    return float(np.linalg.eigvalsh(0.5 * (s + s.T))[-1])


def max_step(w, gamma):
    """Upper end 2 / (1 + w*gamma) of the valid step-size range."""
    if w < 0 or gamma < 0:
        raise ValueError(f"w and gamma must be nonnegative, got w={w}, gamma={gamma}")
    if w * gamma >= 1.0:
        raise UncertaintyBudgetError(
            f"w * gamma = {w * gamma:.6f} >= 1: no step size contracts"
        )
    return 2.0 / (1.0 + w * gamma)


def choose_regularization(m, q: SpdMatrix, gamma, margin, rho_start=REG_RHO_START):
    """Smallest rho (by doubling from rho_start) with w(rho) * gamma <= margin.

    Increasing rho never increases w, so doubling terminates whenever the
    margin is achievable; a cap guards the degenerate margin <= 0 case.
    """
    if not 0 < margin < 1:
        raise ValueError(f"margin must be in (0, 1), got {margin}")
    m = np.asarray(m, dtype=float)
    n = m.shape[1]
    rho = float(rho_start)
    for _ in range(REG_MAX_DOUBLINGS):
        w = preconditioner(m, q, rho * np.eye(n))
        if w_factor(w, m, q) * gamma <= margin:
            return rho
        rho *= 2.0
    raise StepSizeError(
        f"no rho <= {rho:.3e} achieves w * gamma <= {margin} (gamma={gamma})"
    )


@dataclass(frozen=True)
class StepSchedule:
    """Polynomially decaying step size alpha_k = alpha0 * k^(-decay)."""

    alpha0: float
    decay: float = 0.0

    def __post_init__(self):
        if self.alpha0 <= 0:
            raise StepSizeError(f"alpha0 must be > 0, got {self.alpha0}")
        if not 0.0 <= self.decay < 1.0:
            raise StepSizeError(f"decay must lie in [0, 1), got {self.decay}")

    @classmethod
    def validated(cls, alpha0, decay, w, gamma):
        """Construct and check alpha0 against the contraction range for (w, gamma)."""
        limit = max_step(w, gamma)
        if not 0.0 < alpha0 < limit:
            raise StepSizeError(
                f"alpha0 = {alpha0:.6f} outside (0, {limit:.6f}) for "
                f"w = {w:.6f}, gamma = {gamma:.6f}"
            )
        return cls(alpha0, decay)

    def alpha(self, k):
        """Step size at iteration k (1-based)."""
        if k < 1:
            raise StepSizeError(f"iteration index must be >= 1, got {k}")
        return self.alpha0 * float(k) ** (-self.decay)


@dataclass(frozen=True)
class ControllerState:
    """Controller memory between iterations.

    W stays frozen for the whole run (in adaptive mode it is built from the
    first model/regularizer pair); `model` and `reg` are what the gradient
    estimate uses and are the only fields adaptation may replace.
    """

    x: np.ndarray
    k: int
    w: SpdMatrix
    model: np.ndarray
    reg: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        object.__setattr__(self, "x", x)
        if x.shape != (self.w.n,):
            raise ValueError(f"state dim {x.shape} does not match W (n={self.w.n})")
        self.x.flags.writeable = False


def _estimate_gradient(state: ControllerState, q: SpdMatrix, reference, y_measured):
    dev = q.mat @ (np.asarray(y_measured, dtype=float) - reference)
    return state.model.T @ dev + state.reg @ state.x


def pogd_step(state: ControllerState, alpha_k, y_measured, cost: QuadCost,
              box: BoxSet) -> ControllerState:
    """One projected, preconditioned gradient step from a measured output.

    Uses the controller's own model/regularizer (equal to the cost's nominal
    pair outside adaptive mode, where this reduces to model_grad).
    """
    if alpha_k <= 0:
        raise StepSizeError(f"step size must be > 0, got {alpha_k}")
    grad = _estimate_gradient(state, cost.output_weight, cost.reference, y_measured)
    target = state.x - alpha_k * state.w.solve(grad)
    x_new = weighted_project(target, box, state.w)
    return replace(state, x=x_new, k=state.k + 1)


def classic_ilc_step(state: ControllerState, alpha, y_measured, cost: QuadCost,
                     box: BoxSet) -> ControllerState:
    """Iteration-invariant learning step: same arithmetic as pogd_step.

    Kept as its own entry point because the fixed-cost setting has its own
    regret bound (geometric convergence to the fixed point of the update map).
    """
    return pogd_step(state, alpha, y_measured, cost, box)


def contraction_factor(alpha, w: SpdMatrix, m, q: SpdMatrix, h, r):
    """phi = ||I - alpha W^{-1} (M^T Q H + R)||_W for one realized plant H."""
    m = np.asarray(m, dtype=float)
    h = np.asarray(h, dtype=float)
    r = np.asarray(r, dtype=float)
    k_op = m.T @ (q.mat @ h) + r
    b = w.inv_sqrt @ k_op @ w.inv_sqrt
    return spectral_norm(np.eye(w.n) - alpha * b)


def phi_products(phis):
    """Running products Phi_{1,k} = phi_1 * ... * phi_k for k = 1..T.

    Uses log-space accumulation when any factor is positive but below
    PHI_LOG_SPACE_THRESHOLD, so long horizons cannot underflow pairwise
    products; exact zeros fall back to the direct product (log undefined).
    """
    phis = np.asarray(phis, dtype=float)
    if np.any(phis < 0):
        raise ValueError("contraction factors must be nonnegative")
    if phis.size and np.all(phis > 0) and np.min(phis) < PHI_LOG_SPACE_THRESHOLD:
        return np.exp(np.cumsum(np.log(phis)))
    return np.cumprod(phis)


def window_products(phis):
    """Full table Phi_{j,k} = prod_{i=j..k} phi_i (1 for j > k), small T only.

    Used by the audit oracle that cross-checks the linear-time recursions; the
    table is quadratic in T so production paths never touch it.
    """
    phis = np.asarray(phis, dtype=float)
    t = phis.size
    table = np.ones((t + 1, t + 1))
    for j in range(t):
        acc = 1.0
        for k in range(j, t):
            acc *= phis[k]
            table[j + 1, k + 1] = acc
    return table


# ---------------------------------------------------------------------------
# Adaptive mode: the model/regularizer pair is refreshed every iteration while
# W stays frozen at its initial value.  The regularizer update keeps the
# effective curvature equal to W up to the uncertainty term:
#     R_k = W - M_k^T Q M_k   =>   M_k^T Q H + R_k = W + M_k^T Q M_k Delta_k.
# The historical form W - M_k^T M_k (no Q) is selectable; it loses that
# identity and R_k may be indefinite either way, which callers should flag.
# ---------------------------------------------------------------------------

RK_FORM_WITH_Q = "with-q"
RK_FORM_LITERAL = "literal"


def adaptive_regularizer(w: SpdMatrix, model_k, q: SpdMatrix, form=RK_FORM_WITH_Q):
    model_k = np.asarray(model_k, dtype=float)
    if form == RK_FORM_WITH_Q:
        reg = w.mat - model_k.T @ (q.mat @ model_k)
    elif form == RK_FORM_LITERAL:
        reg = w.mat - model_k.T @ model_k
    else:
        raise ValueError(f"unknown adaptive regularizer form {form!r}")
    return 0.5 * (reg + reg.T)


def emulated_model(h, gamma_k, direction_diag):
    """Model estimate M_k solving H = M_k (I + Delta_k) for Delta_k = gamma_k * D.

    direction_diag is the fixed unit-weighted-norm diagonal of the emulated
    identification error; entries of gamma_k * D stay in (-1, 1) so the solve
    is a plain column rescale of H.
    """
    d = gamma_k * np.asarray(direction_diag, dtype=float)
    if np.any(np.abs(d) >= 1.0):
        raise UncertaintyBudgetError(
            "emulated uncertainty has a diagonal entry with |d| >= 1")
    return np.asarray(h, dtype=float) / (1.0 + d)[np.newaxis, :], np.diag(d)


def adaptive_step(state: ControllerState, alpha0, y_measured, cost: QuadCost,
                  box: BoxSet, model_k, gamma_k, *, rk_form=RK_FORM_WITH_Q):
    """POGD step with the refreshed model pair (M_k, R_k) and constant alpha0.

    Returns (new_state, info) where info records w_k = ||W^{-1} M_k^T Q M_k||_W
    and the smallest eigenvalue of R_k.  Raises UncertaintyBudgetError when
    w_k * gamma_k >= 1, since no constant step contracts past that point.
    """
    q = cost.output_weight
    w_k = w_factor(state.w, model_k, q)
    if w_k * gamma_k >= 1.0:
        raise UncertaintyBudgetError(
            f"adaptive step at k={state.k}: w_k * gamma_k = {w_k * gamma_k:.6f} >= 1"
        )
    reg_k = adaptive_regularizer(state.w, model_k, q, rk_form)
    reg_min_eig = float(np.linalg.eigvalsh(reg_k)[0])
    staged = replace(state, model=np.asarray(model_k, dtype=float), reg=reg_k)
    new_state = pogd_step(staged, alpha0, y_measured, cost, box)
    return new_state, {"w_k": w_k, "reg_min_eig": reg_min_eig, "reg": reg_k}
