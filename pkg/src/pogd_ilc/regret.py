"""Regret accounting and analytic bound evaluation for online gradient ILC.

All per-run quantities live in a RegretTrace whose rows follow one indexing
convention: row k (1-based) describes iterate k, and the transition columns
(alpha, phi, sigma, e) describe the step that produced iterate k from iterate
k-1.  Row 1 therefore carries sentinels (alpha = sigma = e = 0, phi = 1),
which makes the cumulative bound formulas cover the initial iterate's regret
term without special cases:

    J_d(T) <= Lbar(T) * [ delta * sum_k Phi_{1,k}
                          + sigma_bar(T) * sum_k A_k
                          + sum_k E_k ],
    Phi_{1,k} = prod_{i<=k} phi_i,   A_k = phi_k A_{k-1} + alpha_k,
    E_k = phi_k E_{k-1} + e_k.

The per-step inequality behind it,
    ||x_{k+1} - x*_{k+1}||_W <= phi_k ||x_k - x*_k||_W + alpha_k sigma_k + e_k,
is exact for the affine updates used here, so empirical traces must sit below
the evaluated bounds up to floating-point error.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.stats import qmc

from .controller import StepSchedule, window_products
from .cost import _solve_strictly_convex
from .linalg import BoxSet, SpdMatrix, weighted_vec_norm

BOUND_AUDIT_RTOL = 1e-9
LIPSCHITZ_SAFETY = 1.05
LIPSCHITZ_HALTON_POINTS = 1000

MODE_PER_ITERATION = "per-iteration"
MODE_FIXED_DRAW = "fixed-draw"
MODE_ADAPTIVE = "adaptive"
MODES = (MODE_PER_ITERATION, MODE_FIXED_DRAW, MODE_ADAPTIVE)

BENCHMARK_FIXED = "fixed"
BENCHMARK_ADAPTED = "adapted"


class RegretError(ValueError):
    """Trace is missing data an operation needs, or inputs are out of range."""


def _as_vector(name, arr, length=None):
    arr = np.asarray(arr, dtype=float)
    if arr.ndim != 1:
        raise RegretError(f"{name} must be a 1-d array, got shape {arr.shape}")
    if length is not None and arr.size != length:
        raise RegretError(f"{name} has length {arr.size}, expected {length}")
    return arr


@dataclass
class RegretTrace:
    """Per-iteration record of one run plus the context to rebuild its costs.

    Context fields (w, q, reference, nominal, ...) are optional so that
    synthetic traces can exercise the pure bound formulas; operations that
    need the full cost structure raise RegretError naming what is missing.
    """

    cost_played: np.ndarray
    cost_opt: np.ndarray
    alpha: np.ndarray
    phi: np.ndarray
    sigma: np.ndarray
    e: np.ndarray
    lipschitz: np.ndarray
    tracking_rms: np.ndarray
    xs: Optional[np.ndarray] = None
    x_opts: Optional[np.ndarray] = None
    w: Optional[SpdMatrix] = None
    q: Optional[SpdMatrix] = None
    reference: Optional[np.ndarray] = None
    nominal: Optional[np.ndarray] = None
    reg_base: Optional[np.ndarray] = None
    deltas: Optional[np.ndarray] = None
    structure: str = "diagonal"
    mode: str = MODE_FIXED_DRAW
    benchmark: str = BENCHMARK_FIXED
    rk_form: str = "with-q"
    schedule: Optional[StepSchedule] = None
    invariant: bool = False
    box_lower: Optional[np.ndarray] = None
    box_upper: Optional[np.ndarray] = None
    meta: dict = field(default_factory=dict)
    _hindsight_cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.cost_played = _as_vector("cost_played", self.cost_played)
        t = self.cost_played.size
        if t < 1:
            raise RegretError("trace must contain at least one iteration")
        for name in ("cost_opt", "alpha", "phi", "sigma", "e",
                     "lipschitz", "tracking_rms"):
            setattr(self, name, _as_vector(name, getattr(self, name), t))
        for name in ("alpha", "phi", "sigma", "e", "lipschitz"):
            arr = getattr(self, name)
            if not np.all(np.isfinite(arr)):
                raise RegretError(f"{name} contains non-finite entries")
            if np.any(arr < 0):
                raise RegretError(f"{name} contains negative entries")
        if self.xs is not None:
            self.xs = np.asarray(self.xs, dtype=float)
            if self.xs.shape[0] != t:
                raise RegretError("xs row count does not match the horizon")
        if self.x_opts is not None:
            self.x_opts = np.asarray(self.x_opts, dtype=float)
            if self.x_opts.shape[0] != t:
                raise RegretError("x_opts row count does not match the horizon")
        if self.mode not in MODES:
            raise RegretError(f"unknown uncertainty mode {self.mode!r}")

    @property
    def horizon(self):
        return self.cost_played.size

    @property
    def dim(self):
        if self.xs is None:
            raise RegretError("trace has no iterate data")
        return self.xs.shape[1]

    def box(self) -> BoxSet:
        if self.box_lower is None or self.box_upper is None:
            return BoxSet.unbounded(self.dim)
        return BoxSet(self.box_lower, self.box_upper)

    def require(self, *names):
        missing = [n for n in names if getattr(self, n) is None]
        if missing:
            raise RegretError(
                "trace is missing context needed here: " + ", ".join(missing)
            )


def _check_horizon(trace, t):
    if not 1 <= t <= trace.horizon:
        raise RegretError(
            f"T = {t} outside the recorded horizon 1..{trace.horizon}"
        )


# ---------------------------------------------------------------------------
# Measured regret
# ---------------------------------------------------------------------------

def dynamic_regret(trace: RegretTrace, t=None):
    """J_d(T) = sum_{k<=T} f_k(x_k) - f_k(x*_k); array over all T when t is None."""
    gaps = trace.cost_played - trace.cost_opt
    if not np.all(np.isfinite(gaps)):
        raise RegretError("per-iteration benchmark costs are missing or non-finite")
    series = np.cumsum(gaps)
    if t is None:
        return series
    _check_horizon(trace, t)
    return float(series[t - 1])


def static_regret(trace: RegretTrace, t=None):
    """J_s(T) against the best fixed input in hindsight for each horizon.

    Iteration-invariant runs share their benchmark with the hindsight
    problem, so J_s = J_d there and no extra solves happen.
    """
    if trace.invariant:
        return dynamic_regret(trace, t)
    horizons = range(1, trace.horizon + 1) if t is None else [t]
    if t is not None:
        _check_horizon(trace, t)
    _, opt_sums = hindsight_path(trace, list(horizons))
    played = np.cumsum(trace.cost_played)
    values = np.array([played[h - 1] - opt_sums[i]
                       for i, h in enumerate(horizons)])
    if t is None:
        return values
    return float(values[0])


# ---------------------------------------------------------------------------
# Cost reconstruction from the stored uncertainty realizations
# ---------------------------------------------------------------------------

def _adaptive_models(trace):
    """Model estimates M_k = H (I + Delta_k)^{-1} for adaptive traces (diag only)."""
    if trace.structure != "diagonal":
        raise RegretError("adaptive traces require diagonal uncertainty")
    scale = 1.0 + trace.deltas
    if np.any(np.abs(trace.deltas) >= 1.0):
        raise RegretError("adaptive trace has an uncertainty entry with |d| >= 1")
    return scale


def _cost_quadratics(trace):
    """Stacked (Hessian_k, linear_k) of every cost, regularizer included.

    f_k(x) = 0.5 x^T Hess_k x - lin_k . x + 0.5 r^T Q r.
    """
    trace.require("nominal", "q", "reference", "reg_base", "deltas")
    m = trace.nominal
    q = trace.q.mat
    r = trace.reference
    t, n = trace.horizon, m.shape[1]
    mtqr = m.T @ (q @ r)
    g = m.T @ (q @ m)
    if trace.mode == MODE_ADAPTIVE:
        # plant fixed at the nominal; only the benchmark regularizer can vary
        hess = np.broadcast_to(g, (t, n, n)).copy()
        lin = np.broadcast_to(mtqr, (t, n)).copy()
        if trace.benchmark == BENCHMARK_FIXED:
            hess += trace.reg_base
        else:
            from .controller import adaptive_regularizer
            scale = _adaptive_models(trace)
            for k in range(t):
                model_k = m / scale[k][np.newaxis, :]
                hess[k] += adaptive_regularizer(trace.w, model_k, trace.q,
                                                trace.rk_form)
        return hess, lin
    if trace.structure == "diagonal":
        u = 1.0 + trace.deltas
        hess = g[np.newaxis, :, :] * u[:, :, np.newaxis] * u[:, np.newaxis, :]
        hess += trace.reg_base[np.newaxis, :, :]
        lin = u * mtqr[np.newaxis, :]
        return hess, lin
    hess = np.empty((t, n, n))
    lin = np.empty((t, n))
    eye = np.eye(n)
    for k in range(t):
        s = eye + trace.deltas[k]
        hess[k] = s.T @ g @ s + trace.reg_base
        lin[k] = s.T @ mtqr
    return hess, lin


def hindsight_path(trace: RegretTrace, horizons):
    """Best fixed inputs x*_T for the requested horizons, warm-started in T.

    Returns (points, opt_cost_sums) where opt_cost_sums[i] is
    sum_{k<=T_i} f_k(x*_{T_i}).
    """
    trace.require("q", "reference")
    horizons = sorted(set(int(h) for h in horizons))
    if not horizons or horizons[0] < 1 or horizons[-1] > trace.horizon:
        raise RegretError("hindsight horizons outside the recorded range")
    fresh = [h for h in horizons if h not in trace._hindsight_cache]
    if fresh:
        hess, lin = _cost_quadratics(trace)
        c0 = 0.5 * float(trace.reference @ (trace.q.mat @ trace.reference))
        box = trace.box()
        hess_cum = np.zeros_like(hess[0])
        lin_cum = np.zeros_like(lin[0])
        done = 0
        x0 = None
        for horizon in fresh:
            while done < horizon:
                hess_cum += hess[done]
                lin_cum += lin[done]
                done += 1
            x = _solve_strictly_convex(hess_cum, lin_cum, box, x0,
                                       what=f"hindsight optimum at T={horizon}")
            opt_sum = 0.5 * x @ (hess_cum @ x) - lin_cum @ x + horizon * c0
            trace._hindsight_cache[horizon] = (x, float(opt_sum))
            x0 = x
    points = np.stack([trace._hindsight_cache[h][0] for h in horizons])
    sums = np.array([trace._hindsight_cache[h][1] for h in horizons])
    return points, sums


def controller_gradients_at(trace: RegretTrace, x):
    """Controller gradient estimates evaluated at a fixed point x.

    Row k holds the gradient the transition into iterate k used (the
    operator of step k-1); row 1 is a zero sentinel.  These feed the
    hindsight-regret bound, where the residual gradient at the comparator
    plays the role the mismatch term plays in the dynamic bound.
    """
    trace.require("nominal", "q", "reference", "reg_base", "deltas", "w")
    x = np.asarray(x, dtype=float)
    m = trace.nominal
    q = trace.q.mat
    r = trace.reference
    t, n = trace.horizon, m.shape[1]
    grads = np.zeros((t, n))
    if trace.mode == MODE_ADAPTIVE:
        from .controller import RK_FORM_WITH_Q
        scale = _adaptive_models(trace)
        u = q @ (m @ x - r)
        htu = m.T @ u
        wx = trace.w.mat @ x
        rows = x[np.newaxis, :] / scale
        if trace.rk_form == RK_FORM_WITH_Q:
            g2 = m.T @ (q @ m)
        else:
            g2 = m.T @ m
        mm_x = (rows @ g2.T) / scale
        per = htu[np.newaxis, :] / scale + (wx[np.newaxis, :] - mm_x)
        grads[1:] = per[:-1]
        return grads
    base = m.T @ (q @ (m @ x - r)) + trace.reg_base @ x
    if trace.structure == "diagonal":
        g = m.T @ (q @ m)
        extra = (trace.deltas * x[np.newaxis, :]) @ g.T
        per = base[np.newaxis, :] + extra
    else:
        per = np.empty((t, n))
        for k in range(t):
            per[k] = base + m.T @ (q @ (m @ (trace.deltas[k] @ x)))
    grads[1:] = per[:-1]
    return grads


# ---------------------------------------------------------------------------
# Bound machinery
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BoundSums:
    """Exact linear-time recursions underlying every cumulative bound."""

    products: np.ndarray        # Phi_{1,k}
    sum_products: np.ndarray    # sum_{k'<=k} Phi_{1,k'}
    step: np.ndarray            # A_k = sum_j alpha_j Phi_{j+1,k}
    sum_step: np.ndarray
    drift: np.ndarray           # E_k = sum_j e_j Phi_{j+1,k}
    sum_drift: np.ndarray
    mismatch_step: np.ndarray   # sum_j alpha_j sigma_j Phi_{j+1,k}
    sum_mismatch_step: np.ndarray


def cumulative_bound_sums(phi, alpha, sigma=None, e=None) -> BoundSums:
    phi = _as_vector("phi", phi)
    t = phi.size
    alpha = _as_vector("alpha", alpha, t)
    sigma = np.zeros(t) if sigma is None else _as_vector("sigma", sigma, t)
    e = np.zeros(t) if e is None else _as_vector("e", e, t)
    products = np.cumprod(phi)
    step = np.empty(t)
    drift = np.empty(t)
    mism = np.empty(t)
    a = d = s = 0.0
    for k in range(t):
        a = phi[k] * a + alpha[k]
        d = phi[k] * d + e[k]
        s = phi[k] * s + alpha[k] * sigma[k]
        step[k] = a
        drift[k] = d
        mism[k] = s
    return BoundSums(products, np.cumsum(products), step, np.cumsum(step),
                     drift, np.cumsum(drift), mism, np.cumsum(mism))


def regret_bound_terms(phi, alpha, delta, lipschitz_bar, sigma_bar, e=None):
    """Evaluate the three-term cumulative bound from raw arrays and scalars.

    Returns (term1, term2, term3, total) at the final horizon.  Exposed
    separately so hand-unrolled cases can pin the formulas without building
    a trace.
    """
    if delta < 0 or lipschitz_bar < 0 or sigma_bar < 0:
        raise RegretError("bound constants must be nonnegative")
    sums = cumulative_bound_sums(phi, alpha, None, e)
    term1 = lipschitz_bar * delta * sums.sum_products[-1]
    term2 = lipschitz_bar * sigma_bar * sums.sum_step[-1]
    term3 = lipschitz_bar * sums.sum_drift[-1]
    return term1, term2, term3, term1 + term2 + term3


@dataclass(frozen=True)
class BoundSeries:
    """Dynamic-regret bound components for every horizon 1..T."""

    term1: np.ndarray
    term2: np.ndarray
    term3: np.ndarray
    total: np.ndarray
    sums: BoundSums
    lipschitz_running: np.ndarray
    sigma_running: np.ndarray
    delta: float


def dynamic_regret_bound(trace: RegretTrace, t=None):
    """Cumulative upper bound on J_d with its three components.

    With t given, returns the tuple (term1, term2, term3, total) at that
    horizon; otherwise the full BoundSeries.  Running maxima of the sampled
    Lipschitz bounds and measured mismatch magnitudes keep each prefix a
    self-contained bound.
    """
    trace.require("xs", "x_opts", "w")
    delta = weighted_vec_norm(trace.xs[0] - trace.x_opts[0], trace.w)
    sums = cumulative_bound_sums(trace.phi, trace.alpha, trace.sigma, trace.e)
    lbar = np.maximum.accumulate(trace.lipschitz)
    sbar = np.maximum.accumulate(trace.sigma)
    term1 = lbar * delta * sums.sum_products
    term2 = lbar * sbar * sums.sum_step
    term3 = lbar * sums.sum_drift
    series = BoundSeries(term1, term2, term3, term1 + term2 + term3,
                         sums, lbar, sbar, float(delta))
    if t is None:
        return series
    _check_horizon(trace, t)
    i = t - 1
    return (float(term1[i]), float(term2[i]), float(term3[i]),
            float(series.total[i]))


def average_dynamic_regret(trace: RegretTrace, t=None):
    """J_d(T)/T plus drift-free diagnostics for trend inspection.

    Requires the recorded power-law step schedule; the averages are the
    quantities whose boundedness the constant-term analysis asserts, with
    (J_d - term3)/T isolating the part not caused by benchmark drift.
    """
    if trace.schedule is None:
        raise RegretError(
            "average regret needs the power-law step schedule recorded on the trace"
        )
    series = dynamic_regret(trace, None)
    bounds = dynamic_regret_bound(trace, None)
    ks = np.arange(1, trace.horizon + 1, dtype=float)
    result = {
        "average": series / ks,
        "drift_free_average": (series - bounds.term3) / ks,
        "term2_over_t": bounds.term2 / ks,
    }
    if t is None:
        return result
    _check_horizon(trace, t)
    return {key: float(val[t - 1]) for key, val in result.items()}


def geometric_double_sum_bound(a, ratio):
    """S = sum_k sum_{j<=k} ratio^(k-j) a_j and its closed-form cap.

    For nonnegative a and ratio in (0, 1), S <= sum(a) / (1 - ratio).
    Returns (S, bound).
    """
    a = _as_vector("a", a)
    if np.any(a < 0):
        raise RegretError("sequence entries must be nonnegative")
    if not 0.0 < ratio < 1.0:
        raise RegretError(f"ratio must lie in (0, 1), got {ratio}")
    total = 0.0
    inner = 0.0
    for value in a:
        inner = ratio * inner + value
        total += inner
    return float(total), float(a.sum() / (1.0 - ratio))


def invariant_regret_bound(t, lipschitz_bar, delta, sigma, alpha0, phi):
    """Closed-form regret cap for iteration-invariant runs.

    J(T) <= Lbar (delta + sigma alpha0 T) / (1 - phi); with sigma = 0 the cap
    is constant in T (geometric convergence to the benchmark).
    """
    if t < 1:
        raise RegretError(f"horizon must be >= 1, got {t}")
    if not 0.0 <= phi < 1.0:
        raise RegretError(f"contraction factor must lie in [0, 1), got {phi}")
    if min(lipschitz_bar, delta, sigma, alpha0) < 0:
        raise RegretError("bound constants must be nonnegative")
    return lipschitz_bar * (delta + sigma * alpha0 * t) / (1.0 - phi)


@dataclass(frozen=True)
class RecursionAudit:
    """Recursion-vs-direct-summation cross-check of the bound accumulators."""

    schedule_weighted: np.ndarray
    schedule_weighted_direct: np.ndarray
    mismatch_weighted: np.ndarray
    mismatch_weighted_direct: np.ndarray
    max_rel_error: float
    ok: bool


def audit_bound_recursions(trace: RegretTrace) -> RecursionAudit:
    """Rebuild the step-weighted sums two ways and compare to 1e-9 relative.

    S_i = sum_{j<=i} j^(-c) Phi_{j+1,i} over transitions i (trace rows 2..T),
    computed by the linear recursion S_{i+1} = phi_{i+1} S_i + (i+1)^(-c) and
    independently by brute-force windowed products (quadratic, audit only).
    The mismatch-weighted variant replaces j^(-c) with the measured sigma_j.
    """
    if trace.schedule is None:
        raise RegretError("audit needs the recorded step schedule for its weights")
    phis = trace.phi[1:]
    sigmas = trace.sigma[1:]
    t = phis.size
    if t == 0:
        return RecursionAudit(np.empty(0), np.empty(0), np.empty(0),
                              np.empty(0), 0.0, True)
    weights = np.arange(1, t + 1, dtype=float) ** (-trace.schedule.decay)
    s_rec = np.empty(t)
    st_rec = np.empty(t)
    s = st = 0.0
    for i in range(t):
        s = phis[i] * s + weights[i]
        st = phis[i] * st + sigmas[i]
        s_rec[i] = s
        st_rec[i] = st
    table = window_products(phis)
    s_direct = np.empty(t)
    st_direct = np.empty(t)
    for i in range(1, t + 1):
        # Phi_{j+1, i} for j = 1..i; the j = i term is the empty product
        window = np.append(table[2:i + 1, i], 1.0)
        s_direct[i - 1] = weights[:i] @ window
        st_direct[i - 1] = sigmas[:i] @ window
    scale = np.maximum(np.abs(s_direct), 1.0)
    scale_t = np.maximum(np.abs(st_direct), 1.0)
    err = max(np.max(np.abs(s_rec - s_direct) / scale),
              np.max(np.abs(st_rec - st_direct) / scale_t))
    return RecursionAudit(s_rec, s_direct, st_rec, st_direct, float(err),
                          bool(err <= BOUND_AUDIT_RTOL))


@dataclass(frozen=True)
class StaticBoundSeries:
    term1: np.ndarray
    term2: np.ndarray
    total: np.ndarray
    delta_star: np.ndarray
    eta_bar: np.ndarray


def static_regret_bound(trace: RegretTrace, t=None):
    """Cumulative upper bound on J_s per horizon.

    Same structure as the dynamic bound with the benchmark-drift term absent:
    the comparator is fixed per horizon, so the mismatch role is played by
    eta_k = ||W^{-1/2} g_hat_k(x*_T)||_2, the controller gradient left at the
    hindsight point.  Scalar total when t is given, else a StaticBoundSeries.
    """
    trace.require("xs", "w")
    horizons = list(range(1, trace.horizon + 1)) if t is None else [t]
    if t is not None:
        _check_horizon(trace, t)
    if trace.invariant:
        trace.require("x_opts")
        points = np.repeat(trace.x_opts[:1], len(horizons), axis=0)
    else:
        points, _ = hindsight_path(trace, horizons)
    sums = cumulative_bound_sums(trace.phi, trace.alpha, trace.sigma, trace.e)
    lbar = np.maximum.accumulate(trace.lipschitz)
    term1 = np.empty(len(horizons))
    term2 = np.empty(len(horizons))
    delta_star = np.empty(len(horizons))
    eta_bar = np.empty(len(horizons))
    cached_etas = None
    for i, horizon in enumerate(horizons):
        x_star = points[i]
        if trace.invariant:
            if cached_etas is None:
                cached_etas = np.linalg.norm(
                    controller_gradients_at(trace, x_star) @ trace.w.inv_sqrt,
                    axis=1)
            etas = cached_etas
        else:
            etas = np.linalg.norm(
                controller_gradients_at(trace, x_star) @ trace.w.inv_sqrt,
                axis=1)
        delta_star[i] = weighted_vec_norm(trace.xs[0] - x_star, trace.w)
        eta_bar[i] = etas[:horizon].max()
        j = horizon - 1
        term1[i] = lbar[j] * delta_star[i] * sums.sum_products[j]
        term2[i] = lbar[j] * eta_bar[i] * sums.sum_step[j]
    series = StaticBoundSeries(term1, term2, term1 + term2, delta_star, eta_bar)
    if t is None:
        return series
    return float(series.total[0])


# ---------------------------------------------------------------------------
# Measured constants
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EmpiricalConstants:
    """Measured counterparts of the quantities the bounds assume."""

    lipschitz_bar: float
    sigma: np.ndarray
    e: np.ndarray
    eta: np.ndarray


def empirical_constants(trace: RegretTrace) -> EmpiricalConstants:
    """Lbar, the mismatch series, the benchmark drift series, and the
    controller gradient norms at the full-horizon hindsight point."""
    if trace.invariant:
        trace.require("x_opts")
        x_star = trace.x_opts[0]
    else:
        points, _ = hindsight_path(trace, [trace.horizon])
        x_star = points[0]
    eta = np.linalg.norm(controller_gradients_at(trace, x_star) @ trace.w.inv_sqrt,
                         axis=1)
    return EmpiricalConstants(float(trace.lipschitz.max()), trace.sigma.copy(),
                              trace.e.copy(), eta)


def halton_box_points(lower, upper, count=LIPSCHITZ_HALTON_POINTS):
    """Low-discrepancy sample of a finite box, corners included."""
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    if not (np.all(np.isfinite(lower)) and np.all(np.isfinite(upper))):
        raise RegretError("Lipschitz sampling needs a finite box")
    unit = qmc.Halton(d=lower.size, scramble=False).random(count)
    points = lower + unit * (upper - lower)
    return np.vstack([points, lower, upper])


def lipschitz_bound(plant, reg, q: SpdMatrix, reference, w: SpdMatrix, points,
                    safety=LIPSCHITZ_SAFETY):
    """Sampled bound on the W-dual gradient norm of one quadratic cost.

    max over the sample of ||W^{-1/2} grad f(x)||_2, inflated by the safety
    factor.  A sampled maximum, reported as such; callers include every
    visited iterate in the sample so the pointwise inequalities the regret
    chain needs hold by construction.
    """
    plant = np.asarray(plant, dtype=float)
    points = np.asarray(points, dtype=float)
    dev = points @ plant.T - reference[np.newaxis, :]
    grads = dev @ (q.mat @ plant) + points @ reg
    dual = grads @ w.inv_sqrt
    return safety * float(np.sqrt(np.max(np.sum(dual * dual, axis=1))))
