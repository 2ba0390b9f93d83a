"""Experiment configuration, the simulation loop, sweeps, and persistence.

A run is: realize the uncertain plant for iteration k, apply the current
input trajectory, measure the full output, take one preconditioned projected
gradient step, solve the per-iteration benchmark, and log everything the
regret bounds consume.  Runs are deterministic per seed (counter-based
Philox streams, uncertainty drawn up front) and emit one CSV row per
iteration plus a metadata JSON when an output directory is given.
"""

from __future__ import annotations

import json
import re
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

import numpy as np

from .controller import (
    RK_FORM_LITERAL,
    RK_FORM_WITH_Q,
    ControllerState,
    StepSchedule,
    StepSizeError,
    adaptive_regularizer,
    adaptive_step,
    choose_regularization,
    contraction_factor,
    emulated_model,
    max_step,
    pogd_step,
    preconditioner,
    w_factor,
)
from .cost import QuadCost, eval_cost, solve_optimal, true_grad, build_reference
from .linalg import BoxSet, SpdMatrix, spectral_norm
from .model import (
    LiftedModel,
    default_standin,
    lift,
    load_state_space,
    sample_uncertainty,
    synth_standin_model,
)
from .regret import (
    BENCHMARK_ADAPTED,
    BENCHMARK_FIXED,
    MODE_ADAPTIVE,
    MODE_FIXED_DRAW,
    MODE_PER_ITERATION,
    MODES,
    RegretTrace,
    dynamic_regret,
    dynamic_regret_bound,
    halton_box_points,
    lipschitz_bound,
    static_regret,
)

SCHEMA_VERSION = 1
CSV_COLUMNS = (
    "k", "alpha", "phi", "cost", "cost_opt", "dyn_regret", "static_regret",
    "term1", "term2", "term3", "sigma", "e", "tracking_rms",
)

DEFAULT_LOW_WATT = 75.0
DEFAULT_HIGH_WATT = 165.0
DEFAULT_SWEEP_DECAYS = (0.0, 0.25, 0.5)
AUTO_ALPHA_FRACTION = 0.9        # alpha0 = fraction * max_step when "auto"
UNBOUNDED_SAMPLE_PAD = 0.1       # bounding-box pad for Lipschitz sampling
REG_INDEFINITE_TOL = 1e-12


class ConfigError(ValueError):
    """Configuration violates a structural constraint or a bound hypothesis."""


class RunAborted(RuntimeError):
    """A module error stopped the simulation loop."""

    def __init__(self, iteration, cause):
        super().__init__(f"run aborted at iteration {iteration}: {cause}")
        self.iteration = iteration


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a run needs; JSON round-trips through flat keys.

    horizon is the inner-time length N (inputs per trial); iterations is the
    trial count T.  box_lower/box_upper are scalar Watt limits applied to
    every input sample, or both None for an unconstrained run.  alpha0 and
    rho accept the string "auto" (0.9 * max_step and the smallest power-of-2
    multiple of 1e-6 meeting the margin, respectively).  gamma_decay only
    matters in adaptive mode: the emulated model-error budget follows
    gamma_k = gamma0 * k**-gamma_decay, except gamma_decay 0, which keeps a
    persistently wrong model (gamma_k = gamma0 at every iteration, the
    non-adaptive baseline on the same plant).
    """

    seed: int = 0
    horizon: int = 100
    iterations: int = 500
    box_lower: float | None = DEFAULT_LOW_WATT
    box_upper: float | None = DEFAULT_HIGH_WATT
    gamma0: float = 0.3
    mode: str = MODE_PER_ITERATION
    structure: str = "diagonal"
    alpha0: float | str = "auto"
    decay: float = 0.5
    gamma_decay: float = 0.5
    rho: float | str = "auto"
    margin: float = 0.9
    high_fraction: float = 0.9
    benchmark: str = BENCHMARK_FIXED
    rk_form: str = RK_FORM_WITH_Q
    model_seed: int = 0
    model_path: str | None = None
    label: str = "run"

    def __post_init__(self):
        if int(self.iterations) < 1:
            raise ConfigError("iterations must be >= 1")
        if int(self.horizon) < 1:
            raise ConfigError("horizon must be >= 1")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.structure not in ("diagonal", "full"):
            raise ConfigError(f"structure must be 'diagonal' or 'full', "
                              f"got {self.structure!r}")
        if self.mode == MODE_ADAPTIVE and self.structure != "diagonal":
            raise ConfigError("adaptive mode emulates a diagonal "
                              "identification error; structure must be 'diagonal'")
        if self.benchmark not in (BENCHMARK_FIXED, BENCHMARK_ADAPTED):
            raise ConfigError(f"benchmark must be 'fixed' or 'adapted', "
                              f"got {self.benchmark!r}")
        if self.rk_form not in (RK_FORM_WITH_Q, RK_FORM_LITERAL):
            raise ConfigError(f"rk_form must be '{RK_FORM_WITH_Q}' or "
                              f"'{RK_FORM_LITERAL}', got {self.rk_form!r}")
        if self.gamma0 < 0:
            raise ConfigError("gamma0 must be >= 0")
        if not 0.0 <= self.decay < 1.0:
            raise ConfigError("step decay c must lie in [0, 1)")
        if not 0.0 <= self.gamma_decay <= 1.0:
            raise ConfigError("gamma_decay must lie in [0, 1]")
        if not 0.0 < self.margin < 1.0:
            raise ConfigError("regularization margin must lie in (0, 1)")
        if not 0.0 < self.high_fraction <= 1.0:
            raise ConfigError("high_fraction must lie in (0, 1]")
        if (self.box_lower is None) != (self.box_upper is None):
            raise ConfigError("box_lower and box_upper must both be set or both null")
        if self.box_lower is not None and not self.box_lower < self.box_upper:
            raise ConfigError("box_lower must be strictly below box_upper")
        if self.alpha0 != "auto" and not float(self.alpha0) > 0:
            raise ConfigError("alpha0 must be positive or 'auto'")
        if self.rho != "auto" and not float(self.rho) > 0:
            raise ConfigError("rho must be positive or 'auto'")
        if not re.fullmatch(r"[A-Za-z0-9._-]+", self.label):
            raise ConfigError("label must be filename-safe "
                              "(letters, digits, dot, dash, underscore)")

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        return cls(**data)

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        with open(path, "r", encoding="utf-8") as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"config is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config JSON must be an object of flat keys")
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class RunSetup:
    """Validated, fully resolved environment for one run."""

    config: ExperimentConfig
    model: LiftedModel
    reference: np.ndarray
    box: BoxSet
    q: SpdMatrix
    rho: float
    reg: np.ndarray
    w: SpdMatrix
    w_gain: float
    step_limit: float
    schedule: StepSchedule
    dc_gain: float


def prepare(config: ExperimentConfig) -> RunSetup:
    """Resolve model, metric, and schedule; reject configs that break the
    contraction hypotheses, naming the violated condition."""
    if config.model_path is not None:
        ss = load_state_space(config.model_path)
    elif config.model_seed == 0:
        ss = default_standin()
    else:
        ss = synth_standin_model(config.model_seed)
    model = lift(ss, config.horizon)
    n = config.horizon
    if config.box_lower is None:
        box = BoxSet.unbounded(n)
        ref_lo, ref_hi = DEFAULT_LOW_WATT, DEFAULT_HIGH_WATT
    else:
        box = BoxSet.scalar_bounds(config.box_lower, config.box_upper, n)
        ref_lo, ref_hi = config.box_lower, config.box_upper
    reference = build_reference(ss.dc_gain, n, ref_lo, ref_hi,
                                config.high_fraction)
    q = SpdMatrix.identity(n)
    m = model.matrix
    if config.rho == "auto":
        try:
            rho = choose_regularization(m, q, config.gamma0, config.margin)
        except StepSizeError as exc:
            raise ConfigError(str(exc)) from exc
    else:
        rho = float(config.rho)
    reg = rho * np.eye(n)
    w = preconditioner(m, q, reg)
    w_gain = w_factor(w, m, q)
    if w_gain * config.gamma0 >= 1.0:
        raise ConfigError(
            f"w * gamma0 < 1 violated: w = {w_gain:.6f}, gamma0 = "
            f"{config.gamma0} gives w * gamma0 = {w_gain * config.gamma0:.6f}"
        )
    limit = max_step(w_gain, config.gamma0)
    alpha0 = (AUTO_ALPHA_FRACTION * limit if config.alpha0 == "auto"
              else float(config.alpha0))
    try:
        schedule = StepSchedule.validated(alpha0, config.decay, w_gain,
                                          config.gamma0)
    except StepSizeError as exc:
        raise ConfigError(str(exc)) from exc
    if config.mode == MODE_ADAPTIVE:
        g_peak = float(np.max(_gamma_schedule(config)))
        if g_peak >= 1.0:
            raise ConfigError(
                "adaptive uncertainty entries must stay below 1: largest "
                f"scheduled gamma_k = {g_peak:.3f} >= 1"
            )
    return RunSetup(config, model, reference, box, q, rho, reg, w, w_gain,
                    limit, schedule, ss.dc_gain)


def _gamma_schedule(config: ExperimentConfig) -> np.ndarray:
    """Model-error budget per iteration in adaptive mode.

    Shrinking schedules (gamma_decay > 0) zero the first entry: the initial
    estimate is exact, which keeps the committed metric W equal to the true
    curvature.  gamma_decay 0 keeps the full gamma0 error everywhere, the
    never-identifying baseline.
    """
    ks = np.arange(1, config.iterations + 1, dtype=float)
    gammas = config.gamma0 * ks ** -config.gamma_decay
    if config.gamma_decay > 0.0:
        gammas[0] = 0.0
    return gammas


def _draw_uncertainty(setup: RunSetup, rng):
    """Per-iteration uncertainty descriptors, drawn up front for determinism.

    Returns (deltas, direction) where deltas is (T, n) diagonal entries or
    (T, n, n) full matrices; direction is the fixed unit-W-norm diagonal used
    by adaptive mode (None otherwise).
    """
    cfg = setup.config
    t, n = cfg.iterations, cfg.horizon
    if cfg.mode == MODE_ADAPTIVE:
        draw = sample_uncertainty(1.0, setup.w, "diagonal", rng)
        if draw.weighted_norm == 0.0:
            raise RunAborted(1, "degenerate zero direction draw")
        direction = np.diagonal(draw.delta) / draw.weighted_norm
        gammas = _gamma_schedule(cfg)
        deltas = gammas[:, np.newaxis] * direction[np.newaxis, :]
        return deltas, direction
    if cfg.mode == MODE_FIXED_DRAW:
        draw = sample_uncertainty(cfg.gamma0, setup.w, cfg.structure, rng)
        one = (np.diagonal(draw.delta) if cfg.structure == "diagonal"
               else draw.delta)
        reps = (t, 1) if one.ndim == 1 else (t, 1, 1)
        return np.tile(one, reps), None
    rows = []
    for _ in range(t):
        draw = sample_uncertainty(cfg.gamma0, setup.w, cfg.structure, rng)
        rows.append(np.diagonal(draw.delta) if cfg.structure == "diagonal"
                    else draw.delta)
    return np.stack(rows), None


def _plant_matrix(setup: RunSetup, delta_row):
    """True lifted plant for one iteration from its uncertainty descriptor."""
    m = setup.model.matrix
    if setup.config.mode == MODE_ADAPTIVE:
        return m                      # adaptive mode varies the model, not the plant
    if delta_row.ndim == 1:
        return m * (1.0 + delta_row)[np.newaxis, :]
    return m + m @ delta_row


def _mismatch_magnitude(model_mat, reg_mat, cost: QuadCost, x_opt, w: SpdMatrix):
    """||W^{-1}(controller gradient - true gradient)||_W at the benchmark."""
    resid = cost.plant.matrix @ x_opt - cost.reference
    g_ctrl = model_mat.T @ (cost.output_weight.mat @ resid) + reg_mat @ x_opt
    gap = g_ctrl - true_grad(cost, x_opt)
    return float(np.linalg.norm(w.inv_sqrt @ gap))


def run_experiment(config: ExperimentConfig, out_dir=None) -> RegretTrace:
    """Simulate one run and return its trace; write CSV + metadata if out_dir.

    Any module error aborts with the failing iteration index (RunAborted).
    """
    setup = prepare(config)
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(config.seed)))
    t, n = config.iterations, config.horizon
    deltas, _ = _draw_uncertainty(setup, rng)
    gamma_sched = _gamma_schedule(config) if config.mode == MODE_ADAPTIVE else None
    invariant = (config.gamma0 == 0.0
                 or config.mode == MODE_FIXED_DRAW
                 or (config.mode == MODE_ADAPTIVE
                     and config.benchmark == BENCHMARK_FIXED))

    m = setup.model.matrix
    q = setup.q
    w = setup.w
    if setup.box.is_bounded:
        x1 = 0.5 * (setup.box.lower + setup.box.upper)
    else:
        x1 = np.zeros(n)
    state = ControllerState(x=x1, k=1, w=w, model=m, reg=setup.reg)

    cost_played = np.empty(t)
    cost_opt = np.empty(t)
    tracking = np.empty(t)
    xs = np.empty((t, n))
    x_opts = np.empty((t, n))
    alpha = np.zeros(t)
    phi = np.ones(t)
    sigma = np.zeros(t)
    e = np.zeros(t)
    indefinite_steps = 0

    shared_cost = None
    shared_opt = None
    op_cache = None       # W^{-1/2} (M^T Q H + R) W^{-1/2} when iteration-invariant
    phi_cache = None
    eye = np.eye(n)

    for k in range(1, t + 1):
        try:
            i = k - 1
            if invariant and shared_cost is not None:
                cost_k = shared_cost
            else:
                plant_k = LiftedModel(_plant_matrix(setup, deltas[i]), n)
                if config.mode == MODE_ADAPTIVE and config.benchmark == BENCHMARK_ADAPTED:
                    model_k, _ = emulated_model(m, 1.0, deltas[i])
                    bench_reg = adaptive_regularizer(w, model_k, q, config.rk_form)
                else:
                    bench_reg = setup.reg
                cost_k = QuadCost(plant_k, setup.model, setup.reference, q,
                                  bench_reg)
                if invariant:
                    shared_cost = cost_k
            x_k = state.x
            y_k = cost_k.plant.matrix @ x_k
            xs[i] = x_k
            cost_played[i] = eval_cost(cost_k, x_k)
            tracking[i] = float(np.sqrt(np.mean((y_k - setup.reference) ** 2)))
            if invariant and shared_opt is not None:
                x_opt = shared_opt
            else:
                warm = x_opts[i - 1] if i > 0 else None
                x_opt = solve_optimal(cost_k, setup.box, x0=warm)
                if invariant:
                    shared_opt = x_opt
            x_opts[i] = x_opt
            cost_opt[i] = eval_cost(cost_k, x_opt)

            if k == t:
                break
            alpha_k = setup.schedule.alpha(k)
            if config.mode == MODE_ADAPTIVE:
                # model estimate of this iteration; deltas[i] already carries
                # the gamma_k scale, so emulate with gamma = 1
                model_k, _ = emulated_model(m, 1.0, deltas[i])
                gamma_k = float(gamma_sched[i])
                state, info = adaptive_step(state, alpha_k, y_k, cost_k,
                                            setup.box, model_k, gamma_k,
                                            rk_form=config.rk_form)
                if info["reg_min_eig"] < -REG_INDEFINITE_TOL * w.lam_max:
                    indefinite_steps += 1
                sigma[i + 1] = _mismatch_magnitude(model_k, info["reg"],
                                                   cost_k, x_opt, w)
                phi[i + 1] = contraction_factor(alpha_k, w, model_k, q, m,
                                                info["reg"])
            else:
                sigma[i + 1] = _mismatch_magnitude(m, setup.reg, cost_k, x_opt, w)
                if op_cache is None or not invariant:
                    k_op = m.T @ (q.mat @ cost_k.plant.matrix) + setup.reg
                    op_cache = w.inv_sqrt @ k_op @ w.inv_sqrt
                if invariant and setup.schedule.decay == 0.0:
                    if phi_cache is None:
                        phi_cache = spectral_norm(eye - alpha_k * op_cache)
                    phi[i + 1] = phi_cache
                else:
                    phi[i + 1] = spectral_norm(eye - alpha_k * op_cache)
                state = pogd_step(state, alpha_k, y_k, cost_k, setup.box)
            alpha[i + 1] = alpha_k
        except RunAborted:
            raise
        except Exception as exc:
            raise RunAborted(k, exc) from exc

    if not invariant:
        drift = np.linalg.norm((x_opts[:-1] - x_opts[1:]) @ w.sqrt, axis=1)
        e[1:] = drift

    lower, upper = _sampling_box(setup, xs, x_opts)
    points = np.vstack([halton_box_points(lower, upper), xs, x_opts])
    lipschitz = np.empty(t)
    if invariant:
        lipschitz[:] = lipschitz_bound(shared_cost.plant.matrix,
                                       shared_cost.input_weight, q,
                                       setup.reference, w, points)
    else:
        for i in range(t):
            plant_i = _plant_matrix(setup, deltas[i])
            if config.mode == MODE_ADAPTIVE and config.benchmark == BENCHMARK_ADAPTED:
                model_i, _ = emulated_model(m, 1.0, deltas[i])
                reg_i = adaptive_regularizer(w, model_i, q, config.rk_form)
            else:
                reg_i = setup.reg
            lipschitz[i] = lipschitz_bound(plant_i, reg_i, q, setup.reference,
                                           w, points)

    trace = RegretTrace(
        cost_played=cost_played, cost_opt=cost_opt, alpha=alpha, phi=phi,
        sigma=sigma, e=e, lipschitz=lipschitz, tracking_rms=tracking,
        xs=xs, x_opts=x_opts, w=w, q=q, reference=setup.reference,
        nominal=m, reg_base=setup.reg, deltas=deltas,
        structure=config.structure, mode=config.mode,
        benchmark=config.benchmark, rk_form=config.rk_form,
        schedule=setup.schedule, invariant=invariant,
        box_lower=setup.box.lower if setup.box.is_bounded else None,
        box_upper=setup.box.upper if setup.box.is_bounded else None,
        meta={
            "seed": config.seed,
            "label": config.label,
            "rho": setup.rho,
            "w_gain": setup.w_gain,
            "w_gamma": setup.w_gain * config.gamma0,
            "max_step": setup.step_limit,
            "alpha0": setup.schedule.alpha0,
            "decay": setup.schedule.decay,
            "gamma_decay": config.gamma_decay,
            "dc_gain": setup.dc_gain,
            "indefinite_reg_steps": indefinite_steps,
            "sampling_box": [float(lower[0]), float(upper[0])]
            if np.ptp(lower) == 0 and np.ptp(upper) == 0
            else [lower.tolist(), upper.tolist()],
        },
    )
    if out_dir is not None:
        write_run(trace, config, out_dir)
    return trace


def _sampling_box(setup: RunSetup, xs, x_opts):
    """Finite box the Lipschitz sampler draws from."""
    if setup.box.is_bounded:
        return setup.box.lower.copy(), setup.box.upper.copy()
    stacked = np.vstack([xs, x_opts])
    lower = stacked.min(axis=0)
    upper = stacked.max(axis=0)
    span = np.maximum(upper - lower, 1.0)
    return lower - UNBOUNDED_SAMPLE_PAD * span, upper + UNBOUNDED_SAMPLE_PAD * span


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------

def _cell(value):
    return format(float(value), ".17g")


def write_trace_csv(trace: RegretTrace, path):
    """One row per iteration under the frozen column schema.

    Transition columns (alpha, phi, sigma, e) describe the step INTO row k;
    row 1 holds the sentinels (0, 1, 0, 0).  Bound columns are cumulative:
    row k states the bound for horizon T = k.
    """
    jd = dynamic_regret(trace, None)
    js = static_regret(trace, None)
    bounds = dynamic_regret_bound(trace, None)
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(CSV_COLUMNS) + "\n")
        for i in range(trace.horizon):
            row = (
                str(i + 1),
                _cell(trace.alpha[i]), _cell(trace.phi[i]),
                _cell(trace.cost_played[i]), _cell(trace.cost_opt[i]),
                _cell(jd[i]), _cell(js[i]),
                _cell(bounds.term1[i]), _cell(bounds.term2[i]),
                _cell(bounds.term3[i]),
                _cell(trace.sigma[i]), _cell(trace.e[i]),
                _cell(trace.tracking_rms[i]),
            )
            fh.write(",".join(row) + "\n")
    return path


def write_meta(trace: RegretTrace, path, config: ExperimentConfig):
    record = {
        "schema_version": SCHEMA_VERSION,
        "columns": list(CSV_COLUMNS),
        "config": config.to_dict(),
        "constants": {
            key: trace.meta[key]
            for key in ("rho", "w_gain", "w_gamma", "max_step", "alpha0",
                        "decay", "dc_gain")
        },
        "flags": {
            "invariant": trace.invariant,
            "indefinite_reg_steps": trace.meta["indefinite_reg_steps"],
        },
        "lipschitz_bar": float(trace.lipschitz.max()),
        "sampling_box": trace.meta["sampling_box"],
    }
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(record, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def write_run(trace: RegretTrace, config: ExperimentConfig, out_dir):
    """CSV + metadata pair for one run; returns their paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = write_trace_csv(trace, out / f"{config.label}.csv")
    meta_path = write_meta(trace, out / f"{config.label}_meta.json", config)
    return csv_path, meta_path


# ---------------------------------------------------------------------------
# Batch operations
# ---------------------------------------------------------------------------

def sweep_step_sizes(config: ExperimentConfig, decays=DEFAULT_SWEEP_DECAYS,
                     out_dir=None):
    """One run per step-decay value, all sharing the seed (and thus the
    uncertainty realizations).  Returns {decay: trace}; writes per-run CSVs
    plus a long-format comparison CSV when out_dir is given."""
    decays = list(decays)
    for c in decays:
        if not 0.0 <= c < 1.0:
            raise ConfigError(f"sweep decay {c} outside [0, 1)")
    traces = {}
    for c in decays:
        label = f"{config.label}_c{c:g}"
        cfg = replace(config, decay=c, label=label)
        traces[c] = run_experiment(cfg, out_dir=None)
        if out_dir is not None:
            write_run(traces[c], cfg, out_dir)
    if out_dir is not None:
        rows = []
        for c in decays:
            trace = traces[c]
            jd = dynamic_regret(trace, None)
            term3 = dynamic_regret_bound(trace, None).term3
            for i in range(trace.horizon):
                rows.append((f"c{c:g}", i + 1, jd[i], term3[i]))
        path = Path(out_dir) / f"{config.label}_sweep.csv"
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("label,k,dyn_regret,term3\n")
            for label, k, jd_k, t3 in rows:
                fh.write(f"{label},{k},{_cell(jd_k)},{_cell(t3)}\n")
    return traces


def final_outputs(trace: RegretTrace):
    """Measured output of the last iteration, rebuilt from the stored context."""
    trace.require("nominal", "xs", "deltas")
    x_last = trace.xs[-1]
    if trace.mode == MODE_ADAPTIVE:
        return trace.nominal @ x_last
    d = trace.deltas[-1]
    if d.ndim == 1:
        return trace.nominal @ (x_last * (1.0 + d))
    return trace.nominal @ (x_last + d @ x_last)


def compare_adaptive(config: ExperimentConfig, out_dir=None):
    """Matched-seed pair: adaptive (shrinking model error, constant step)
    versus non-adaptive (persistent gamma0 model error, diminishing step).

    Both arms drive the same plant with the same mismatch direction; only
    the gamma_k and alpha_k schedules differ, so the final tracking gap is
    attributable to adaptation alone.  Returns (adaptive_trace,
    nonadaptive_trace); writes both traces plus a final-iteration tracking
    CSV (t, reference, adaptive, nonadaptive).
    """
    nonadaptive_decay = config.decay if config.decay > 0 else 0.5
    gamma_decay = config.gamma_decay if config.gamma_decay > 0 else 0.5
    adaptive_cfg = replace(config, mode=MODE_ADAPTIVE, structure="diagonal",
                           decay=0.0, gamma_decay=gamma_decay,
                           benchmark=BENCHMARK_FIXED,
                           label=f"{config.label}_adaptive")
    nonadaptive_cfg = replace(config, mode=MODE_ADAPTIVE, structure="diagonal",
                              decay=nonadaptive_decay, gamma_decay=0.0,
                              benchmark=BENCHMARK_FIXED,
                              label=f"{config.label}_nonadaptive")
    adaptive_trace = run_experiment(adaptive_cfg)
    nonadaptive_trace = run_experiment(nonadaptive_cfg)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for trace, cfg in ((adaptive_trace, adaptive_cfg),
                           (nonadaptive_trace, nonadaptive_cfg)):
            write_run(trace, cfg, out)
        y_adaptive = final_outputs(adaptive_trace)
        y_nonadaptive = final_outputs(nonadaptive_trace)
        path = out / f"{config.label}_tracking.csv"
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("t,reference,adaptive,nonadaptive\n")
            for t_step in range(adaptive_trace.reference.size):
                fh.write(",".join((
                    str(t_step + 1),
                    _cell(adaptive_trace.reference[t_step]),
                    _cell(y_adaptive[t_step]),
                    _cell(y_nonadaptive[t_step]),
                )) + "\n")
    return adaptive_trace, nonadaptive_trace


def check_bounds(config: ExperimentConfig) -> dict:
    """Pre-flight certificate of the contraction hypotheses, no loop run.

    Returns {"values": ..., "checks": [(name, PASS/FAIL, detail), ...],
    "ok": bool}; failures are report content, not exceptions.
    """
    values = {}
    checks = []

    def check(name, passed, detail):
        checks.append({"name": name, "status": "PASS" if passed else "FAIL",
                       "detail": detail})

    try:
        if config.model_path is not None:
            ss = load_state_space(config.model_path)
        elif config.model_seed == 0:
            ss = default_standin()
        else:
            ss = synth_standin_model(config.model_seed)
        model = lift(ss, config.horizon)
        q = SpdMatrix.identity(config.horizon)
        m = model.matrix
    except Exception as exc:
        check("model construction", False, str(exc))
        return {"values": values, "checks": checks, "ok": False}

    if config.rho == "auto":
        try:
            rho = choose_regularization(m, q, config.gamma0, config.margin)
            check("auto regularization, w * gamma0 <= margin", True,
                  f"rho = {rho:.3e} meets margin {config.margin}")
        except StepSizeError as exc:
            check("auto regularization, w * gamma0 <= margin", False, str(exc))
            return {"values": values, "checks": checks, "ok": False}
    else:
        rho = float(config.rho)
    values["rho"] = rho
    w = preconditioner(m, q, rho * np.eye(config.horizon))
    w_gain = w_factor(w, m, q)
    values["w"] = w_gain
    values["gamma0"] = config.gamma0
    values["w_gamma"] = w_gain * config.gamma0
    hypothesis_ok = w_gain * config.gamma0 < 1.0
    check("w * gamma0 < 1", hypothesis_ok,
          f"w = {w_gain:.6f}, gamma0 = {config.gamma0}, "
          f"w * gamma0 = {w_gain * config.gamma0:.6f}")
    if hypothesis_ok:
        limit = max_step(w_gain, config.gamma0)
        values["max_step"] = limit
        alpha0 = (AUTO_ALPHA_FRACTION * limit if config.alpha0 == "auto"
                  else float(config.alpha0))
        values["alpha0"] = alpha0
        check("0 < alpha0 < 2 / (1 + w * gamma0)", 0.0 < alpha0 < limit,
              f"alpha0 = {alpha0:.6f}, max_step = {limit:.6f}")
    check("step decay c in [0, 1)", 0.0 <= config.decay < 1.0,
          f"c = {config.decay}")
    ok = all(c["status"] == "PASS" for c in checks)
    return {"values": values, "checks": checks, "ok": ok}


def format_bounds_report(report: dict) -> str:
    lines = []
    for key, value in report["values"].items():
        lines.append(f"{key:>10} = {value:.9g}" if isinstance(value, float)
                     else f"{key:>10} = {value}")
    for chk in report["checks"]:
        lines.append(f"[{chk['status']}] {chk['name']}  ({chk['detail']})")
    lines.append("hypotheses " + ("hold" if report["ok"] else "VIOLATED"))
    return "\n".join(lines)
