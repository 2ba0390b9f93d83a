"""Plant models: discrete LTI state space, lifted iteration-domain form,
multiplicative uncertainty sampling, and the committed stand-in process model.

Lifting convention: with zero initial state and inputs v(0..N-1), the stacked
outputs y(1..N) satisfy y = M v where M is lower-triangular Toeplitz with
M[i, j] = C A^{i-j} B for i >= j (so the diagonal is the first Markov
parameter CB).  M is invertible exactly when CB != 0.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .linalg import SpdMatrix, weighted_mat_norm


class ModelError(ValueError):
    """Invalid plant model or uncertainty draw."""


STABILITY_MARGIN = 1e-9          # spectral radius must stay below 1 - margin
CB_RTOL = 1e-12                  # |CB| floor relative to ||B|| ||C||
RANK_RTOL = 1e-10                # smallest/largest singular value floor
DRAW_NORM_SLACK = 1e-9           # tolerance on ||Delta||_W <= gamma


class StateSpace:
    """Strictly stable discrete-time SISO state-space model (no feedthrough)."""

    def __init__(self, a, b, c):
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float).reshape(-1, 1)
        c = np.asarray(c, dtype=float).reshape(1, -1)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ModelError(f"A must be square, got {a.shape}")
        n = a.shape[0]
        if b.shape != (n, 1) or c.shape != (1, n):
            raise ModelError(
                f"B/C shapes {b.shape}/{c.shape} inconsistent with A of order {n}"
            )
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b)) and np.all(np.isfinite(c))):
            raise ModelError("state-space matrices contain non-finite entries")
        radius = float(np.max(np.abs(np.linalg.eigvals(a))))
        if radius >= 1.0 - STABILITY_MARGIN:
            raise ModelError(f"unstable model: spectral radius {radius:.6f} >= 1")
        self.a, self.b, self.c = a, b, c
        self.spectral_radius = radius
        for arr in (self.a, self.b, self.c):
            arr.flags.writeable = False

    @property
    def order(self):
        return self.a.shape[0]

    @property
    def cb(self):
        """First Markov parameter C B (the lifted matrix diagonal)."""
        return (self.c @ self.b).item()

    @property
    def dc_gain(self):
        return (self.c @ np.linalg.solve(np.eye(self.order) - self.a, self.b)).item()

    def simulate(self, inputs):
        """Outputs y(1..N) from zero initial state for inputs v(0..N-1)."""
        inputs = np.asarray(inputs, dtype=float)
        state = np.zeros(self.order)
        out = np.empty(inputs.shape[0])
        for t, v in enumerate(inputs):
            state = self.a @ state + self.b[:, 0] * v
            out[t] = (self.c @ state).item()
        return out


class LiftedModel:
    """Iteration-domain input-output map y = M v over a finite horizon."""

    def __init__(self, matrix, horizon):
        matrix = np.asarray(matrix, dtype=float)
        if matrix.shape != (horizon, horizon):
            raise ModelError(f"lifted matrix shape {matrix.shape} != ({horizon}, {horizon})")
        if not np.all(np.isfinite(matrix)):
            raise ModelError("lifted matrix contains non-finite entries")
        svals = np.linalg.svd(matrix, compute_uv=False)
        if svals[-1] <= RANK_RTOL * svals[0]:
            raise ModelError(
                f"lifted matrix is rank deficient: sigma_min = {svals[-1]:.3e}, "
                f"sigma_max = {svals[0]:.3e}"
            )
        self.matrix = matrix
        self.horizon = horizon
        self.sigma_min = float(svals[-1])
        self.sigma_max = float(svals[0])
        self.matrix.flags.writeable = False

    def __repr__(self):
        return f"LiftedModel(horizon={self.horizon}, cond={self.sigma_max / self.sigma_min:.3e})"


def lift(ss: StateSpace, horizon: int) -> LiftedModel:
    """Build the lower-triangular Toeplitz lifted matrix from Markov parameters."""
    if horizon < 1:
        raise ModelError(f"horizon must be >= 1, got {horizon}")
    cb = ss.cb
    if abs(cb) <= CB_RTOL * max(1.0, float(np.linalg.norm(ss.b)) * float(np.linalg.norm(ss.c))):
        raise ModelError(
            "CB = 0: lifted matrix would be singular (relative-degree > 1 plant rejected)"
        )
    markov = np.empty(horizon)
    vec = ss.b[:, 0].copy()
    for i in range(horizon):
        markov[i] = (ss.c @ vec).item()
        vec = ss.a @ vec
    m = np.zeros((horizon, horizon))
    for j in range(horizon):
        m[j:, j] = markov[: horizon - j]
    return LiftedModel(m, horizon)


@dataclass(frozen=True)
class UncertaintyDraw:
    """A multiplicative-uncertainty realization with certified weighted norm."""

    delta: np.ndarray          # full matrix, even for diagonal structure
    gamma: float               # radius of the set it was drawn from
    structure: str             # "diagonal" or "full"
    weighted_norm: float       # ||delta||_W actually realized

    def __post_init__(self):
        if self.weighted_norm > self.gamma + DRAW_NORM_SLACK:
            raise ModelError(
                f"uncertainty draw violates its radius: ||Delta||_W = "
                f"{self.weighted_norm:.12e} > gamma = {self.gamma:.12e}"
            )
        self.delta.flags.writeable = False


def sample_uncertainty(gamma, w: SpdMatrix, structure, rng) -> UncertaintyDraw:
    """Draw Delta with ||Delta||_W <= gamma, uniform direction, radius gamma * s.

    Entries are drawn uniform on [-1, 1] (diagonal entries only for the
    "diagonal" structure), the draw is rescaled to weighted norm gamma * s with
    s ~ U(0, 1], so the radius constraint is tight in distribution: over 1000
    draws the max realized norm lands in (0.9 gamma, gamma] with overwhelming
    probability.
    """
    if gamma < 0:
        raise ModelError(f"gamma must be >= 0, got {gamma}")
    if structure not in ("diagonal", "full"):
        raise ModelError(f"unknown uncertainty structure {structure!r}")
    n = w.n
    if structure == "diagonal":
        raw = np.diag(rng.uniform(-1.0, 1.0, size=n))
    else:
        raw = rng.uniform(-1.0, 1.0, size=(n, n))
    if gamma == 0.0:
        return UncertaintyDraw(np.zeros((n, n)), 0.0, structure, 0.0)
    nu = weighted_mat_norm(raw, w)
    if nu == 0.0:
        return UncertaintyDraw(np.zeros((n, n)), gamma, structure, 0.0)
    s = 1.0 - rng.uniform(0.0, 1.0)          # uniform on (0, 1]
    delta = raw * (gamma * s / nu)
    return UncertaintyDraw(delta, gamma, structure, gamma * s)


def true_plant(model: LiftedModel, draw: UncertaintyDraw) -> LiftedModel:
    """Realize the true lifted plant H = M + M Delta."""
    h = model.matrix + model.matrix @ draw.delta
    return LiftedModel(h, model.horizon)


# ---------------------------------------------------------------------------
# Stand-in process model: a 5-state stable SISO plant shaped like a thermal
# process (laser power in Watt -> melt track width in mm).  Synthesized
# deterministically from a seed; the default instance is committed as JSON.
# ---------------------------------------------------------------------------

STANDIN_ORDER = 5
STANDIN_DC_GAIN = 0.02       # mm per Watt, puts 75..165 W at 1.5..3.3 mm output


def synth_standin_model(seed=0) -> StateSpace:
    """Deterministic 5-state stable SISO model with CB != 0 and fixed DC gain.

    Construction: three real poles and one complex pair drawn inside the unit
    disk, companion-form A, B = e_n; the C entry hitting CB is drawn away from
    zero so invertibility of the lifted matrix is structural, then C is scaled
    to the target DC gain.  Same seed, same model, bit for bit.
    """
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, 0x5D])))
    real_poles = rng.uniform(0.45, 0.8, size=3)
    modulus = rng.uniform(0.55, 0.78)
    angle = rng.uniform(0.25, 0.9)
    poles = np.concatenate([
        real_poles,
        [modulus * np.exp(1j * angle), modulus * np.exp(-1j * angle)],
    ])
    charpoly = np.real(np.poly(poles))           # leading coefficient 1
    n = STANDIN_ORDER
    a = np.zeros((n, n))
    a[:-1, 1:] = np.eye(n - 1)
    a[-1, :] = -charpoly[:0:-1]                  # companion bottom row
    b = np.zeros((n, 1))
    b[-1, 0] = 1.0
    c = np.zeros((1, n))
    c[0, :-1] = rng.uniform(-0.3, 0.3, size=n - 1)
    head = rng.uniform(0.8, 1.2)
    c[0, -1] = head if rng.uniform() < 0.5 else -head   # CB = c[-1] != 0
    ss = StateSpace(a, b, c)
    scale = STANDIN_DC_GAIN / ss.dc_gain
    return StateSpace(a, b, c * scale)


def save_state_space(ss: StateSpace, path):
    payload = {
        "a": ss.a.tolist(),
        "b": ss.b.tolist(),
        "c": ss.c.tolist(),
        "order": ss.order,
        "dc_gain": ss.dc_gain,
        "spectral_radius": ss.spectral_radius,
        "note": "discrete-time SISO stand-in plant, Watt input, mm output",
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def load_state_space(path_or_file) -> StateSpace:
    """Load a model JSON and re-validate every invariant the type enforces."""
    if hasattr(path_or_file, "read"):
        payload = json.load(path_or_file)
    else:
        with open(path_or_file) as fh:
            payload = json.load(fh)
    ss = StateSpace(payload["a"], payload["b"], payload["c"])
    if "dc_gain" in payload and not np.isclose(ss.dc_gain, payload["dc_gain"], rtol=1e-9):
        raise ModelError(
            f"model file inconsistent: stored dc_gain {payload['dc_gain']} vs "
            f"recomputed {ss.dc_gain}"
        )
    return ss


def default_standin() -> StateSpace:
    """The committed stand-in model shipped with the package."""
    ref = resources.files("pogd_ilc").joinpath("data/standin_model.json")
    with ref.open() as fh:
        return load_state_space(fh)
