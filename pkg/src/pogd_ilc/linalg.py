"""Weighted-metric linear algebra: SPD weights, weighted norms, box projections.

The whole simulator measures distances in the metric induced by an SPD matrix W
(``||x||_W = sqrt(x^T W x)``) and uses the induced operator norm
(``||A||_W = ||W^{1/2} A W^{-1/2}||_2``) for contraction certificates.  Square
roots come from the symmetric eigendecomposition, spectral norms from a full
SVD; no iterative or randomized shortcuts, so results are deterministic.
"""

from __future__ import annotations

import numpy as np

# Relative floors for accepting a matrix as symmetric positive definite.
SPD_SYMMETRY_RTOL = 1e-12
SPD_EIGVAL_RTOL = 1e-12
SQRT_RECONSTRUCTION_RTOL = 1e-10


class LinalgError(ValueError):
    """Base class for validation failures in this module."""


class SpdValidationError(LinalgError):
    """Matrix failed the symmetric-positive-definite checks."""


class BoxValidationError(LinalgError):
    """Box bounds are inconsistent (lower > upper somewhere, or NaN)."""


class ProjectionError(RuntimeError):
    """Projection/QP solver failed to reach its KKT tolerance."""

    def __init__(self, msg, residual=None, iterations=None):
        super().__init__(msg)
        self.residual = residual
        self.iterations = iterations


def _check_square(a, name):
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise LinalgError(f"{name} must be a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise LinalgError(f"{name} contains non-finite entries")
    return a


class SpdMatrix:
    """Dense SPD matrix with cached square root, inverse square root and inverse.

    Validation: symmetry to {SYM} relative Frobenius, all eigenvalues positive
    with lambda_min > {EIG} * lambda_max, and the cached square root must
    reproduce the matrix to {REC} relative Frobenius.  Instances are immutable
    (the backing arrays are marked read-only).
    """.format(SYM=SPD_SYMMETRY_RTOL, EIG=SPD_EIGVAL_RTOL, REC=SQRT_RECONSTRUCTION_RTOL)

    def __init__(self, mat):
        mat = _check_square(mat, "SPD candidate")
        asym = np.linalg.norm(mat - mat.T)
        scale = np.linalg.norm(mat)
        if scale == 0.0:
            raise SpdValidationError("zero matrix is not positive definite")
        if asym > SPD_SYMMETRY_RTOL * scale:
            raise SpdValidationError(
                f"matrix is not symmetric: ||P - P^T|| / ||P|| = {asym / scale:.3e}"
            )
        sym = 0.5 * (mat + mat.T)
        eigvals, eigvecs = np.linalg.eigh(sym)
        if eigvals[0] <= SPD_EIGVAL_RTOL * eigvals[-1] or eigvals[0] <= 0.0:
            raise SpdValidationError(
                f"matrix is not positive definite: eig range [{eigvals[0]:.3e}, "
                f"{eigvals[-1]:.3e}]"
            )
        sq = np.sqrt(eigvals)
        self.mat = sym
        self.eigvals = eigvals
        self._eigvecs = eigvecs
        self.sqrt = (eigvecs * sq) @ eigvecs.T
        self.inv_sqrt = (eigvecs / sq) @ eigvecs.T
        self.inv = (eigvecs / eigvals) @ eigvecs.T
        recon = np.linalg.norm(self.sqrt @ self.sqrt - sym)
        if recon > SQRT_RECONSTRUCTION_RTOL * scale:
            raise SpdValidationError(
                f"square-root reconstruction error {recon / scale:.3e} exceeds "
                f"{SQRT_RECONSTRUCTION_RTOL:.1e} (matrix too ill-conditioned)"
            )
        for arr in (self.mat, self.eigvals, self._eigvecs, self.sqrt,
                    self.inv_sqrt, self.inv):
            arr.flags.writeable = False

    @classmethod
    def identity(cls, n):
        return cls(np.eye(n))

    @classmethod
    def diagonal(cls, diag):
        return cls(np.diag(np.asarray(diag, dtype=float)))

    @property
    def n(self):
        return self.mat.shape[0]

    @property
    def lam_min(self):
        return float(self.eigvals[0])

    @property
    def lam_max(self):
        return float(self.eigvals[-1])

    @property
    def cond(self):
        return self.lam_max / self.lam_min

    def solve(self, b):
        """Solve P u = b through the cached eigendecomposition."""
        v = self._eigvecs
        return v @ ((v.T @ b) / self.eigvals)

    def __repr__(self):
        return f"SpdMatrix(n={self.n}, cond={self.cond:.3e})"


class BoxSet:
    """Axis-aligned box, componentwise bounds; +-inf marks an unbounded side."""

    def __init__(self, lower, upper):
        lower = np.atleast_1d(np.asarray(lower, dtype=float))
        upper = np.atleast_1d(np.asarray(upper, dtype=float))
        if lower.shape != upper.shape or lower.ndim != 1:
            raise BoxValidationError(
                f"bound shapes differ: {lower.shape} vs {upper.shape}"
            )
        if np.any(np.isnan(lower)) or np.any(np.isnan(upper)):
            raise BoxValidationError("box bounds contain NaN")
        if np.any(lower > upper):
            i = int(np.argmax(lower > upper))
            raise BoxValidationError(
                f"empty box: lower[{i}]={lower[i]} > upper[{i}]={upper[i]}"
            )
        self.lower = lower
        self.upper = upper
        self.lower.flags.writeable = False
        self.upper.flags.writeable = False

    @classmethod
    def unbounded(cls, n):
        return cls(np.full(n, -np.inf), np.full(n, np.inf))

    @classmethod
    def scalar_bounds(cls, lo, hi, n):
        return cls(np.full(n, float(lo)), np.full(n, float(hi)))

    @property
    def dim(self):
        return self.lower.shape[0]

    @property
    def is_bounded(self):
        return bool(np.all(np.isfinite(self.lower)) and np.all(np.isfinite(self.upper)))

    @property
    def is_unconstrained(self):
        return bool(np.all(np.isneginf(self.lower)) and np.all(np.isposinf(self.upper)))

    def clamp(self, x):
        """Euclidean projection: componentwise clip onto the box."""
        return np.clip(x, self.lower, self.upper)

    def contains(self, x, tol=0.0):
        return bool(np.all(x >= self.lower - tol) and np.all(x <= self.upper + tol))

    def __repr__(self):
        return f"BoxSet(dim={self.dim}, bounded={self.is_bounded})"


def weighted_vec_norm(x, p: SpdMatrix):
    """||x||_P = sqrt(x^T P x), evaluated as ||P^{1/2} x||_2 (guaranteed >= 0)."""
    x = np.asarray(x, dtype=float)
    if x.shape != (p.n,):
        raise LinalgError(f"vector shape {x.shape} does not match weight n={p.n}")
    return float(np.linalg.norm(p.sqrt @ x))


def spectral_norm(a):
    """Largest singular value, via full SVD."""
    a = np.asarray(a, dtype=float)
    if a.size == 0:
        return 0.0
    if not np.all(np.isfinite(a)):
        raise LinalgError("spectral_norm: non-finite entries")
    return float(np.linalg.svd(a, compute_uv=False)[0])


def weighted_mat_norm(a, p: SpdMatrix):
    """||A||_P = ||P^{1/2} A P^{-1/2}||_2 (operator norm induced by ||.||_P)."""
    a = _check_square(a, "matrix")
    if a.shape[0] != p.n:
        raise LinalgError(f"matrix size {a.shape[0]} does not match weight n={p.n}")
    return spectral_norm(p.sqrt @ a @ p.inv_sqrt)


# ---------------------------------------------------------------------------
# Box-constrained strongly convex QP: one solver, used both for the weighted
# projection and for the cost optimizers.  An active-set phase handles the
# typical case in a few exact solves of the free block; accelerated projected
# gradient (constant momentum, reset on objective increase) is the fallback
# when the bound pattern fails to settle.
# ---------------------------------------------------------------------------

_ACTIVE_SET_PASSES = 30


def _active_set_phase(hess, lin, box, u, g, step, tol, passes):
    """Pin coordinates a scaled gradient step pushes past a bound, solve the
    free block exactly, repeat.  A stable pattern reproduces itself and passes
    the fixed-point residual test; the caller falls back to projected gradient
    otherwise.  Returns (u, g, converged)."""
    n = lin.shape[0]
    idx = np.arange(n)
    for _ in range(passes):
        z = u - step * g
        low = z < box.lower
        up = z > box.upper
        free = ~(low | up)
        u = np.where(low, box.lower, np.where(up, box.upper, 0.0))
        if free.any():
            f = idx[free]
            pinned = idx[~free]
            rhs = lin[f] - hess[np.ix_(f, pinned)] @ u[pinned]
            u[f] = np.linalg.solve(hess[np.ix_(f, f)], rhs)
        g = hess @ u - lin
        if np.max(np.abs(u - box.clamp(u - step * g))) <= tol:
            return u, g, True
    return box.clamp(u), None, False


def solve_box_qp(hess, lin, box: BoxSet, *, tol, max_iter, x0=None, eig_range=None,
                 what="box QP"):
    """Minimize 0.5 u^T hess u - lin^T u over a box.

    Stops when the projected-gradient fixed-point residual
    ``||u - clamp(u - (1/L) (hess u - lin))||_inf`` drops below ``tol``;
    raises ProjectionError when the iteration cap is hit first.
    """
    hess = np.asarray(hess, dtype=float)
    lin = np.asarray(lin, dtype=float)
    n = lin.shape[0]
    if box.dim != n:
        raise LinalgError(f"box dim {box.dim} does not match problem dim {n}")
    if eig_range is None:
        ev = np.linalg.eigvalsh(0.5 * (hess + hess.T))
        eig_range = (float(ev[0]), float(ev[-1]))
    lam_min, lam_max = eig_range
    if lam_min <= 0.0:
        raise LinalgError(f"{what}: Hessian not positive definite (lam_min={lam_min:.3e})")
    step = 1.0 / lam_max
    q = lam_min / lam_max
    beta = (1.0 - np.sqrt(q)) / (1.0 + np.sqrt(q))

    u = box.clamp(lin / lam_max if x0 is None else np.asarray(x0, dtype=float))
    g = hess @ u - lin
    if np.max(np.abs(u - box.clamp(u - step * g))) <= tol:
        return u
    u, g, done = _active_set_phase(hess, lin, box, u, g, step, tol,
                                   min(_ACTIVE_SET_PASSES, max_iter))
    if done:
        return u
    g = hess @ u - lin
    obj_u = 0.5 * float(u @ g) - 0.5 * float(u @ lin)
    z = u
    gz = g
    for it in range(1, max_iter + 1):
        u_new = box.clamp(z - step * gz)
        g_new = hess @ u_new - lin
        if np.max(np.abs(u_new - box.clamp(u_new - step * g_new))) <= tol:
            return u_new
        obj_new = 0.5 * float(u_new @ g_new) - 0.5 * float(u_new @ lin)
        if obj_new > obj_u:
            # momentum overshot: restart from the best point, plain gradient step
            gu = hess @ u - lin
            u_new = box.clamp(u - step * gu)
            g_new = hess @ u_new - lin
            if np.max(np.abs(u_new - box.clamp(u_new - step * g_new))) <= tol:
                return u_new
            obj_new = 0.5 * float(u_new @ g_new) - 0.5 * float(u_new @ lin)
        z = u_new + beta * (u_new - u)
        gz = hess @ z - lin
        u, obj_u = u_new, obj_new
    g = hess @ u - lin
    res = float(np.max(np.abs(u - box.clamp(u - step * g))))
    raise ProjectionError(
        f"{what}: KKT residual {res:.3e} > tol {tol:.1e} after {max_iter} iterations",
        residual=res, iterations=max_iter,
    )


PROJECTION_KKT_TOL = 1e-10
PROJECTION_MAX_ITER = 10_000


def weighted_project(x, box: BoxSet, w: SpdMatrix, *, tol=PROJECTION_KKT_TOL,
                     max_iter=PROJECTION_MAX_ITER):
    """argmin_{u in box} ||u - x||_W.

    Nonexpansive and idempotent in the W norm; returns x unchanged when x is
    feasible.  Raises ProjectionError if the KKT tolerance is not met within
    the iteration cap (never returns an unconverged point silently).
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (w.n,):
        raise LinalgError(f"point shape {x.shape} does not match weight n={w.n}")
    if box.dim != w.n:
        raise LinalgError(f"box dim {box.dim} does not match weight n={w.n}")
    return solve_box_qp(
        w.mat, w.mat @ x, box,
        tol=tol, max_iter=max_iter, x0=box.clamp(x),
        eig_range=(w.lam_min, w.lam_max), what="weighted projection",
    )
