"""Poisson quasi-likelihood estimation on a segment and sandwich matrices.

The quasi-log-likelihood is ``sum_t (Y_t * log lam_t - lam_t)`` (the log Y_t!
constant is omitted).  ``fit`` maximizes it over the box/stationarity
constrained parameter set from a fixed deterministic set of starting points,
optionally augmented with warm starts.
"""

from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy import optimize

from . import _kernels
from .model_core import (
    CountSeries,
    InitPolicy,
    ModelError,
    ModelSpec,
    Segment,
    _initial_state,
)

EIG_TOL = 1e-10


class FitError(ModelError):
    pass


def fit_min_len(spec: ModelSpec) -> int:
    return max(20, 5 * spec.dim)


@dataclass
class FitOptions:
    init: InitPolicy = InitPolicy.EMPIRICAL_MEAN
    maxiter: int = 300
    g_tol_scale: float = 1e-6
    extra_starts: tuple = ()
    # "all": optimize from every deterministic start; "best1": only from the
    # highest-valued deterministic start (extra/warm starts always run)
    starts_policy: str = "all"


@dataclass
class ParamEstimate:
    theta_hat: np.ndarray
    seg: Segment
    loglik: float
    converged: bool
    iterations: int
    j_hat: np.ndarray
    i_hat: np.ndarray
    robust_se: np.ndarray


def quasi_loglik(spec, theta, series, seg, init=InitPolicy.EMPIRICAL_MEAN):
    theta = spec.check_theta(theta)
    v, _ = _value_grad(spec, theta, seg.slice(series).astype(float), init)
    return v


def quasi_loglik_grad(spec, theta, series, seg, init=InitPolicy.EMPIRICAL_MEAN):
    theta = spec.check_theta(theta)
    _, g = _value_grad(spec, theta, seg.slice(series).astype(float), init)
    return g


def _value_grad(spec, theta, y, init):
    # no bounds check here: optimizer iterates may sit fractionally outside
    # the linear constraint; the box bounds keep the mean path positive
    omega, alpha, beta, lam0, glam0 = _initial_state(spec, theta, y, init)
    v, g = _kernels.qll_value_grad(y, omega, alpha, beta, lam0, glam0)
    if not np.isfinite(v):
        raise FitError("non-finite quasi-log-likelihood")
    return float(v), g[: spec.dim]


def default_starts(spec: ModelSpec, ybar: float) -> list:
    """Deterministic multi-start set covering low and high persistence."""
    if spec.dim == 3:
        raw = [
            (ybar * 0.5, 0.3, 0.2),
            (ybar * 0.9, 0.05, 0.05),
            (ybar * 0.5, 0.25, 0.25),
        ]
    else:
        raw = [
            (ybar * 0.7, 0.3),
            (ybar * 0.95, 0.05),
            (ybar * 0.75, 0.25),
        ]
    return [spec.project(s) for s in raw]


def projected_grad_norm(spec, theta, grad) -> float:
    """Norm of the ascent gradient projected onto feasible directions."""
    g = grad.copy()
    for k, (lo, hi) in enumerate(spec.bounds()):
        if theta[k] <= lo + 1e-12 and g[k] < 0:
            g[k] = 0.0
        if theta[k] >= hi - 1e-12 and g[k] > 0:
            g[k] = 0.0
    cap = 1.0 - spec.delta_stat
    if theta[1:].sum() >= cap - 1e-10:
        u = np.zeros_like(g)
        u[1:] = 1.0
        u /= np.linalg.norm(u)
        out = float(g @ u)
        if out > 0:
            g = g - out * u
    return float(np.linalg.norm(g))


def _maximize_from(spec, y, init, x0, maxiter):
    m = y.shape[0]

    def neg(theta):
        # scaled by 1/m so optimizer tolerances are segment-length independent
        v, g = _value_grad(spec, theta, y, init)
        return -v / m, -g / m

    bounds = spec.bounds()
    lbfgsb_opts = {"maxiter": maxiter, "ftol": 0.0, "gtol": 1e-10}
    res = optimize.minimize(
        neg, x0, jac=True, method="L-BFGS-B", bounds=bounds,
        options=lbfgsb_opts,
    )
    nit = int(res.nit)
    cap = 1.0 - spec.delta_stat
    if spec.dim == 3 and res.x[1:].sum() > cap:
        # box optimum violates alpha + beta <= cap: solve with the constraint
        cons = [{
            "type": "ineq",
            "fun": lambda t: cap - t[1] - t[2],
            "jac": lambda t: np.array([0.0, -1.0, -1.0]),
        }]
        res = optimize.minimize(
            neg, spec.project(res.x), jac=True, method="SLSQP", bounds=bounds,
            constraints=cons, options={"maxiter": maxiter, "ftol": 1e-12},
        )
        nit += int(res.nit)
    theta = spec.project(res.x)
    v, g = _value_grad(spec, theta, y, init)
    return theta, v, g, nit


def _curvature_sum(spec, y, init, theta):
    omega, alpha, beta, lam0, glam0 = _initial_state(spec, theta, y, init)
    lam, glam = _kernels.ingarch_grad_filter(y, omega, alpha, beta, lam0, glam0)
    glam = glam[:, : spec.dim]
    return (glam.T * (1.0 / lam)) @ glam


def _active_rows(spec, theta, g):
    """Rows of the constraints active at theta that the gradient pushes against."""
    d = spec.dim
    rows = []
    for k, (lo, hi) in enumerate(spec.bounds()):
        if (theta[k] <= lo + 1e-10 and g[k] < 0) or (theta[k] >= hi - 1e-10 and g[k] > 0):
            e = np.zeros(d)
            e[k] = 1.0
            rows.append(e)
    cap = 1.0 - spec.delta_stat
    if theta[1:].sum() >= cap - 1e-10 and g[1:].sum() > 0:
        e = np.zeros(d)
        e[1:] = 1.0
        rows.append(e)
    return np.array(rows) if rows else np.empty((0, d))


def _kkt_step(spec, y, init, theta, g):
    """Equality-constrained scoring step along the active faces, or None."""
    d = spec.dim
    h = _curvature_sum(spec, y, init, theta)
    a = _active_rows(spec, theta, g)
    m = a.shape[0]
    kkt = np.zeros((d + m, d + m))
    kkt[:d, :d] = h
    kkt[:d, d:] = a.T
    kkt[d:, :d] = a
    try:
        step = np.linalg.solve(kkt, np.concatenate([g, np.zeros(m)]))[:d]
    except np.linalg.LinAlgError:
        return None
    if not np.all(np.isfinite(step)):
        return None
    return step


def newton_decrement(spec, y, init, theta, g):
    """Half the predicted loglik gain of the constrained scoring step.

    Scale-invariant optimality measure; the projected gradient norm alone is
    misleading when the curvature is extreme (near-boundary fits with a tiny
    mean level).
    """
    step = _kkt_step(spec, y, init, theta, g)
    if step is None:
        return np.inf
    return 0.5 * abs(float(g @ step))


def _scoring_polish(spec, y, init, theta, v, g, g_tol, max_steps=20):
    """Active-set Fisher-scoring refinement of the optimizer's solution.

    Takes equality-constrained Newton-like steps (curvature matrix standing in
    for the Hessian) along the currently active faces; never accepts a loglik
    decrease, keeps iterates feasible.  Runs the scoring iteration down to the
    floating-point floor so that fits reaching the same optimum from different
    starting points agree to machine precision.
    """
    for _ in range(max_steps):
        step = _kkt_step(spec, y, init, theta, g)
        if step is None or np.linalg.norm(step) == 0.0:
            break
        if 0.5 * abs(float(g @ step)) < 1e-24 * (1.0 + abs(v)):
            break  # predicted gain at the floating-point floor
        improved = False
        scale = 1.0
        for _ in range(8):
            cand = spec.project(theta + scale * step)
            try:
                cv, cg = _value_grad(spec, cand, y, init)
            except FitError:
                scale *= 0.5
                continue
            if cv >= v - 1e-12 * (1.0 + abs(v)) and not np.array_equal(cand, theta):
                theta, v, g = cand, cv, cg
                improved = True
                break
            scale *= 0.5
        if not improved:
            break
    return theta, v, g


def _is_converged(spec, y, init, theta, v, g, g_tol) -> bool:
    """Projected-gradient test, with a Newton-decrement escape hatch for
    sharp-curvature optima where the gradient scale cannot reach g_tol."""
    if projected_grad_norm(spec, theta, g) < g_tol:
        return True
    return newton_decrement(spec, y, init, theta, g) < 1e-10 * (1.0 + abs(v))


def fit(spec: ModelSpec, series: CountSeries, seg: Segment,
        opts: Optional[FitOptions] = None) -> ParamEstimate:
    """Maximize the quasi-log-likelihood on a segment with multi-start."""
    opts = opts or FitOptions()
    if len(seg) < fit_min_len(spec):
        raise FitError(
            f"segment length {len(seg)} below minimum {fit_min_len(spec)}"
        )
    y = seg.slice(series).astype(np.float64)
    ybar = float(np.mean(y))

    if spec.coef_upper == 0.0 and opts.init == InitPolicy.UNCONDITIONAL_MEAN:
        # constant-mean degeneracy: lam_t = omega everywhere, argmax is ybar
        theta = spec.project(np.r_[ybar, np.zeros(spec.dim - 1)])
        v, g = _value_grad(spec, theta, y, opts.init)
        j, i = info_matrices(spec, series, seg, theta, init=opts.init)
        return ParamEstimate(theta, seg, v, True, 0, j, i,
                             _robust_se(j, i, len(seg)))

    det_starts = default_starts(spec, ybar)
    if opts.starts_policy in ("best1", "warm_first"):
        vals = []
        for s in det_starts:
            try:
                vals.append(_value_grad(spec, s, y, opts.init)[0])
            except FitError:
                vals.append(-np.inf)
        det_starts = [det_starts[int(np.argmax(vals))]]
    extras = [spec.project(s) for s in opts.extra_starts]
    if opts.starts_policy == "warm_first" and extras:
        start_groups = [extras, det_starts]
    else:
        start_groups = [det_starts + extras]

    g_tol = None
    candidates = []
    failures = []
    total_iter = 0
    for group in start_groups:
        for x0 in group:
            try:
                theta, v, g, nit = _maximize_from(spec, y, opts.init, x0, opts.maxiter)
            except Exception as exc:  # noqa: BLE001 - collected into diagnostics
                failures.append(str(exc))
                continue
            total_iter += nit
            candidates.append((theta, v, g))
        if candidates:
            # warm_first: stop after the warm group if it already converged
            theta, v, g = candidates[-1]
            g_tol = opts.g_tol_scale * (1.0 + abs(v) / len(seg))
            if len(start_groups) > 1 and group is start_groups[0]:
                if _is_converged(spec, y, opts.init, theta, v, g, g_tol):
                    break
    if not candidates:
        raise FitError(f"all starting points failed: {failures}")
    best_v = max(v for _, v, _ in candidates)
    # numerically tied logliks: prefer the flattest gradient, then start order
    tied = [c for c in candidates if c[1] >= best_v - 1e-9 * (1.0 + abs(best_v))]
    theta, v, g = min(tied, key=lambda c: projected_grad_norm(spec, c[0], c[2]))
    g_tol = opts.g_tol_scale * (1.0 + abs(v) / len(seg))
    theta, v, g = _scoring_polish(spec, y, opts.init, theta, v, g, g_tol)
    converged = _is_converged(spec, y, opts.init, theta, v, g, g_tol)
    if not converged:
        # a fresh quasi-Newton restart from the refined point discards the
        # stalled Hessian memory and usually completes the line search that
        # the first solve abandoned (seen near the coef_upper cap face)
        try:
            theta2, v2, g2, nit = _maximize_from(spec, y, opts.init, theta,
                                                 opts.maxiter)
        except Exception as exc:  # noqa: BLE001 - collected into diagnostics
            failures.append(str(exc))
        else:
            total_iter += nit
            if v2 >= v - 1e-12 * (1.0 + abs(v)):
                theta, v, g = theta2, v2, g2
            g_tol = opts.g_tol_scale * (1.0 + abs(v) / len(seg))
            theta, v, g = _scoring_polish(spec, y, opts.init, theta, v, g, g_tol)
            converged = _is_converged(spec, y, opts.init, theta, v, g, g_tol)
    j, i = info_matrices(spec, series, seg, theta, init=opts.init)
    return ParamEstimate(theta, seg, v, converged, total_iter, j, i,
                         _robust_se(j, i, len(seg)))


def info_matrices(spec, series, seg, theta_hat,
                  init=InitPolicy.EMPIRICAL_MEAN) -> Tuple[np.ndarray, np.ndarray]:
    """Empirical curvature and score-variance matrices averaged over the segment."""
    theta_hat = spec.check_theta(theta_hat)
    y = seg.slice(series).astype(np.float64)
    omega, alpha, beta, lam0, glam0 = _initial_state(spec, theta_hat, y, init)
    lam, glam = _kernels.ingarch_grad_filter(y, omega, alpha, beta, lam0, glam0)
    glam = glam[:, : spec.dim]
    m = y.shape[0]
    j = (glam.T * (1.0 / lam)) @ glam / m
    i = (glam.T * (y / lam - 1.0) ** 2) @ glam / m
    j = 0.5 * (j + j.T)
    i = 0.5 * (i + i.T)
    return j, i


def _spectral_inv(mat, eig_tol=EIG_TOL):
    """Inverse via eigendecomposition; small eigenvalues treated as zero."""
    vals, vecs = np.linalg.eigh(mat)
    cutoff = eig_tol * max(float(vals.max()), 0.0)
    if vals.max() <= 0.0:
        raise FitError("matrix is numerically zero, cannot invert")
    keep = vals > cutoff
    pinv_used = not bool(keep.all())
    inv_vals = np.where(keep, 1.0 / np.where(keep, vals, 1.0), 0.0)
    return (vecs * inv_vals) @ vecs.T, pinv_used


def sandwich_norm(j_hat, i_hat, eig_tol=EIG_TOL) -> Tuple[np.ndarray, bool]:
    """The test's normalizer J I^{-1} J.

    Returns (matrix, pinv_used); pinv_used is True when near-zero eigenvalues
    of i_hat were dropped.
    """
    i_inv, pinv_used = _spectral_inv(i_hat, eig_tol)
    out = j_hat @ i_inv @ j_hat
    return 0.5 * (out + out.T), pinv_used


def _robust_se(j_hat, i_hat, m) -> np.ndarray:
    """sqrt of the diagonal of J^{-1} I J^{-1} / m."""
    j_inv, _ = _spectral_inv(j_hat)
    cov = j_inv @ i_hat @ j_inv / m
    return np.sqrt(np.clip(np.diag(cov), 0.0, None))
