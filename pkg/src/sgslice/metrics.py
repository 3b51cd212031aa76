"""Error metrics: relative conservation error, trajectory error and entropic W2."""

from dataclasses import dataclass, field
import logging
import math

import numpy as np
from scipy.special import logsumexp

from .errors import MetricError

log = logging.getLogger(__name__)


def relative_error_series(values):
    """(Q_mean - Q(t)) / Q_mean with Q_mean the arithmetic mean of the series."""
    q = np.asarray(values, dtype=float)
    if q.size == 0:
        return q
    mean = q.mean()
    if mean == 0 or not np.isfinite(mean):
        raise MetricError("relative error undefined for a zero-mean series")
    return (mean - q) / mean


def _positions(x):
    return np.asarray(getattr(x, "seeds", x), dtype=float)


def trajectory_error(state, reference, normalizer=1.0, masses=None):
    """(1/C) sqrt(sum_i m_i |z_i - z_i_ref|^2) for index-matched ensembles.

    Masses default to the reference state's masses.
    """
    za, zb = _positions(state), _positions(reference)
    if za.shape != zb.shape:
        raise MetricError(f"ensembles differ in size: {za.shape[0]} vs {zb.shape[0]}")
    if masses is None:
        masses = getattr(reference, "masses", None)
    if masses is None:
        raise MetricError("masses required for the trajectory error")
    if not normalizer > 0:
        raise MetricError("normalizer must be positive")
    d2 = np.sum((za - zb) ** 2, axis=1)
    return float(math.sqrt(np.dot(masses, d2)) / normalizer)


@dataclass(frozen=True)
class DiscreteMeasure:
    points: np.ndarray
    weights: np.ndarray

    @classmethod
    def of(cls, points, weights):
        p = np.atleast_2d(np.asarray(points, dtype=float))
        w = np.asarray(weights, dtype=float).ravel()
        if p.shape[0] != w.size:
            raise MetricError("one weight per point required")
        if np.any(w < 0):
            raise MetricError("weights must be non-negative")
        return cls(p, w)


def _normalised(mu, name):
    total = float(mu.weights.sum())
    dev = abs(total - 1.0)
    if dev >= 1e-3:
        raise MetricError(f"{name} has total mass {total:.6g}; expected 1 within 1e-3")
    if dev > 0:
        if dev > 1e-12:
            log.warning("%s total mass %.12g renormalised to 1", name, total)
        return DiscreteMeasure(mu.points, mu.weights / total)
    return mu


def squared_distances(x, y, period=None):
    d = x[:, None, :] - y[None, :, :]
    if period is not None:
        d[..., 0] -= period * np.round(d[..., 0] / period)
    return np.sum(d * d, axis=-1)


@dataclass
class SinkhornResult:
    cost: float
    plan: np.ndarray = field(repr=False)
    epsilon: float
    iterations: int
    marginal_error: float

    @property
    def distance(self):
        return math.sqrt(max(self.cost, 0.0))


def _columns(f, C, la, eps):
    return -eps * logsumexp((f[:, None] - C) / eps + la[:, None], axis=0)


def _log_plan(f, g, C, la, lb, eps):
    return (f[:, None] + g[None, :] - C) / eps + la[:, None] + lb[None, :]


def _row_error(logP, a):
    return float(np.abs(np.exp(logsumexp(logP, axis=1)) - a).sum())


def _newton_polish(f, C, la, lb, a, eps, tol, max_steps=30):
    """Newton on the row potentials with the columns kept exact.

    With g = g(f), the row marginal r(f) has the symmetric Jacobian
    (diag(r) - P diag(1/b) P^T) / eps, singular only along constants.
    Sinkhorn converges sublinearly when the plan is close to a permutation;
    a few Newton steps finish the job.
    """
    live = np.flatnonzero(a > 0)
    b = np.exp(lb)
    g = _columns(f, C, la, eps)
    logP = _log_plan(f, g, C, la, lb, eps)
    err = _row_error(logP, a)
    for _ in range(max_steps):
        if err < tol:
            break
        P = np.exp(logP[live])
        r = P.sum(axis=1)
        J = (np.diag(r) - (P / np.where(b > 0, b, 1.0)) @ P.T) / eps
        J += np.full_like(J, 1.0 / len(live))
        try:
            step = np.linalg.solve(J, a[live] - r)
        except np.linalg.LinAlgError:
            break
        t = 1.0
        for _ in range(20):
            f_try = f.copy()
            f_try[live] += t * step
            g_try = _columns(f_try, C, la, eps)
            logP_try = _log_plan(f_try, g_try, C, la, lb, eps)
            err_try = _row_error(logP_try, a)
            if err_try < err:
                break
            t *= 0.5
        else:
            break
        f, g, logP, err = f_try, g_try, logP_try, err_try
    return f, g, logP, err


def sinkhorn(mu, nu, epsilon=None, max_iter=20000, tol=1e-8, period=None, anneal=0.5, check_every=5):
    """Balanced log-domain Sinkhorn with geometric epsilon annealing.

    Starts at the largest squared distance and divides epsilon by 1/anneal
    until the target is reached. Intermediate stages stop at a loose row
    marginal error; the last one is finished by Newton steps on the dual
    (falling back to further sweeps) until the L1 row error is below ``tol``.
    Columns are exact after every sweep.
    """
    mu = _normalised(mu, "mu")
    nu = _normalised(nu, "nu")
    C = squared_distances(mu.points, nu.points, period)
    if epsilon is None:
        pts = np.vstack([mu.points, nu.points])
        diam2 = float(np.sum((pts.max(axis=0) - pts.min(axis=0)) ** 2))
        epsilon = 1e-3 * diam2 if diam2 > 0 else 1e-3
    if not epsilon > 0:
        raise MetricError("epsilon must be positive")
    la = np.log(np.where(mu.weights > 0, mu.weights, 1.0))
    lb = np.log(np.where(nu.weights > 0, nu.weights, 1.0))
    la[mu.weights == 0] = -np.inf
    lb[nu.weights == 0] = -np.inf
    f = np.zeros(C.shape[0])
    g = np.zeros(C.shape[1])
    eps = max(float(C.max()), epsilon)
    it = 0
    err = np.inf
    polished = False
    while True:
        final = eps <= epsilon
        # loose stages only warm-start the potentials for the next epsilon
        loose = max(tol, 1e-3)
        stage_tol = tol if final and polished else loose
        while it < max_iter:
            # the plan is exp((f_i + g_j - C_ij) / eps) a_i b_j
            f = -eps * logsumexp((g[None, :] - C) / eps + lb[None, :], axis=1)
            g = _columns(f, C, la, eps)
            it += 1
            if it % check_every and it < max_iter:
                continue
            logP = _log_plan(f, g, C, la, lb, eps)
            err = _row_error(logP, mu.weights)
            if err < stage_tol:
                break
        else:
            raise MetricError(f"Sinkhorn did not converge in {max_iter} iterations (marginal error {err:.3e})")
        if final and not polished:
            f, g, logP, err = _newton_polish(f, C, la, lb, mu.weights, eps, tol)
            polished = True
            if err >= tol:
                continue
        if final:
            break
        eps = max(eps * anneal, epsilon)
    P = np.exp(logP)
    return SinkhornResult(float(np.sum(P * C)), P, eps, it, err)


def wasserstein2_entropic(mu, nu, epsilon=None, max_iter=20000, tol=1e-8, period=None):
    """sqrt of the transport cost of the entropic optimal plan."""
    return sinkhorn(mu, nu, epsilon, max_iter, tol, period).distance


def entropic_bias_floor(mu, epsilon=None, period=None, **kwargs):
    """W2_eps(mu, mu): the distance the estimator reports for identical inputs."""
    return wasserstein2_entropic(mu, mu, epsilon, period=period, **kwargs)


def fit_slope(abscissae, errors):
    """Least-squares slope of log(error) against log(abscissa) and the RMS residual."""
    x = np.log(np.asarray(abscissae, dtype=float))
    y = np.log(np.asarray(errors, dtype=float))
    if x.size < 2 or not np.all(np.isfinite(y)):
        raise MetricError("need at least two positive errors to fit a slope")
    coef = np.polyfit(x, y, 1)
    resid = y - np.polyval(coef, x)
    return float(coef[0]), float(np.sqrt(np.mean(resid**2)))
