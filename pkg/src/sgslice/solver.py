"""Damped Newton solver for the semi-discrete dual problem.

The dual functional G(w) = sum w_i m_i - sum int_{L_i} f*(w_i - c) is concave.
Its gradient is the mass mismatch m - M(w) and its Hessian is -J, where
J = dM/dw is symmetric positive definite whenever every cell carries mass.
"""

from dataclasses import dataclass, field
import logging

import numpy as np
import scipy.linalg as la
import scipy.sparse.linalg as spla

from .errors import (
    DegenerateSeedsError,
    InitializationError,
    NonConvergenceError,
    SolverStateError,
)
from .geometry import affine_coeffs
from .integrals import ConjugateDensity, evaluate_cells, gather_geometry, hessian_matrix
from .tessellation import build_tessellation

log = logging.getLogger(__name__)

DENSE_LIMIT = 4096


@dataclass(frozen=True)
class SolverContext:
    """Everything the solver needs besides seeds, weights and targets."""

    cp: object
    domain: object
    cd: ConjugateDensity
    order: int = 16
    copies: int = 1

    def with_c0(self, c0):
        return SolverContext(self.cp.with_c0(c0), self.domain, self.cd, self.order, self.copies)


@dataclass
class Evaluation:
    tess: object
    ci: object

    @property
    def mass(self):
        return self.ci.mass


def evaluate(seeds, weights, ctx, need_moments=False, need_edges=True):
    tess = build_tessellation(seeds, weights, ctx.cp, ctx.domain, ctx.copies)
    if all(c.is_empty for c in tess.cells):
        raise SolverStateError("every cell is empty")
    geo = gather_geometry(tess)
    ci = evaluate_cells(tess, ctx.cd, ctx.order, geo, need_moments, need_edges)
    adj = ci.edges[:, :2].astype(int) if len(ci.edges) else np.zeros((0, 2), dtype=int)
    if len(adj):
        adj = np.unique(np.vstack([adj, adj[:, ::-1]]), axis=0)
        adj = adj[adj[:, 0] != adj[:, 1]]
    tess.adjacency = adj
    return Evaluation(tess, ci)


@dataclass
class DualState:
    """Result of a dual solve.

    ``trace`` holds one dict per accepted iteration: iteration, residual,
    step length and minimum cell mass.
    """

    weights: np.ndarray
    gradient: np.ndarray
    hessian: object
    residual_norm: float
    iterations: int
    evaluation: Evaluation = None
    trace: list = field(default_factory=list)

    @property
    def tessellation(self):
        return self.evaluation.tess

    @property
    def integrals(self):
        return self.evaluation.ci


def dual_functional(weights, seeds, targets, ctx):
    ev = evaluate(seeds, weights, ctx, need_edges=False)
    return float(np.dot(weights, targets) - np.sum(ev.ci.dual))


def _solve_spd(J, g):
    n = J.shape[0]
    try:
        if n <= DENSE_LIMIT:
            c = la.cho_factor(J.toarray(), lower=True, check_finite=False)
            return la.cho_solve(c, g, check_finite=False)
        d = J.diagonal()
        x, info = spla.cg(J, g, rtol=1e-13, maxiter=10 * n, M=spla.LinearOperator(J.shape, lambda v: v / d))
        if info != 0:
            raise la.LinAlgError("conjugate gradients did not converge")
        return x
    except la.LinAlgError as exc:
        raise DegenerateSeedsError(f"singular Newton system: {exc}") from exc


def newton_solve(seeds, targets, w0, ctx, tol=1e-10, max_iter=100, max_halvings=30, verbose=False, need_moments=True):
    """Maximise G from w0 by damped Newton.

    A step of length tau is accepted when every cell keeps at least
    eps0 = min(M(w0).min(), m.min()) / 2 of mass and both the Euclidean norm
    (by the factor 1 - tau/2) and the max-norm of the residual decrease.
    """
    seeds = np.atleast_2d(np.asarray(seeds, dtype=float))
    m = np.asarray(targets, dtype=float)
    w = np.array(w0, dtype=float)
    if np.any(m <= 0):
        raise SolverStateError("target masses must be positive")
    ev = evaluate(seeds, w, ctx, need_moments=need_moments)
    M = ev.mass
    eps0 = 0.5 * min(M.min(), m.min())
    if not eps0 > 0:
        raise SolverStateError(f"initial weights leave {int(np.sum(M <= 0))} empty cells")
    g = m - M
    res = float(np.abs(g).max())
    trace = []
    it = 0
    while res > tol:
        if it >= max_iter:
            raise NonConvergenceError(f"no convergence in {max_iter} Newton steps (residual {res:.3e})",
                                      DualState(w, g, None, res, it, ev, trace))
        H = hessian_matrix(ev.ci, len(w))
        delta = _solve_spd(-H, g)
        norm2 = float(np.linalg.norm(g))
        tau = 1.0
        for _ in range(max_halvings + 1):
            w_try = w + tau * delta
            ev_try = evaluate(seeds, w_try, ctx, need_moments=need_moments)
            M_try = ev_try.mass
            g_try = m - M_try
            if (M_try.min() >= eps0 and np.linalg.norm(g_try) <= (1 - 0.5 * tau) * norm2
                    and np.abs(g_try).max() < res):
                break
            tau *= 0.5
        else:
            raise NonConvergenceError(f"line search failed at Newton step {it} (residual {res:.3e})",
                                      DualState(w, g, H, res, it, ev, trace))
        w, ev, g = w_try, ev_try, g_try
        res = float(np.abs(g).max())
        it += 1
        rec = {"iteration": it, "residual": res, "step": tau, "min_mass": float(M_try.min())}
        trace.append(rec)
        if verbose:
            log.info("newton %s", rec)
    H = hessian_matrix(ev.ci, len(w))
    return DualState(w, g, H, res, it, ev, trace)


def init_weights(seeds, targets, ctx):
    """Weights for which every cell contains a chosen anchor point with positive density.

    Heights z2 are mapped affinely onto anchor levels s in (0, G h), with s
    increasing in z2. Psi(s) = int ds / z2(s) is concave, and the weights are
    chosen so that each seed's chart function at its anchor x = (z1, s / G)
    equals Psi(s) - C. Every competitor's chart function there lies on a tangent
    line of Psi, hence above it, so the anchor belongs to its own cell.
    C sets the density level.
    """
    seeds = np.atleast_2d(np.asarray(seeds, dtype=float))
    m = np.asarray(targets, dtype=float)
    cp, dom, cd = ctx.cp, ctx.domain, ctx.cd
    z2 = seeds[:, 1]
    top = cp.G * dom.height
    lo, hi = z2.min(), z2.max()
    n_levels = max(len(np.unique(np.round(z2 / max(hi, 1e-300), 12))), 1)
    margin = 0.5 * top / n_levels
    if hi - lo > 1e-12 * hi:
        slope = (top - 2 * margin) / (hi - lo)
        offset = margin - slope * lo
        s = offset + slope * z2
        psi = slope * np.log(s - offset)
    else:
        s = np.full_like(z2, 0.5 * top)
        psi = s / z2
    level = cd.kappa * cd.gamma * (m.sum() / dom.area) ** (cd.gamma - 1)
    C = max(level + psi.mean(), psi.max() + 0.25 * level)
    return s / z2 - cp.c0 - psi + C


def solve(seeds, targets, ctx, w0=None, tol=1e-10, max_iter=100, continuation_steps=4, verbose=False):
    """Newton from ``w0`` (or from init_weights), with one fallback path.

    If the warm start fails, restart from init_weights; if that leaves empty
    cells or fails, shrink the seeds toward their centroid and walk the
    shrink factor back to one.
    """
    seeds = np.atleast_2d(np.asarray(seeds, dtype=float))
    errors = []
    starts = ([w0] if w0 is not None else []) + [None]
    for start in starts:
        w_start = init_weights(seeds, targets, ctx) if start is None else start
        try:
            return newton_solve(seeds, targets, w_start, ctx, tol, max_iter, verbose=verbose)
        except (NonConvergenceError, SolverStateError) as exc:
            errors.append(str(exc))
            log.warning("solve from %s failed: %s", "init" if start is None else "warm start", exc)
    centre = seeds.mean(axis=0)
    w = None
    for lam in np.linspace(1.0 / continuation_steps, 1.0, continuation_steps):
        zl = centre + lam * (seeds - centre)
        try:
            w_start = init_weights(zl, targets, ctx) if w is None else w
            state = newton_solve(zl, targets, w_start, ctx, tol, max_iter, verbose=verbose)
        except (NonConvergenceError, SolverStateError) as exc:
            errors.append(f"continuation lambda={lam:.3f}: {exc}")
            raise InitializationError("; ".join(errors)) from exc
        w = state.weights
    return state


def gauge_shift(weights, dc0):
    """Weights giving identical cells after the cost constant c0 grows by dc0."""
    return np.asarray(weights) - dc0


def chart_functions(seeds, weights, cp):
    return affine_coeffs(seeds, weights, cp)
