"""Particle dynamics: right-hand side from the solved tessellation, AB2 stepping, diagnostics.

Time runs in t~ = t / |tau|.  Because tau < 0 for a negative background
gradient, the system is integrated in the orientation that makes physical
time advance:

    dz1/dt~ = alpha / m * int (Pi0 - Pi) dsigma
    dz2/dt~ = beta * (z1 - C1)

The single-seed benchmark then drifts with speed +E_I as expected.
Masses are never integrated: m_i = m_i(0) * z2_i / z2_i(0).
"""

from dataclasses import dataclass, field, replace
import logging

import numpy as np

from .errors import BlowUpError, ConfigError, NonConvergenceError
from .integrals import internal_energy_terms
from .solver import solve

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ParticleState:
    """Seeds (z1 unwrapped), exact-law masses and the warm-start weights."""

    t: float
    seeds: np.ndarray
    masses: np.ndarray
    weights: np.ndarray
    z2_initial: np.ndarray
    m_initial: np.ndarray
    step: int = 0

    @classmethod
    def initial(cls, seeds, masses, weights=None, t=0.0):
        seeds = np.array(seeds, dtype=float).reshape(-1, 2)
        masses = np.array(masses, dtype=float)
        if np.any(seeds[:, 1] <= 0):
            raise ConfigError("all seed heights must be positive")
        if np.any(masses <= 0) or masses.shape != (seeds.shape[0],):
            raise ConfigError("need one positive mass per seed")
        w = None if weights is None else np.array(weights, dtype=float)
        return cls(t, seeds, masses, w, seeds[:, 1].copy(), masses.copy())

    @property
    def n(self):
        return self.seeds.shape[0]

    def moved(self, seeds, dt):
        """State at new positions with masses from the mass-height law."""
        bad = np.flatnonzero(~(seeds[:, 1] > 0))
        if len(bad):
            i = int(bad[0])
            raise BlowUpError(f"particle {i} reached z2 = {seeds[i, 1]:.6g} at step {self.step + 1}")
        masses = self.m_initial * seeds[:, 1] / self.z2_initial
        return replace(self, t=self.t + dt, seeds=seeds, masses=masses, step=self.step + 1)


@dataclass(frozen=True)
class Model:
    """Everything fixed for a run: solver context (with c0 set), thermodynamics and couplings."""

    ctx: object
    thermo: object
    alpha: float
    beta: float
    Pi0: float
    newton_tol: float = 1e-10
    max_iter: int = 100


@dataclass(frozen=True)
class RhsSample:
    v1: np.ndarray
    v2: np.ndarray
    E_I: np.ndarray
    centroids: np.ndarray
    weights: np.ndarray
    energy: float
    newton_iters: int
    dual: object = field(default=None, repr=False)

    @property
    def velocity(self):
        return np.column_stack([self.v1, self.v2])


@dataclass
class DiagnosticsRow:
    t: float
    total_mass: float
    energy: float
    energy_rel_err: float
    min_mass: float
    newton_iters: int
    step: int = 0
    scheme: str = "ab2"


def geostrophic_energy(dual):
    """sum_i (w_i M_i - D_i): transport plus internal energy of the solved state."""
    ci = dual.integrals
    return float(np.dot(dual.weights, ci.mass) - np.sum(ci.dual))


def compute_rhs(state, model, verbose=False):
    """Solve the transport problem at ``state`` and evaluate the particle velocities.

    The solve starts from the state's weights; ``solve`` retries once from
    init_weights when that fails.
    """
    try:
        dual = solve(state.seeds, state.masses, model.ctx, w0=state.weights,
                     tol=model.newton_tol, max_iter=model.max_iter, verbose=verbose)
    except NonConvergenceError as exc:
        raise NonConvergenceError(f"step {state.step}: {exc}", exc.state) from exc
    ci = dual.integrals
    E_I = internal_energy_terms(ci, state.masses, model.thermo.exner_coeff, model.Pi0)
    C = ci.centroids()
    v1 = model.alpha * E_I
    v2 = model.beta * (state.seeds[:, 0] - C[:, 0])
    return RhsSample(v1, v2, E_I, C, dual.weights, geostrophic_energy(dual), dual.iterations, dual)


def _advance(state, rhs, increment, dt):
    out = state.moved(state.seeds + dt * increment, dt)
    return replace(out, weights=rhs.weights)


def bootstrap_first_step(state, rhs0, dt):
    """Explicit Euler step supplying the second history point for AB2."""
    if not dt > 0:
        raise ConfigError("dt must be positive")
    return _advance(state, rhs0, rhs0.velocity, dt)


def step_ab2(state, prev_rhs, curr_rhs, dt):
    if not dt > 0:
        raise ConfigError("dt must be positive")
    return _advance(state, curr_rhs, 1.5 * curr_rhs.velocity - 0.5 * prev_rhs.velocity, dt)


def compute_pi0(dual, thermo, domain):
    """Area mean of Pi = exner * sigma^(gamma-1) over the slice.

    With sigma = (f*)'(t), sigma^(gamma-1) = t / (kappa gamma), so only the
    integral of the positive part of t is needed.
    """
    ci = dual.integrals
    return float(thermo.exner_coeff / (thermo.kappa * thermo.gamma) * np.sum(ci.tint) / domain.area)


def fix_gauge(model, dual, Pi0):
    """Model with c0 = c_p Pi0 and the weights that keep the cells unchanged."""
    c0 = model.thermo.cp * Pi0
    dc0 = c0 - model.ctx.cp.c0
    return replace(model, ctx=model.ctx.with_c0(c0), Pi0=Pi0), dual.weights - dc0


@dataclass
class SimulationResult:
    state: ParticleState
    diagnostics: list
    rhs: RhsSample


def run_simulation(state, model, dt, n_steps, snapshot_every=0, on_snapshot=None, on_diagnostics=None, verbose=False):
    """Advance ``n_steps`` steps: solve, evaluate, step, with an Euler start.

    ``on_snapshot(state, rhs)`` is called at step 0, every ``snapshot_every``
    steps and at the final step. ``on_diagnostics(row)`` receives one row per
    step after the run, once the relative energy errors (which need the mean
    of the whole series) are known.
    """
    if n_steps < 0:
        raise ConfigError("n_steps must be non-negative")
    rows = []

    def record(st, rhs, scheme):
        row = DiagnosticsRow(st.t, float(st.masses.sum()), rhs.energy, 0.0, float(st.masses.min()),
                             rhs.newton_iters, st.step, scheme)
        rows.append(row)
        log.debug("step %d t=%.6g energy=%.12g iters=%d", st.step, st.t, rhs.energy, rhs.newton_iters)
        snap = st.step == 0 or st.step == n_steps or (snapshot_every and st.step % snapshot_every == 0)
        if on_snapshot is not None and snap:
            on_snapshot(st, rhs)

    curr = compute_rhs(state, model, verbose)
    state = replace(state, weights=curr.weights)
    record(state, curr, "initial")
    prev = None
    for k in range(n_steps):
        if prev is None:
            new = bootstrap_first_step(state, curr, dt)
        else:
            new = step_ab2(state, prev, curr, dt)
        prev, state = curr, new
        curr = compute_rhs(state, model, verbose)
        state = replace(state, weights=curr.weights)
        record(state, curr, "euler" if k == 0 else "ab2")
    energies = np.array([r.energy for r in rows])
    mean = energies.mean()
    if mean != 0:
        for r, e in zip(rows, (mean - energies) / mean):
            r.energy_rel_err = float(e)
    if on_diagnostics is not None:
        for r in rows:
            on_diagnostics(r)
    return SimulationResult(state, rows, curr)
