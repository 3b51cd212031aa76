"""Assembly of complete runs: physical frontogenesis set-up and the single-seed benchmark."""

from dataclasses import dataclass, replace
import logging

import numpy as np

from .benchmark import benchmark_context
from .dynamics import Model, ParticleState, compute_pi0, fix_gauge, run_simulation
from .errors import ConfigError, StudyError
from .geometry import CostParams
from .initial import InitConfig, sample_particles
from .integrals import ConjugateDensity
from .metrics import DiscreteMeasure, entropic_bias_floor, fit_slope, trajectory_error, wasserstein2_entropic
from .params import BENCHMARK_MODEL, TABLE1, derive_scales, derive_thermo, model_thermo
from .solver import SolverContext, solve

log = logging.getLogger(__name__)

SECONDS_PER_DAY = 86400.0


@dataclass(frozen=True)
class Numerics:
    dt_seconds: float = 3600.0
    days: float = 1.0
    newton_tol: float = 1e-10
    max_iter: int = 100
    quad_order: int = 16
    copies: int = 1
    snapshot_every: int = 0


@dataclass
class Setup:
    state: ParticleState
    model: Model
    scales: object = None
    sample: object = None

    def steps_for(self, dt_seconds, days):
        return int(round(days * SECONDS_PER_DAY / dt_seconds))

    def nondim_dt(self, dt_seconds):
        return self.scales.to_nondim_time(dt_seconds) if self.scales is not None else dt_seconds


def physical_setup(params=TABLE1, init=None, numerics=None, L0=1.0e7, H1=1.0e5, H2=1.0e6):
    """Sample the initial ensemble, solve at t = 0, fix Pi0 and the cost constant."""
    init = init or InitConfig()
    numerics = numerics or Numerics()
    scales = derive_scales(params, L0, H1, H2)
    thermo = derive_thermo(params, "physical")
    sample = sample_particles(init, params, scales)
    mt = model_thermo(params, thermo, sample.mass_scale)
    ctx = SolverContext(CostParams(scales.F, scales.G, 0.0), sample.domain,
                        ConjugateDensity(mt.gamma, mt.kappa), numerics.quad_order, numerics.copies)
    model = Model(ctx, mt, scales.alpha, scales.beta, 0.0, numerics.newton_tol, numerics.max_iter)
    dual = solve(sample.seeds, sample.masses, ctx, tol=numerics.newton_tol, max_iter=numerics.max_iter)
    Pi0 = compute_pi0(dual, mt, sample.domain)
    model, weights = fix_gauge(model, dual, Pi0)
    log.info("N=%d mass_scale=%.6g Pi0=%.8f", len(sample.masses), sample.mass_scale, Pi0)
    return Setup(ParticleState.initial(sample.seeds, sample.masses, weights), model, scales, sample)


def benchmark_setup(seeds, masses=None, numerics=None):
    """Unit benchmark slice with Pi0 = 1, alpha = beta = 1 and time in model units."""
    numerics = numerics or Numerics(dt_seconds=0.1, days=1.0)
    seeds = np.atleast_2d(np.asarray(seeds, dtype=float))
    if masses is None:
        masses = np.full(len(seeds), 1.0 / len(seeds))
    ctx = benchmark_context(numerics.quad_order)
    model = Model(ctx, BENCHMARK_MODEL, 1.0, 1.0, 1.0, numerics.newton_tol, numerics.max_iter)
    return Setup(ParticleState.initial(seeds, masses), model)


def run_days(setup, dt_seconds, days, **kwargs):
    n = setup.steps_for(dt_seconds, days)
    return run_simulation(setup.state, setup.model, setup.nondim_dt(dt_seconds), n, **kwargs)


@dataclass
class ConvergenceReport:
    mode: str
    abscissae: list
    errors: list
    slope: float
    residual: float
    reference: float
    note: str = ""
    extra: dict = None


def _study_error(exc, label):
    return StudyError(f"run {label} failed: {exc}")


def timestep_study(setup, dts, dt_ref, days=1.0, normalizer=None, noise_floor=1e-12, runs=None):
    """Matched-N runs at each dt (seconds) against a dt_ref run; trajectory error at the end.

    If ``runs`` is a dict it receives the SimulationResult of every run, keyed by dt.
    """
    def final(dt):
        try:
            res = run_days(setup, dt, days)
        except Exception as exc:  # noqa: BLE001 - reported with the failing run
            raise _study_error(exc, f"dt={dt}") from exc
        if runs is not None:
            runs[dt] = res
        return res.state

    ref = final(dt_ref)
    C = normalizer if normalizer is not None else _default_normalizer(setup)
    errors = [trajectory_error(final(dt), ref, C) for dt in dts]
    note = ""
    if max(errors) <= noise_floor:
        note = "below noise floor"
        slope, resid = float("nan"), float("nan")
    else:
        slope, resid = fit_slope(dts, errors)
    return ConvergenceReport("timestep", list(dts), errors, slope, resid, dt_ref, note)


def _default_normalizer(setup):
    return setup.model.ctx.domain.diameter


def particle_study(make_setup, sizes, n_ref, dt_seconds, days=1.0, epsilon=None, periodic=True, runs=None):
    """Runs at each ensemble size against an n_ref run; entropic W2 between final measures.

    ``make_setup(n)`` builds the set-up for n particles. The entropic bias
    floor W2_eps(ref, ref) is reported in ``extra``. If ``runs`` is a dict it
    receives the SimulationResult of every run, keyed by n.
    """
    def final(n):
        try:
            s = make_setup(n)
            res = run_days(s, dt_seconds, days)
        except Exception as exc:  # noqa: BLE001
            raise _study_error(exc, f"N={n}") from exc
        if runs is not None:
            runs[n] = res
        st = res.state
        period = s.model.ctx.domain.period if periodic else None
        return DiscreteMeasure.of(st.seeds, st.masses), period

    ref, period = final(n_ref)
    errors = []
    for n in sizes:
        mu, _ = final(n)
        errors.append(wasserstein2_entropic(mu, ref, epsilon, period=period))
    floor = entropic_bias_floor(ref, epsilon, period=period)
    slope, resid = fit_slope(sizes, errors)
    return ConvergenceReport("particles", list(sizes), errors, slope, resid, n_ref, "",
                             {"bias_floor": floor})


def square_grid_setup(n, params=TABLE1, numerics=None, init=None, L0=1.0e7, H1=1.0e5, H2=1.0e6):
    """Physical set-up on an m x m sampling grid, n = m^2."""
    m = int(round(n**0.5))
    if m * m != n:
        raise ConfigError(f"ensemble size {n} is not a perfect square")
    init = replace(init or InitConfig(), M1=m, M2=m)
    return physical_setup(params, init, numerics, L0, H1, H2)
