"""Initial state of the frontogenesis slice: temperature, balanced fields, seeds and masses."""

from dataclasses import dataclass
import logging
import math

import numpy as np
from scipy.integrate import cumulative_simpson

from .errors import ConfigError, SingularSeedError
from .geometry import SliceDomain

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class InitConfig:
    """Perturbation and sampling settings.

    ``masses`` is "uniform" (m_i = 1/N) or "density" (m_i proportional to
    rho*theta at the sample point). ``refine`` sets how many Simpson panels
    per grid cell the vertical Exner integration uses.
    """

    Bu: float = 0.5
    a: float = -7.5
    M1: int = 72
    M2: int = 36
    surface_exner: float = 1.0
    masses: str = "uniform"
    refine: int = 4

    def __post_init__(self):
        if not self.Bu > 0:
            raise ConfigError("Bu must be positive")
        if self.M1 < 2 or self.M2 < 2:
            raise ConfigError("grid needs at least 2 x 2 points")
        if self.masses not in ("uniform", "density"):
            raise ConfigError(f"unknown mass assignment {self.masses!r}")
        if self.refine < 1:
            raise ConfigError("refine must be >= 1")
        if not self.surface_exner > 0:
            raise ConfigError("surface_exner must be positive")


@dataclass(frozen=True)
class FieldSample:
    x: np.ndarray
    theta_total: np.ndarray
    Pi: np.ndarray
    v: np.ndarray


@dataclass
class ParticleSample:
    """Seeds and masses at t = 0 plus the grid fields they came from.

    ``mass_scale`` is the integral of rho*theta over the slice divided by
    L0 * H1 (kg K per metre of transverse extent per unit non-dimensional area).
    """

    seeds: np.ndarray
    masses: np.ndarray
    fields: FieldSample
    mass_scale: float
    domain: SliceDomain


def theta_base(x3, params):
    return params.theta0 * np.exp(params.N_bv**2 / params.g * (np.asarray(x3, dtype=float) - 0.5 * params.H))


def perturbation_norm(Bu):
    h = 0.5 * Bu
    return math.sqrt((h - math.tanh(h)) * (1.0 / math.tanh(h) - h)) / Bu


def theta_perturbation(x1, x3, cfg, params):
    Bu = cfg.Bu
    h = 0.5 * Bu
    Z = Bu * (np.asarray(x3, dtype=float) / params.H - 0.5)
    k = np.pi * np.asarray(x1, dtype=float) / params.L
    amp = params.theta0 * cfg.a * params.N_bv / params.g
    return amp * (-(1.0 - h / math.tanh(h)) * np.sinh(Z) * np.cos(k) - perturbation_norm(Bu) * Bu * np.cosh(Z) * np.sin(k))


def theta_field(x1, x3, cfg, params):
    return theta_base(x3, params) + theta_perturbation(x1, x3, cfg, params)


def hydrostatic_exner(theta, x3, surface_exner, params):
    """Pi = surface_exner - int_0^x3 g / (c_p theta) along the last axis.

    ``x3`` are the column nodes, starting at the ground; composite Simpson
    quadrature is used between consecutive nodes.
    """
    theta = np.asarray(theta, dtype=float)
    if np.any(theta <= 0):
        raise ConfigError("potential temperature must be positive")
    x3 = np.asarray(x3, dtype=float)
    integral = cumulative_simpson(params.g / (params.c_p * theta), x=x3, axis=-1, initial=0.0)
    return surface_exner - integral


def meridional_velocity(Pi, theta, dx1, params):
    """v = c_p theta / f * dPi/dx1 with periodic central differences along axis 0."""
    dPi = (np.roll(Pi, -1, axis=0) - np.roll(Pi, 1, axis=0)) / (2.0 * dx1)
    return params.c_p * theta * dPi / params.f_cor


def geostrophic_map(x1, v, theta, params, scales):
    """Non-dimensional geostrophic coordinates of fluid at physical x1 (m)."""
    theta = np.asarray(theta, dtype=float)
    if np.any(theta <= 0):
        raise SingularSeedError("potential temperature must be positive")
    z1 = (np.asarray(x1, dtype=float) + np.asarray(v, dtype=float) / params.f_cor) / scales.L0
    z2 = params.g * theta / (params.f_cor**2 * params.theta0 * scales.H2)
    return np.stack(np.broadcast_arrays(z1, z2), axis=-1)


def slice_domain(params, scales):
    return SliceDomain(period=2.0 * params.L / scales.L0, height=params.H / scales.H1)


def sample_fields(cfg, params):
    """theta, Pi and v on the cell-centred M1 x M2 grid (arrays indexed [i1, i3])."""
    M1, M2, r = cfg.M1, cfg.M2, cfg.refine
    dx1 = 2.0 * params.L / M1
    x1 = -params.L + (np.arange(M1) + 0.5) * dx1
    # fine column whose odd multiples of r are the cell centres
    fine = np.linspace(0.0, params.H, 2 * M2 * r + 1)
    centres = (2 * np.arange(M2) + 1) * r
    th_fine = theta_field(x1[:, None], fine[None, :], cfg, params)
    Pi = hydrostatic_exner(th_fine, fine, cfg.surface_exner, params)[:, centres]
    x3 = fine[centres]
    theta = th_fine[:, centres]
    v = meridional_velocity(Pi, theta, dx1, params)
    X1, X3 = np.meshgrid(x1, x3, indexing="ij")
    return FieldSample(np.stack([X1, X3], axis=-1), theta, Pi, v)


def sample_particles(cfg, params, scales):
    fields = sample_fields(cfg, params)
    if np.any(fields.Pi <= 0):
        raise ConfigError("Exner pressure became non-positive; surface_exner too small")
    seeds = geostrophic_map(fields.x[..., 0], fields.v, fields.theta_total, params, scales).reshape(-1, 2)
    gamma = params.gamma
    rho_theta = params.p0 / params.R_d * fields.Pi ** (1.0 / (gamma - 1.0))
    cell = (2.0 * params.L / cfg.M1) * (params.H / cfg.M2)
    mass_scale = float(rho_theta.sum() * cell / (scales.L0 * scales.H1))
    n = seeds.shape[0]
    if cfg.masses == "uniform":
        masses = np.full(n, 1.0 / n)
    else:
        masses = rho_theta.ravel() / rho_theta.sum()
    _, first = np.unique(seeds, axis=0, return_index=True)
    if len(first) < n:
        dup = np.setdiff1d(np.arange(n), first)
        log.warning("%d duplicate seeds jittered by 1e-12", len(dup))
        seeds[dup] += 1e-12 * np.abs(seeds[dup]).max() * (1 + np.arange(len(dup)))[:, None]
    return ParticleSample(seeds, masses, fields, mass_scale, slice_domain(params, scales))
