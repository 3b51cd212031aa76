"""Physical constants, non-dimensional scales and thermodynamic constants."""

from dataclasses import dataclass, fields
import math

from .errors import ConfigError


@dataclass(frozen=True)
class PhysicalParams:
    """Dimensional parameters of the slice (SI units).

    Attributes:
        L: half-width of the periodic channel (m).
        H: channel height (m).
        f_cor: Coriolis frequency (1/s).
        N_bv: Brunt-Vaisala frequency (1/s).
        g: gravity (m/s^2).
        p0: reference pressure (Pa).
        theta0: reference potential temperature (K).
        s_shear: background transverse temperature gradient (K/m).
        c_p: specific heat at constant pressure (J/(kg K)).
        R_d: gas constant of dry air (J/(kg K)).
    """

    L: float = 1.0e6
    H: float = 1.0e4
    f_cor: float = 1.0e-4
    N_bv: float = 5.0e-3
    g: float = 10.0
    p0: float = 1.0e5
    theta0: float = 300.0
    s_shear: float = -3.0e-6
    c_p: float = 1003.5
    R_d: float = 287.052874

    @property
    def c_v(self):
        return self.c_p - self.R_d

    @property
    def gamma(self):
        return self.c_p / self.c_v


TABLE1 = PhysicalParams()


@dataclass(frozen=True)
class ThermoConstants:
    """gamma and kappa of f(s) = kappa s^gamma, plus exner_coeff = (R_d/p0)^(gamma-1)."""

    gamma: float
    kappa: float
    exner_coeff: float


@dataclass(frozen=True)
class Scales:
    L0: float
    H1: float
    H2: float
    F: float
    G: float
    alpha: float
    beta: float
    tau: float

    def to_nondim_time(self, seconds):
        """Non-dimensional time for a physical duration, measured in units of |tau|."""
        return seconds / abs(self.tau)


@dataclass(frozen=True)
class ModelThermo:
    """Thermodynamic constants expressed in the working units of the cost.

    The non-dimensional cost is measured in m/s^2, which differs from specific
    energy (J/(kg K)) by the factor theta0 f^2 / g.  The density solved for is a
    probability density on the non-dimensional domain, which differs from rho*theta
    by ``mass_scale``.  Folding both factors in keeps
    ``kappa * gamma == cp * exner_coeff``, which makes the particle system conserve
    energy.

    Attributes:
        gamma: adiabatic index.
        kappa: coefficient of f(s) = kappa s^gamma in cost units.
        exner_coeff: Pi = exner_coeff * sigma^(gamma-1).
        cp: heat capacity in cost units, so that w - c = cp * Pi on the support.
    """

    gamma: float
    kappa: float
    exner_coeff: float
    cp: float


BENCHMARK_THERMO = ThermoConstants(gamma=2.0, kappa=0.5, exner_coeff=1.0)
BENCHMARK_MODEL = ModelThermo(gamma=2.0, kappa=0.5, exner_coeff=1.0, cp=1.0)


def derive_scales(params, L0=1.0e7, H1=1.0e5, H2=1.0e6):
    """Non-dimensional cost and coupling constants for reference lengths L0, H1, H2 (m)."""
    for name, val in (("L0", L0), ("H1", H1), ("H2", H2)):
        if not val > 0:
            raise ConfigError(f"{name} must be positive, got {val}")
    F = math.sqrt(params.f_cor**2 * L0**2 / H2)
    G = params.g * H1 / H2
    alpha = params.c_p * params.theta0 / (L0 * params.g)
    beta = L0 / H2
    tau = params.f_cor * params.theta0 / (params.s_shear * params.g)
    return Scales(L0=L0, H1=H1, H2=H2, F=F, G=G, alpha=alpha, beta=beta, tau=tau)


def derive_thermo(params, mode="physical"):
    if mode == "benchmark":
        return BENCHMARK_THERMO
    if mode != "physical":
        raise ConfigError(f"unknown thermo mode {mode!r}")
    if not params.R_d < params.c_p:
        raise ConfigError("c_v must be positive (R_d < c_p)")
    gamma = params.gamma
    exner = (params.R_d / params.p0) ** (gamma - 1.0)
    return ThermoConstants(gamma=gamma, kappa=params.c_v * exner, exner_coeff=exner)


def model_thermo(params, thermo, mass_scale):
    """Convert ``thermo`` to the cost's working units.

    ``mass_scale`` is the dimensional mass (kg K per metre of transverse
    extent) carried by one unit of non-dimensional area at unit density. In
    practice it is the integral of rho*theta over the slice divided by L0*H1.
    """
    if not mass_scale > 0:
        raise ConfigError("mass_scale must be positive")
    energy = params.theta0 * params.f_cor**2 / params.g
    s = mass_scale ** (thermo.gamma - 1.0)
    return ModelThermo(
        gamma=thermo.gamma,
        kappa=energy * thermo.kappa * s,
        exner_coeff=thermo.exner_coeff * s,
        cp=energy * params.c_p,
    )


def validate_config(params, scales=None, thermo=None):
    """Return a list of violated invariants; empty when everything is valid."""
    report = []
    for f in fields(params):
        val = getattr(params, f.name)
        if not isinstance(val, (int, float)) or not math.isfinite(val):
            report.append(f"{f.name} must be a finite number")
    if report:
        return report
    for name in ("L", "H", "f_cor", "g", "p0", "theta0", "c_p", "R_d"):
        if not getattr(params, name) > 0:
            report.append(f"{name} must be positive")
    if params.N_bv < 0:
        report.append("N_bv must be non-negative")
    if not params.c_v > 0:
        report.append("c_v must be positive")
    elif params.R_d > 0 and not params.gamma <= 2.0:
        report.append("gamma must lie in (1, 2]")
    if scales is not None:
        for name in ("L0", "H1", "H2", "F", "G", "alpha", "beta"):
            if not getattr(scales, name) > 0:
                report.append(f"{name} must be positive")
    if thermo is not None:
        if not thermo.gamma > 1:
            report.append("gamma must exceed 1")
        if not thermo.kappa > 0:
            report.append("kappa must be positive")
        if not thermo.exner_coeff > 0:
            report.append("exner_coeff must be positive")
    return report
