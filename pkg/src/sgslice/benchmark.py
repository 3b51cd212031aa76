"""Closed-form single-seed solution on the unit benchmark slice.

Setting: X = (-1, 1] x [0, 1], F = G = c0 = Pi0 = 1, gamma = 2, kappa = 1/2,
so the density is sigma = (w + 1 - (u^2/2 + x2) / z2)_+ with u = x1 - z1.
The cell of a lone seed is the whole slice, and the weight is fixed by
requiring unit mass.

Four regimes, by how much of the slice carries positive density:

* upper (z2 >= 5/3): everywhere;
* implicit (43/60 < z2 < 5/3): the support reaches the floor along the whole
  period but misses the top corners;
* middle (2/15 <= z2 <= 43/60): support touches the floor only, strictly
  inside the top;
* lower (z2 < 2/15): support is a cap clear of the side walls.
"""

from dataclasses import dataclass
import math

import numpy as np
from scipy.optimize import brentq

from .errors import ConfigError
from .geometry import CostParams, SliceDomain
from .integrals import ConjugateDensity
from .params import BENCHMARK_MODEL
from .solver import SolverContext

UPPER = 5.0 / 3.0
MIDDLE_TOP = 43.0 / 60.0
MIDDLE_BOTTOM = 2.0 / 15.0
SQ2 = math.sqrt(2.0)


@dataclass(frozen=True)
class SingleSeedSolution:
    z2: float
    w_star: float
    E_I: float
    branch: str


def benchmark_domain():
    return SliceDomain(period=2.0, height=1.0, x1_min=-1.0)


def benchmark_context(order=16):
    return SolverContext(CostParams(1.0, 1.0, 1.0), benchmark_domain(),
                         ConjugateDensity(BENCHMARK_MODEL.gamma, BENCHMARK_MODEL.kappa), order=order)


def branch(z2):
    if not z2 > 0:
        raise ConfigError("z2 must be positive")
    if z2 >= UPPER:
        return "upper"
    if z2 > MIDDLE_TOP:
        return "implicit"
    if z2 >= MIDDLE_BOTTOM:
        return "middle"
    return "lower"


def mass_p(w, z2):
    """Cell mass in the implicit regime as a function of w."""
    s = math.sqrt(max(w * z2 + z2 - 1.0, 0.0))
    a = (w + 1.0) * z2
    return (3 - 32 * SQ2 * s - 4 * a * (-16 * SQ2 * s + a * (8 * SQ2 * s - 15) + 5)) / (60 * z2)


def energy_q(w, z2):
    """Internal energy in the implicit regime."""
    s = math.sqrt(max(w * z2 + z2 - 1.0, 0.0))
    a = (w + 1.0) * z2
    inner = 128 * SQ2 * s - 2 * a * (3 * (64 * SQ2 * s - 7) + 2 * a * (-96 * SQ2 * s + 2 * a * (16 * SQ2 * s - 35) + 35)) - 5
    return 1.0 - inner / (420 * z2**2)


def _lower_cap(z2):
    # w + 1 = a / z2, support {u^2/2 + x2 <= a}, mass (8 sqrt2 / 15) a^(5/2) / z2
    return (15.0 * z2 / (8.0 * SQ2)) ** 0.4


def single_seed_weight(z2):
    b = branch(z2)
    if b == "upper":
        return (4.0 - 3.0 * z2) / (6.0 * z2)
    if b == "middle":
        return (1.0 - 6.0 * z2 + 6.0 * math.sqrt(z2 - 1.0 / 45.0)) / (6.0 * z2)
    if b == "lower":
        return _lower_cap(z2) / z2 - 1.0
    lo = max(1.0 / z2 - 1.0, single_seed_weight(UPPER) - 1.0)
    hi = single_seed_weight(MIDDLE_TOP) + 1.0
    return brentq(lambda w: mass_p(w, z2) - 1.0, lo, hi, xtol=1e-15, rtol=1e-15, maxiter=200)


def single_seed_internal_energy(z2):
    b = branch(z2)
    if b == "upper":
        return 0.5 - 19.0 / (90.0 * z2**2)
    if b == "middle":
        r = math.sqrt(225.0 * z2 - 5.0)
        return 1.0 - (630.0 * z2 * r + 28.0 * r - 20.0) / (14175.0 * z2**2)
    if b == "lower":
        return 1.0 - (32.0 / 105.0) * SQ2 * _lower_cap(z2) ** 3.5 / z2**2
    return energy_q(single_seed_weight(z2), z2)


def single_seed_solution(z2):
    return SingleSeedSolution(z2, single_seed_weight(z2), single_seed_internal_energy(z2), branch(z2))


def single_seed_trajectory(z0, t):
    """Position at time t: uniform horizontal drift at speed E_I(z2)."""
    z1, z2 = float(z0[0]), float(z0[1])
    return np.array([z1 + single_seed_internal_energy(z2) * t, z2])
