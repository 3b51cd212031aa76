"""Slice cost, the c-exponential chart and the half-plane form of cell boundaries.

All cells live in one chart based at y = (0, 1):

    Phi(p) = (p1 / F^2, (p2 - p1^2 / (2 F^2)) / G)

In this chart the cost of every seed is affine,

    c(Phi(p), z) - w = A(z) . p + b(z, w),
    A = (-z1 / z2, 1 / z2),   b = F^2 z1^2 / (2 z2) - c0 - w,

so the boundary between two cells is a straight line.  The physical walls
x2 = 0 and x2 = h become the parabolas p2 = p1^2 / (2 F^2) and
p2 = G h + p1^2 / (2 F^2).
"""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DegenerateSeedsError, SingularSeedError


@dataclass(frozen=True)
class CostParams:
    F: float = 1.0
    G: float = 1.0
    c0: float = 0.0

    def with_c0(self, c0):
        return CostParams(self.F, self.G, c0)


@dataclass(frozen=True)
class SliceDomain:
    """Periodic slice [x1_min, x1_min + period) x [0, height], non-dimensional."""

    period: float
    height: float
    x1_min: float = None

    def __post_init__(self):
        if self.x1_min is None:
            object.__setattr__(self, "x1_min", -0.5 * self.period)

    @property
    def area(self):
        return self.period * self.height

    @property
    def diameter(self):
        return float(np.hypot(self.period, self.height))


class LoeperLift(NamedTuple):
    y_lift: np.ndarray
    psi: float


class HalfPlane(NamedTuple):
    """The set {p : normal . p <= offset}."""

    normal: np.ndarray
    offset: float
    label: tuple = None

    def contains(self, p, tol=0.0):
        return np.asarray(p) @ self.normal <= self.offset + tol


def _check_z2(z2):
    if np.any(np.asarray(z2) <= 0):
        raise SingularSeedError("seed height z2 must be positive")


def cost(x, z, cp, period=None):
    """c(x, z) = F^2/(2 z2) (x1 - z1)^2 + G x2 / z2 - c0.

    ``x`` and ``z`` broadcast over leading axes. With ``period`` the minimal
    periodic image of x1 - z1 is used.
    """
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    _check_z2(z[..., 1])
    d = x[..., 0] - z[..., 0]
    if period is not None:
        d = d - period * np.round(d / period)
    return cp.F**2 * d**2 / (2.0 * z[..., 1]) + cp.G * x[..., 1] / z[..., 1] - cp.c0


def chart_forward(p, cp):
    p = np.asarray(p, dtype=float)
    F2 = cp.F**2
    x1 = p[..., 0] / F2
    x2 = (p[..., 1] - p[..., 0] ** 2 / (2.0 * F2)) / cp.G
    return np.stack([x1, x2], axis=-1)


def chart_inverse(x, cp):
    x = np.asarray(x, dtype=float)
    F2 = cp.F**2
    return np.stack([F2 * x[..., 0], cp.G * x[..., 1] + F2 * x[..., 0] ** 2 / 2.0], axis=-1)


def chart_forward_general(p, y, cp):
    """Chart based at an arbitrary seed y = (y1, y3)."""
    p = np.asarray(p, dtype=float)
    F2 = cp.F**2
    x1 = y[1] * p[..., 0] / F2 + y[0]
    x2 = (y[1] ** 2 / cp.G) * (p[..., 1] - p[..., 0] ** 2 / (2.0 * F2))
    return np.stack([x1, x2], axis=-1)


def chart_jacobian(cp):
    """|det D Phi|, constant over the chart."""
    return 1.0 / (cp.F**2 * cp.G)


def affine_coeffs(z, w, cp):
    """(A, b) with c(Phi(p), z) - w = A . p + b for each seed."""
    z = np.atleast_2d(np.asarray(z, dtype=float))
    _check_z2(z[:, 1])
    w = np.broadcast_to(np.asarray(w, dtype=float), (z.shape[0],))
    A = np.column_stack([-z[:, 0] / z[:, 1], 1.0 / z[:, 1]])
    b = cp.F**2 * z[:, 0] ** 2 / (2.0 * z[:, 1]) - cp.c0 - w
    return A, b


def loeper_lift(z, w, cp):
    z1, z2 = float(z[0]), float(z[1])
    _check_z2(z2)
    y = np.array([z1, -1.0]) / (2.0 * z2)
    psi = w + (z1 / (2 * z2)) ** 2 + (1 / (2 * z2)) ** 2 - cp.F**2 * z1**2 / (2 * z2) + cp.c0
    return LoeperLift(y, psi)


def lift_value(p, lift):
    """|p - y|^2 - |p|^2 - psi, which equals c(Phi(p), z) - w."""
    p = np.asarray(p, dtype=float)
    d = p - lift.y_lift
    return np.sum(d * d, axis=-1) - np.sum(p * p, axis=-1) - lift.psi


def bisector_halfplane(lift_i, lift_j, label=None):
    """Chart region where cell i beats cell j.

    Expanding the lift identity gives
    2 p.(y_j - y_i) <= |y_j|^2 - psi_j - |y_i|^2 + psi_i.
    """
    dy = lift_j.y_lift - lift_i.y_lift
    if not np.any(dy):
        raise DegenerateSeedsError("coincident seeds have no bisector")
    offset = (lift_j.y_lift @ lift_j.y_lift - lift_j.psi) - (lift_i.y_lift @ lift_i.y_lift - lift_i.psi)
    return HalfPlane(2.0 * dy, float(offset), label)


def replicate_periodic(seeds, period, copies=1):
    """Seeds shifted by k*period in z1 for k in -copies..copies.

    Returns (shifted seeds, source index, shift k) as arrays, ordered by shift
    then by index.
    """
    seeds = np.atleast_2d(np.asarray(seeds, dtype=float))
    n = seeds.shape[0]
    ks = np.arange(-copies, copies + 1)
    out = np.repeat(seeds[None, :, :], ks.size, axis=0).copy()
    out[:, :, 0] += ks[:, None] * period
    src = np.tile(np.arange(n), ks.size)
    shift = np.repeat(ks, n)
    return out.reshape(-1, 2), src, shift


def domain_boundary_chart(domain, cp, n_segments):
    """Half-plane approximation of the chart image of one period of the slice.

    The side walls are exact vertical lines. The bottom parabola is replaced by
    ``n_segments`` chords, which lie inside the true region. The top parabola is
    also replaced by chords; a convex polygon cannot be inscribed under a convex
    curve, so those chords overshoot slightly. The enclosed area converges to the
    exact one at O(n_segments^-2).
    """
    if n_segments < 1:
        raise ValueError("n_segments must be >= 1")
    F2, G = cp.F**2, cp.G
    a = F2 * domain.x1_min
    b = F2 * (domain.x1_min + domain.period)
    out = [
        HalfPlane(np.array([-1.0, 0.0]), -a, ("wall", "left", 0)),
        HalfPlane(np.array([1.0, 0.0]), b, ("wall", "right", 0)),
    ]
    knots = np.linspace(a, b, n_segments + 1)
    for wall, base, sign in (("bottom", 0.0, -1.0), ("top", G * domain.height, 1.0)):
        for k in range(n_segments):
            u, v = knots[k], knots[k + 1]
            slope = (u + v) / (2.0 * F2)
            intercept = base - u * v / (2.0 * F2)
            # bottom: p2 >= slope p1 + intercept;  top: p2 <= slope p1 + intercept
            normal = sign * np.array([-slope, 1.0])
            out.append(HalfPlane(normal, sign * intercept, ("wall", wall, k)))
    return out


def chart_domain_area(domain, cp):
    """Exact chart area of one period: width F^2 P times vertical gap G h."""
    return cp.F**2 * domain.period * cp.G * domain.height
