"""Independent reference computations used by the tests.

Cell integrals are recomputed by tensor Gauss-Legendre quadrature over
vertical chart slices: the p1 axis is split at every vertex, every crossing of
an edge with a wall parabola and every crossing of the zero level of t with
the cell boundary, and each slice is split where t vanishes.
"""

import math

import numpy as np

GL_X, GL_W = np.polynomial.legendre.leggauss(24)
GL_X = 0.5 * (GL_X + 1.0)
GL_W = 0.5 * GL_W


def _gauss(a, b):
    return a + (b - a) * GL_X, (b - a) * GL_W


def _slice(verts, p1):
    """[lo, hi] of the convex polygon on the vertical line at p1."""
    ys = []
    n = len(verts)
    for k in range(n):
        (xa, ya), (xb, yb) = verts[k], verts[(k + 1) % n]
        if min(xa, xb) <= p1 <= max(xa, xb) and xa != xb:
            ys.append(ya + (p1 - xa) * (yb - ya) / (xb - xa))
    if not ys:
        return None
    return min(ys), max(ys)


def _quad_roots(c0, c1, c2):
    if abs(c2) < 1e-300:
        return [] if c1 == 0 else [-c0 / c1]
    disc = c1 * c1 - 4 * c2 * c0
    if disc < 0:
        return []
    s = math.sqrt(disc)
    return [(-c1 - s) / (2 * c2), (-c1 + s) / (2 * c2)]


def cell_integrals_oracle(verts, z, w, F, G, c0, height, gamma, kappa):
    """mass, x1 moment, x2 moment, int sigma^gamma and int (f*)'' for one chart polygon."""
    verts = np.asarray(verts, dtype=float)
    F2 = F * F
    curv = 1.0 / (2 * F2)
    top = G * height
    A1, A2 = -z[0] / z[1], 1.0 / z[1]
    b = F2 * z[0] ** 2 / (2 * z[1]) - c0 - w
    # t(p) = -(A1 p1 + A2 p2 + b)
    r = 1.0 / (gamma - 1.0)
    K = (kappa * gamma) ** (-r)
    jac = 1.0 / (F2 * G)

    xs = set(verts[:, 0].tolist())
    n = len(verts)
    for k in range(n):
        (xa, ya), (xb, yb) = verts[k], verts[(k + 1) % n]
        if xa == xb:
            continue
        m = (yb - ya) / (xb - xa)
        for base in (0.0, top):
            # ya + m (p1 - xa) = base + curv p1^2
            for root in _quad_roots(ya - m * xa - base, m, -curv):
                if min(xa, xb) < root < max(xa, xb):
                    xs.add(root)
    # zero line of t meets the parabolas
    for base in (0.0, top):
        for root in _quad_roots(-(b + A2 * base), -A1, -A2 * curv):
            xs.add(root)
    # zero line meets polygon edges
    for k in range(n):
        pa, pb = verts[k], verts[(k + 1) % n]
        ta = -(A1 * pa[0] + A2 * pa[1] + b)
        tb = -(A1 * pb[0] + A2 * pb[1] + b)
        if ta * tb < 0:
            xs.add(pa[0] + ta / (ta - tb) * (pb[0] - pa[0]))
    lo_x, hi_x = verts[:, 0].min(), verts[:, 0].max()
    xs = sorted(x for x in xs if lo_x <= x <= hi_x)

    out = np.zeros(5)
    for a, bnd in zip(xs[:-1], xs[1:]):
        if bnd - a <= 0:
            continue
        P1, W1 = _gauss(a, bnd)
        for p1, w1 in zip(P1, W1):
            sl = _slice(verts, p1)
            if sl is None:
                continue
            lo = max(sl[0], curv * p1 * p1)
            hi = min(sl[1], top + curv * p1 * p1)
            if hi <= lo:
                continue
            # t decreases in p2; positive below p2 = -(b + A1 p1) / A2
            cut = min(hi, -(b + A1 * p1) / A2)
            if cut <= lo:
                continue
            P2, W2 = _gauss(lo, cut)
            t = -(A1 * p1 + A2 * P2 + b)
            tp = np.maximum(t, 0.0)
            sigma = K * tp**r
            x1 = p1 / F2
            x2 = (P2 - p1 * p1 / (2 * F2)) / G
            vals = np.array([
                np.sum(W2 * sigma),
                np.sum(W2 * sigma * x1),
                np.sum(W2 * sigma * x2),
                np.sum(W2 * sigma**gamma),
                np.sum(W2 * K * r * tp ** (r - 1)),
            ])
            out += w1 * jac * vals
    return out
