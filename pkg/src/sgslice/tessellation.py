"""c-Laguerre cells as convex chart polygons built by half-plane clipping.

Each cell is first bounded by a box whose vertical sides are the bisectors with
the seed's own periodic images (x1 = z1 -+ period/2), whose bottom is p2 = 0
(below the bottom wall everywhere) and whose top is the chord of the top wall
over the box (above the top wall everywhere).  The box is then clipped by the
bisectors against every other seed and its nearest periodic images.  The walls
are not clipped here; the integration layer intersects each polygon with the
exact parabolic walls.
"""

from dataclasses import dataclass, field
from typing import NamedTuple

import math

import numpy as np

from .errors import DegenerateSeedsError
from .geometry import affine_coeffs, chart_domain_area


class EdgeLabel(NamedTuple):
    """Provenance of a polygon edge.

    kind is "nbr" (bisector with seed ``index`` shifted by ``shift`` periods),
    "self" (bisector with the owner's own image at ``shift``), "box" (artificial
    bounding edge, index 0 bottom / 1 top) or "clip" (user half-plane).
    """

    kind: str
    index: int = -1
    shift: int = 0


@dataclass
class ChartPolygon:
    """Convex polygon with counterclockwise vertices; edge k joins vertex k to k+1."""

    vertices: np.ndarray
    labels: list
    owner: int = -1

    @classmethod
    def empty(cls, owner=-1):
        return cls(np.zeros((0, 2)), [], owner)

    @classmethod
    def from_vertices(cls, vertices, label=None, owner=-1):
        v = np.asarray(vertices, dtype=float)
        return cls(v, [label or EdgeLabel("box")] * len(v), owner)

    @property
    def is_empty(self):
        return len(self.vertices) < 3

    def edges(self):
        """Iterate over (start, end, label)."""
        v = self.vertices
        for k in range(len(v)):
            yield v[k], v[(k + 1) % len(v)], self.labels[k]


def cell_area(poly):
    """Shoelace area of a convex counterclockwise polygon."""
    if poly.is_empty:
        return 0.0
    x, y = poly.vertices[:, 0], poly.vertices[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def _clip(verts, labels, normal, offset, label, tol):
    """Sutherland-Hodgman step on a list of (x, y) tuples.

    Plain floats are used because polygons have a handful of vertices and
    numpy's per-call overhead would dominate.
    """
    nx, ny = float(normal[0]), float(normal[1])
    offset = float(offset)
    d = [x * nx + y * ny - offset for x, y in verts]
    inside = [v <= tol for v in d]
    if all(inside):
        return verts, labels
    if not any(inside):
        return [], []
    out_v, out_l = [], []
    n = len(verts)
    for k in range(n):
        k1 = k + 1 if k + 1 < n else 0
        if inside[k]:
            out_v.append(verts[k])
            out_l.append(labels[k])
            if not inside[k1]:
                out_v.append(_cut(verts[k], verts[k1], d[k], d[k1]))
                out_l.append(label)
        elif inside[k1]:
            out_v.append(_cut(verts[k], verts[k1], d[k], d[k1]))
            out_l.append(labels[k])
    return _merge(out_v, out_l, tol)


def _cut(a, b, da, db):
    s = min(max(da / (da - db), 0.0), 1.0)
    return (a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1]))


def _merge(verts, labels, tol):
    """Drop vertices that coincide with their successor (zero-length edges)."""
    k = 0
    while k < len(verts) and len(verts) >= 2:
        a, b = verts[k], verts[(k + 1) % len(verts)]
        if math.hypot(b[0] - a[0], b[1] - a[1]) <= tol:
            del verts[k]
            del labels[k]
        else:
            k += 1
    if len(verts) < 3:
        return [], []
    return verts, labels


def clip_polygon(poly, hp, tol=None):
    """Intersection of a convex polygon with the half-plane ``hp``."""
    if poly.is_empty:
        return ChartPolygon.empty(poly.owner)
    normal = np.asarray(hp.normal, dtype=float)
    nn = float(np.hypot(*normal))
    if tol is None:
        tol = 1e-12 * max(1.0, float(np.abs(poly.vertices).max()))
    label = hp.label if hp.label is not None else EdgeLabel("clip")
    v, lab = _clip([tuple(p) for p in poly.vertices], list(poly.labels), normal / nn, hp.offset / nn, label, tol)
    return ChartPolygon(np.array(v, dtype=float).reshape(-1, 2), lab, poly.owner)


@dataclass
class Tessellation:
    """Chart polygons of all cells for fixed seeds and weights.

    ``adjacency`` is an (E, 2) array of ordered pairs (i, j), i != j, for cells
    sharing a bisector edge of positive length inside the slice; it is filled by
    the integration layer, which knows where the walls cut the edges.
    """

    seeds: np.ndarray
    weights: np.ndarray
    cp: object
    domain: object
    cells: list
    copies: int = 1
    adjacency: np.ndarray = field(default_factory=lambda: np.zeros((0, 2), dtype=int))

    @property
    def n(self):
        return len(self.cells)

    def chart_area(self):
        return chart_domain_area(self.domain, self.cp)


def _box(z1, cp, domain):
    F2 = cp.F**2
    a = F2 * (z1 - 0.5 * domain.period)
    b = F2 * (z1 + 0.5 * domain.period)
    top = cp.G * domain.height
    ta = top + a * a / (2 * F2)
    tb = top + b * b / (2 * F2)
    verts = np.array([[a, 0.0], [b, 0.0], [b, tb], [a, ta]])
    labels = [EdgeLabel("box", 0), EdgeLabel("self", -1, 1), EdgeLabel("box", 1), EdgeLabel("self", -1, -1)]
    return verts, labels


def minimal_images(seeds, i, period):
    """z1 of every seed shifted into [z1_i - period/2, z1_i + period/2)."""
    d = seeds[:, 0] - seeds[i, 0]
    k = -np.floor(d / period + 0.5)
    return seeds[:, 0] + k * period, k.astype(int)


_BLOCK = 64
_HEAD = 24


def _clip_all(verts, labels, nrm, off, src, shift, tol):
    """Apply every violated bisector, most violated first."""
    while len(off):
        viol = (np.array(verts) @ nrm.T).max(axis=0) - off
        keep = np.flatnonzero(viol > tol)
        if not len(keep):
            break
        m = keep[np.argmax(viol[keep])]
        verts, labels = _clip(verts, labels, nrm[m], off[m], EdgeLabel("nbr", int(src[m]), int(shift[m])), tol)
        if not verts:
            break
        # the polygon only shrinks, so satisfied bisectors stay satisfied
        keep = keep[keep != m]
        nrm, off, src, shift = nrm[keep], off[keep], src[keep], shift[keep]
    return verts, labels


def _candidates(seeds, weights, cp, domain, block, copies, tol):
    """Normalised bisectors (normal, offset, source, shift) that cut each cell's box.

    Bisectors that miss the box can never cut the shrinking polygon, so they
    are dropped here with one vectorised test per block of cells.
    """
    n = seeds.shape[0]
    P = domain.period
    F2 = cp.F**2
    ks = np.arange(-copies, copies + 1)
    z1, z2 = seeds[:, 0], seeds[:, 1]
    A, b = affine_coeffs(seeds, weights, cp)
    d = z1[None, :] - z1[block, None]
    kmin = -np.floor(d / P + 0.5)
    shift = kmin[:, None, :] + ks[None, :, None]
    z1c = z1[None, None, :] + shift * P
    n1 = A[block, 0][:, None, None] + z1c / z2
    n2 = np.broadcast_to(A[block, 1][:, None, None] - 1.0 / z2, n1.shape)
    off = F2 * z1c**2 / (2.0 * z2) - cp.c0 - weights - b[block][:, None, None]
    length = np.hypot(n1, n2)
    own = block[:, None, None] == np.arange(n)[None, None, :]
    bad = (length <= 1e-14 * np.abs(A[block]).max(axis=1)[:, None, None]) & ~own
    if bad.any():
        i, _, j = np.argwhere(bad)[0]
        raise DegenerateSeedsError(f"seeds {block[i]} and {j} coincide")
    length = np.where(own, 1.0, length)
    n1, n2, off = n1 / length, n2 / length, off / length
    top = cp.G * domain.height
    pa = F2 * (z1[block] - 0.5 * P)
    pb = F2 * (z1[block] + 0.5 * P)
    corners = [(pa, 0.0), (pb, 0.0), (pb, top + pb * pb / (2 * F2)), (pa, top + pa * pa / (2 * F2))]
    viol = np.max([c1[:, None, None] * n1 + np.broadcast_to(c2, pa.shape)[:, None, None] * n2 for c1, c2 in corners], axis=0) - off
    hit = (viol > tol) & ~own
    src = np.broadcast_to(np.arange(n), n1.shape)
    for r in range(len(block)):
        h = np.flatnonzero(hit[r].ravel())
        # nearest lift points first: they are the likely neighbours
        h = h[np.argsort(length[r].ravel()[h], kind="stable")]
        yield (np.column_stack([n1[r].ravel()[h], n2[r].ravel()[h]]), off[r].ravel()[h],
               src[r].ravel()[h], shift[r].ravel()[h].astype(int))


def build_tessellation(seeds, weights, cp, domain, copies=1):
    """Clip every cell's box by the bisectors against all competitors.

    Competitors of cell i are the other seeds moved to their minimal image with
    respect to z1_i, plus their images at -copies..copies further periods. The
    most violated bisector is applied first, which shrinks polygons quickly.
    """
    seeds = np.atleast_2d(np.asarray(seeds, dtype=float))
    weights = np.asarray(weights, dtype=float)
    n = seeds.shape[0]
    P = domain.period
    scale = max(cp.F**2 * P, cp.G * domain.height)
    tol = 1e-12 * scale
    cells = []
    for start in range(0, n, _BLOCK):
        block = np.arange(start, min(n, start + _BLOCK))
        for i, (nrm, off, src, shift) in zip(block, _candidates(seeds, weights, cp, domain, block, copies, tol)):
            box, labels = _box(seeds[i, 0], cp, domain)
            verts = [tuple(p) for p in box]
            for lab_k in (1, 3):
                labels[lab_k] = EdgeLabel("self", int(i), labels[lab_k].shift)
            head = min(len(off), _HEAD)
            verts, labels = _clip_all(verts, labels, nrm[:head], off[:head], src[:head], shift[:head], tol)
            if verts and head < len(off):
                rest = slice(head, None)
                verts, labels = _clip_all(verts, labels, nrm[rest], off[rest], src[rest], shift[rest], tol)
            cells.append(ChartPolygon(np.array(verts, dtype=float).reshape(-1, 2), labels, int(i)))
    return Tessellation(seeds, weights, cp, domain, cells, copies)
