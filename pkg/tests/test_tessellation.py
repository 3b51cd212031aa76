import numpy as np
import pytest

from sgslice.errors import DegenerateSeedsError
from sgslice.geometry import CostParams, HalfPlane, SliceDomain, chart_inverse, cost
from sgslice.integrals import ConjugateDensity, evaluate_cells
from sgslice.tessellation import ChartPolygon, EdgeLabel, build_tessellation, cell_area, clip_polygon

CP = CostParams(1.0, 1.0, 1.0)
DOM = SliceDomain(2.0, 1.0)
CD = ConjugateDensity(2.0, 0.5)


def random_config(rng, n):
    z = np.column_stack([rng.uniform(-1, 1, n), rng.uniform(0.4, 2.5, n)])
    return z, rng.uniform(0.0, 0.6, n)


def test_clip_square():
    sq = ChartPolygon.from_vertices([[0, 0], [1, 0], [1, 1], [0, 1]])
    half = clip_polygon(sq, HalfPlane(np.array([1.0, 0.0]), 0.5, EdgeLabel("clip")))
    assert cell_area(half) == pytest.approx(0.5)
    assert sum(lab.kind == "clip" for lab in half.labels) == 1
    assert clip_polygon(sq, HalfPlane(np.array([1.0, 0.0]), -1.0)).is_empty
    assert cell_area(clip_polygon(sq, HalfPlane(np.array([1.0, 1.0]), 5.0))) == pytest.approx(1.0)


def test_clip_diagonal_triangle():
    sq = ChartPolygon.from_vertices([[0, 0], [2, 0], [2, 2], [0, 2]])
    tri = clip_polygon(sq, HalfPlane(np.array([1.0, 1.0]), 2.0))
    assert len(tri.vertices) == 3
    assert cell_area(tri) == pytest.approx(2.0)


def test_areas_partition_the_slice():
    rng = np.random.default_rng(11)
    for n in (1, 2, 7, 40):
        z, w = random_config(rng, n)
        ci = evaluate_cells(build_tessellation(z, w, CP, DOM), CD, need_moments=False)
        assert ci.area.sum() == pytest.approx(DOM.area, rel=1e-12)


def test_membership_matches_direct_minimisation():
    rng = np.random.default_rng(12)
    z, w = random_config(rng, 15)
    tess = build_tessellation(z, w, CP, DOM)
    pts = np.column_stack([rng.uniform(-1, 1, 400), rng.uniform(0, 1, 400)])
    scores = np.array([cost(pts, zi, CP, period=DOM.period) - wi for zi, wi in zip(z, w)])
    owner = scores.argmin(axis=0)
    for x, i in zip(pts, owner):
        poly = tess.cells[i]
        # move x to the image of the period that lies in cell i's box
        x = x.copy()
        x[0] += DOM.period * np.round((z[i, 0] - x[0]) / DOM.period)
        p = chart_inverse(x, CP)
        v = poly.vertices
        cross = (np.roll(v, -1, axis=0) - v)[:, 0] * (p[1] - v[:, 1]) - (np.roll(v, -1, axis=0) - v)[:, 1] * (p[0] - v[:, 0])
        assert np.all(cross >= -1e-10)


def test_extra_periodic_copies_do_not_change_masses():
    rng = np.random.default_rng(13)
    z, w = random_config(rng, 20)
    m1 = evaluate_cells(build_tessellation(z, w, CP, DOM, copies=1), CD, need_moments=False).mass
    m2 = evaluate_cells(build_tessellation(z, w, CP, DOM, copies=2), CD, need_moments=False).mass
    assert np.allclose(m1, m2, rtol=0, atol=1e-12)


def test_stacked_seeds_meet_on_horizontal_line():
    z = np.array([[0.0, 1.0], [0.0, 2.0]])
    tess = build_tessellation(z, np.zeros(2), CP, DOM)
    for cell in tess.cells:
        for a, b, lab in cell.edges():
            if lab.kind == "nbr":
                assert a[1] == pytest.approx(0.0, abs=1e-12)
                assert b[1] == pytest.approx(0.0, abs=1e-12)


def test_coincident_seeds_rejected():
    z = np.array([[0.1, 1.0], [0.1, 1.0]])
    with pytest.raises(DegenerateSeedsError):
        build_tessellation(z, np.zeros(2), CP, DOM)


def test_shifted_seed_gives_shifted_cells():
    rng = np.random.default_rng(14)
    z, w = random_config(rng, 6)
    zs = z.copy()
    zs[:, 0] += DOM.period
    a = evaluate_cells(build_tessellation(z, w, CP, DOM), CD)
    b = evaluate_cells(build_tessellation(zs, w, CP, DOM), CD)
    assert np.allclose(a.mass, b.mass, atol=1e-12)
    assert np.allclose(a.centroids()[:, 0] + DOM.period, b.centroids()[:, 0], atol=1e-9, equal_nan=True)
