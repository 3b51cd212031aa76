import numpy as np
import pytest

from sgslice.errors import DegenerateSeedsError, SingularSeedError
from sgslice.geometry import (
    CostParams,
    SliceDomain,
    affine_coeffs,
    bisector_halfplane,
    chart_domain_area,
    chart_forward,
    chart_forward_general,
    chart_inverse,
    cost,
    domain_boundary_chart,
    lift_value,
    loeper_lift,
    replicate_periodic,
)

UNIT = CostParams(1.0, 1.0, 0.0)


def test_cost_formula():
    cp = CostParams(2.0, 3.0, 0.5)
    x, z = np.array([0.4, 0.2]), np.array([0.1, 1.5])
    assert cost(x, z, cp) == pytest.approx(4.0 / 3.0 * 0.09 + 3.0 * 0.2 / 1.5 - 0.5)


def test_cost_periodic_uses_nearest_image():
    z = np.array([0.9, 1.0])
    assert cost([-0.9, 0.0], z, UNIT, period=2.0) == pytest.approx(0.5 * 0.2**2)


def test_singular_seed():
    with pytest.raises(SingularSeedError):
        cost([0.0, 0.0], [0.0, 0.0], UNIT)
    with pytest.raises(SingularSeedError):
        affine_coeffs([[0.0, -1.0]], [0.0], UNIT)


def test_bottom_wall_maps_to_parabola():
    p1 = np.linspace(-2, 2, 9)
    p = chart_inverse(np.column_stack([p1, np.zeros_like(p1)]), UNIT)
    assert np.allclose(p[:, 1], p[:, 0] ** 2 / 2)


def test_general_chart_at_unit_seed_matches_base_chart():
    rng = np.random.default_rng(0)
    p = rng.normal(size=(5, 2))
    assert np.allclose(chart_forward_general(p, (0.0, 1.0), UNIT), chart_forward(p, UNIT))


@pytest.mark.parametrize("z, y, psi", [((0.0, 1.0), (0.0, -0.5), 0.25), ((0.0, 2.0), (0.0, -0.25), 1.0 / 16)])
def test_loeper_lift_values(z, y, psi):
    lift = loeper_lift(np.array(z), 0.0, UNIT)
    assert np.allclose(lift.y_lift, y)
    assert lift.psi == pytest.approx(psi)


def test_lift_identity():
    rng = np.random.default_rng(3)
    cp = CostParams(1.3, 0.8, 0.4)
    for _ in range(20):
        z = np.array([rng.uniform(-1, 1), rng.uniform(0.3, 3)])
        w = rng.normal()
        p = rng.normal(size=2)
        lhs = lift_value(p, loeper_lift(z, w, cp))
        assert lhs == pytest.approx(cost(chart_forward(p, cp), z, cp) - w, abs=1e-12)


def test_bisector_of_stacked_seeds_is_horizontal():
    for c0 in (0.0, 2.5):
        cp = UNIT.with_c0(c0)
        hp = bisector_halfplane(loeper_lift(np.array([0.0, 1.0]), 0.3, cp), loeper_lift(np.array([0.0, 2.0]), 0.3, cp))
        n = hp.normal / np.abs(hp.normal).max()
        assert np.allclose(n, [0.0, 1.0])
        assert hp.offset == pytest.approx(0.0, abs=1e-15)


def test_bisector_agrees_with_affine_form():
    rng = np.random.default_rng(4)
    zi, zj = np.array([0.2, 1.1]), np.array([-0.4, 2.3])
    wi, wj = 0.1, -0.2
    hp = bisector_halfplane(loeper_lift(zi, wi, UNIT), loeper_lift(zj, wj, UNIT))
    A, b = affine_coeffs(np.array([zi, zj]), [wi, wj], UNIT)
    for p in rng.normal(size=(50, 2)):
        assert hp.contains(p) == (A[0] @ p + b[0] <= A[1] @ p + b[1] + 1e-12) or abs((A[0] - A[1]) @ p + b[0] - b[1]) < 1e-9


def test_coincident_seeds():
    lift = loeper_lift(np.array([0.0, 1.0]), 0.0, UNIT)
    with pytest.raises(DegenerateSeedsError):
        bisector_halfplane(lift, lift)


def test_replicate_periodic():
    seeds = np.array([[0.1, 1.0], [0.5, 2.0]])
    out, src, shift = replicate_periodic(seeds, 2.0, copies=1)
    assert out.shape == (6, 2)
    assert np.allclose(out[src == 0, 0], [-1.9, 0.1, 2.1])
    assert list(shift) == [-1, -1, 0, 0, 1, 1]


def test_single_secant_bottom():
    dom = SliceDomain(2.0, 1.0, -1.0)
    hps = domain_boundary_chart(dom, UNIT, 1)
    bottom = [h for h in hps if h.label[1] == "bottom"][0]
    for p in ([-1.0, 0.5], [1.0, 0.5]):
        assert bottom.normal @ np.array(p) == pytest.approx(bottom.offset)


def test_bottom_secants_converge_quadratically():
    dom = SliceDomain(2.0, 1.0, -1.0)
    xs = np.linspace(-1.0, 1.0, 20001)
    gaps = []
    for n in (4, 8, 16, 32):
        bottom = [h for h in domain_boundary_chart(dom, UNIT, n) if h.label[1] == "bottom"]
        # p2 >= chord: normal = (slope, -1), so chord = (normal_0 p1 - offset)
        chord = np.max([h.normal[0] * xs - h.offset for h in bottom], axis=0)
        gap = np.trapezoid(chord - xs**2 / 2, xs) if hasattr(np, "trapezoid") else np.trapz(chord - xs**2 / 2, xs)
        assert gap == pytest.approx(dom.period**3 / (12 * n * n), rel=1e-4)
        gaps.append(gap)
    assert np.allclose(np.array(gaps[:-1]) / np.array(gaps[1:]), 4.0, rtol=1e-3)
    assert chart_domain_area(dom, UNIT) == pytest.approx(2.0)


def test_domain_properties():
    dom = SliceDomain(0.2, 0.1)
    assert dom.x1_min == pytest.approx(-0.1)
    assert dom.area == pytest.approx(0.02)
    assert dom.diameter == pytest.approx(np.hypot(0.2, 0.1))
