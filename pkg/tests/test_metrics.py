import logging

import numpy as np
import pytest

from sgslice.errors import MetricError
from sgslice.metrics import (
    DiscreteMeasure,
    entropic_bias_floor,
    fit_slope,
    relative_error_series,
    sinkhorn,
    squared_distances,
    trajectory_error,
    wasserstein2_entropic,
)


def test_relative_error_series():
    assert np.array_equal(relative_error_series([2.0, 2.0, 2.0]), np.zeros(3))
    assert np.allclose(relative_error_series([1.0, 3.0]), [0.5, -0.5])
    with pytest.raises(MetricError):
        relative_error_series([1.0, -1.0])


def test_trajectory_error():
    z = np.array([[0.0, 1.0], [1.0, 2.0]])
    m = np.array([0.25, 0.75])
    assert trajectory_error(z, z, masses=m) == 0.0
    moved = z + [[0.0, 0.0], [0.3, 0.4]]
    assert trajectory_error(moved, z, 1.0, m) == pytest.approx(np.sqrt(0.75) * 0.5)
    single = trajectory_error(np.array([[0.3, 0.4]]), np.zeros((1, 2)), 1.0, np.array([1.0]))
    assert single == pytest.approx(0.5)
    perm = [1, 0]
    assert trajectory_error(moved[perm], z[perm], 2.0, m[perm]) == pytest.approx(trajectory_error(moved, z, 2.0, m))
    with pytest.raises(MetricError):
        trajectory_error(z, z[:1], masses=m)


def test_trajectory_error_uses_reference_masses():
    from sgslice.dynamics import ParticleState

    ref = ParticleState.initial([[0.0, 1.0]], [1.0])
    assert trajectory_error(np.array([[0.0, 1.5]]), ref) == pytest.approx(0.5)


def test_squared_distances_periodic():
    x = np.array([[0.9, 0.0]])
    y = np.array([[-0.9, 0.0]])
    assert squared_distances(x, y)[0, 0] == pytest.approx(3.24)
    assert squared_distances(x, y, period=2.0)[0, 0] == pytest.approx(0.04)


def test_two_diracs():
    for d in (0.1, 1.0, 5.0):
        mu = DiscreteMeasure.of([[0.0, 0.0]], [1.0])
        nu = DiscreteMeasure.of([[d, 0.0]], [1.0])
        assert wasserstein2_entropic(mu, nu) == pytest.approx(d, rel=1e-3)


def test_identical_measures_within_bias():
    rng = np.random.default_rng(41)
    pts = rng.random((30, 2))
    mu = DiscreteMeasure.of(pts, np.full(30, 1 / 30))
    diam = np.hypot(*(pts.max(0) - pts.min(0)))
    # the transport cost of the entropic plan is O(epsilon), so the distance bias is O(sqrt(epsilon))
    bias = wasserstein2_entropic(mu, mu)
    assert 0 < bias <= np.sqrt(1e-3) * diam
    assert entropic_bias_floor(mu) == pytest.approx(wasserstein2_entropic(mu, mu))


def test_symmetry_and_triangle():
    rng = np.random.default_rng(42)
    ms = [DiscreteMeasure.of(rng.random((8, 2)), np.full(8, 1 / 8)) for _ in range(3)]
    eps = 1e-4
    d = lambda a, b: wasserstein2_entropic(a, b, eps)
    assert d(ms[0], ms[1]) == pytest.approx(d(ms[1], ms[0]), abs=1e-10)
    slack = np.sqrt(eps * np.log(64))
    assert d(ms[0], ms[2]) <= d(ms[0], ms[1]) + d(ms[1], ms[2]) + slack


def test_marginals_and_renormalisation(caplog):
    rng = np.random.default_rng(43)
    a = rng.random(5)
    a = a / a.sum() * (1 + 5e-4)
    mu = DiscreteMeasure.of(rng.random((5, 2)), a)
    nu = DiscreteMeasure.of(rng.random((4, 2)), np.full(4, 0.25))
    with caplog.at_level(logging.WARNING, logger="sgslice.metrics"):
        res = sinkhorn(mu, nu)
    assert "renormalised" in caplog.text
    assert np.allclose(res.plan.sum(axis=0), 0.25, atol=1e-12)
    assert np.allclose(res.plan.sum(axis=1), a / a.sum(), atol=1e-7)


def test_mass_mismatch_and_bad_inputs():
    mu = DiscreteMeasure.of([[0.0, 0.0]], [1.01])
    nu = DiscreteMeasure.of([[1.0, 0.0]], [1.0])
    with pytest.raises(MetricError):
        sinkhorn(mu, nu)
    with pytest.raises(MetricError):
        DiscreteMeasure.of([[0.0, 0.0]], [-1.0])
    with pytest.raises(MetricError):
        DiscreteMeasure.of([[0.0, 0.0], [1.0, 1.0]], [1.0])
    with pytest.raises(MetricError):
        sinkhorn(nu, nu, epsilon=-1.0)


def test_non_convergence_raises():
    rng = np.random.default_rng(44)
    mu = DiscreteMeasure.of(rng.random((20, 2)), np.full(20, 0.05))
    nu = DiscreteMeasure.of(rng.random((20, 2)), np.full(20, 0.05))
    with pytest.raises(MetricError, match="did not converge"):
        sinkhorn(mu, nu, epsilon=1e-6, max_iter=10)


def test_fit_slope():
    x = np.array([1.0, 2.0, 4.0, 8.0])
    slope, resid = fit_slope(x, 3.0 * x**-0.5)
    assert slope == pytest.approx(-0.5) and resid == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(MetricError):
        fit_slope([1.0], [1.0])
    with pytest.raises(MetricError):
        fit_slope([1.0, 2.0], [0.0, 1.0])


def test_separated_blocks_with_mismatched_mass_raise():
    # each source point has its own far-away group of targets whose weights do
    # not add up to the source weight; at small epsilon no stable plan exists
    src = DiscreteMeasure.of([[0.0, 0.0], [0.0, 100.0]], [0.5002, 0.4998])
    dst = DiscreteMeasure.of([[0.0, 0.1], [0.1, 0.0], [0.0, 100.1], [0.1, 100.0]], [0.25] * 4)
    with pytest.raises(MetricError, match="did not converge"):
        sinkhorn(src, dst, epsilon=1.0, max_iter=2000)
