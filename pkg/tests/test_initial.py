import math

import numpy as np
import pytest

from sgslice.errors import ConfigError
from sgslice.initial import (
    InitConfig,
    geostrophic_map,
    hydrostatic_exner,
    meridional_velocity,
    perturbation_norm,
    sample_fields,
    sample_particles,
    slice_domain,
    theta_base,
    theta_perturbation,
)
from sgslice.params import TABLE1, derive_scales

P = TABLE1
SC = derive_scales(P)


def test_theta_base():
    assert theta_base(P.H / 2, P) == pytest.approx(300.0)
    assert theta_base(P.H, P) == pytest.approx(300.0 * math.exp(0.0125), rel=1e-14)
    x3 = np.linspace(0, P.H, 11)
    assert np.all(np.diff(theta_base(x3, P)) > 0)


def test_perturbation_norm():
    h = 0.25
    ref = 2.0 * math.sqrt((h - math.tanh(h)) * (1 / math.tanh(h) - h))
    assert perturbation_norm(0.5) == pytest.approx(ref, rel=1e-14)
    assert perturbation_norm(0.5) == pytest.approx(0.27912, abs=5e-6)


def test_perturbation_mid_height_and_periodicity():
    cfg = InitConfig()
    x1 = np.linspace(-P.L, P.L, 7)
    mid = theta_perturbation(x1, P.H / 2, cfg, P)
    # the sinh term vanishes: only the sin(pi x1 / L) structure remains
    s = np.sin(np.pi * x1 / P.L)
    assert np.allclose(mid, mid[np.argmax(np.abs(s))] * s / s[np.argmax(np.abs(s))], atol=1e-12)
    for x3 in (0.0, 3000.0, P.H):
        assert theta_perturbation(-P.L, x3, cfg, P) == pytest.approx(theta_perturbation(P.L, x3, cfg, P), abs=1e-12)


def test_simpson_exner_against_closed_form():
    lam = P.N_bv**2 / P.g
    x3 = np.linspace(0.0, P.H, 65)
    theta = P.theta0 * np.exp(lam * x3)
    Pi = hydrostatic_exner(theta, x3, 1.0, P)
    exact = 1.0 - P.g / (P.c_p * P.theta0 * lam) * (1.0 - np.exp(-lam * x3))
    assert np.abs(Pi - exact).max() <= 1e-10


def test_non_positive_theta_rejected():
    with pytest.raises(ConfigError):
        hydrostatic_exner(np.array([300.0, -1.0, 300.0]), np.array([0.0, 1.0, 2.0]), 1.0, P)


def test_meridional_velocity_second_order():
    A, theta = 1e-3, 300.0
    errs = []
    for M in (32, 64, 128):
        dx = 2 * P.L / M
        x1 = -P.L + (np.arange(M) + 0.5) * dx
        Pi = (A * np.cos(np.pi * x1 / P.L))[:, None]
        v = meridional_velocity(Pi, np.full_like(Pi, theta), dx, P)[:, 0]
        exact = -P.c_p * theta * A * np.pi / (P.f_cor * P.L) * np.sin(np.pi * x1 / P.L)
        errs.append(np.abs(v - exact).max())
    rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(np.abs(rates - 2.0) < 0.05)


def test_geostrophic_map_reference_point():
    z = geostrophic_map(0.0, 0.0, P.theta0, P, SC)
    # g / f^2 = 1e9 m; divided by H2 = 1e6 m
    assert z == pytest.approx([0.0, 1000.0])
    z = geostrophic_map(1e5, 10.0, P.theta0, P, SC)
    assert z[0] == pytest.approx((1e5 + 10.0 / 1e-4) / 1e7)


def test_slice_domain():
    d = slice_domain(P, SC)
    assert d.period == pytest.approx(0.2) and d.height == pytest.approx(0.1)


def test_fields_have_wave_one_structure():
    f = sample_fields(InitConfig(M1=32, M2=8), P)
    assert np.all(f.theta_total > 0)
    v = f.v[:, 4]
    amp = np.abs(np.fft.rfft(v))
    assert np.argmax(amp) == 1
    assert np.count_nonzero(np.diff(np.sign(v)) != 0) + (np.sign(v[0]) != np.sign(v[-1])) == 2


def test_sample_particles():
    cfg = InitConfig(M1=12, M2=6)
    s = sample_particles(cfg, P, SC)
    assert s.seeds.shape == (72, 2)
    assert s.masses.sum() == pytest.approx(1.0, abs=1e-14)
    assert np.all(s.seeds[:, 1] > 0)
    assert len(np.unique(s.seeds, axis=0)) == 72
    assert s.mass_scale > 0
    d = sample_particles(InitConfig(M1=12, M2=6, masses="density"), P, SC)
    assert d.masses.sum() == pytest.approx(1.0) and d.masses.std() > 0


@pytest.mark.parametrize("kw", [{"Bu": 0.0}, {"M1": 1}, {"masses": "other"}, {"refine": 0}, {"surface_exner": 0.0}])
def test_init_config_validation(kw):
    with pytest.raises(ConfigError):
        InitConfig(**kw)
