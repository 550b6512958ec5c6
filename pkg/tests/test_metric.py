import math

import numpy as np
import pytest

from core.errors import LabError
from harmonic_module import constant, indicator, lorentzian, random_cauchy_mixture
from leafgeom_module import SectorChart, sector_of
from metric_module import (
    from_formula, on_halfplane, on_sector, tau_at, rho_at, curvature_at, metric_sample, mu_density, chi_at,
    metric_norm, flow_step, conjugate_change, poincare_density, ahlfors_schwarz_gap, mu_mass, mass_profile,
    CHI_SCALE
)

LAM = -1 + 1j


def linear():
    return from_formula(lambda x, y: x, distance=lambda x, y: x, description="x")


def test_tau_examples():
    assert tau_at(linear(), (2.0, 0.5)) == pytest.approx(0.25, abs=1e-12)
    assert tau_at(from_formula(lambda x, y: 1.0), (0.3, 0.4)) == 0


def test_curvature_of_explicit_functions():
    assert curvature_at(linear(), (1.5, 0.2)) == pytest.approx(-1, abs=1e-8)
    square = from_formula(lambda x, y: x * x, distance=lambda x, y: x)
    assert curvature_at(square, (1.2, -0.7)) == pytest.approx(-0.5, abs=1e-7)
    with pytest.raises(LabError) as err:
        curvature_at(from_formula(lambda x, y: 1.0), (0.0, 0.0))
    assert err.value.code == "metric-degenerate"


def test_curvature_is_minus_one_for_positive_harmonic(rng):
    checked = 0
    for _ in range(5):
        h = on_halfplane(random_cauchy_mixture(rng))
        for _ in range(20):
            p = (rng.uniform(-3, 3), rng.uniform(0.3, 3))
            if abs(h.h_z(p)) < 1e-2 * h.value(p):
                continue
            sample = metric_sample(h, p)
            assert sample.kappa == pytest.approx(-1, abs=1e-4)
            assert abs(sample.kappa_imag) < 1e-4
            checked += 1
    assert checked > 50


def test_nonpositive_harmonic_is_rejected():
    with pytest.raises(LabError) as err:
        tau_at(from_formula(lambda x, y: x), (-1.0, 0.0))
    assert err.value.code == "nonpositive-harmonic"


def test_mu_density_scaling():
    assert mu_density(linear(), (2.0, 0.0)) == pytest.approx(0.125, rel=1e-12)
    h = on_halfplane(lorentzian())
    scaled = on_halfplane(lorentzian())
    scaled.func = lambda x, y: 3 * h.value((x, y))
    for p in ((0.0, 1.0), (1.3, 0.4), (-2.0, 2.5)):
        assert mu_density(scaled, p) == pytest.approx(3 * mu_density(h, p), rel=1e-9)


def test_chi_is_a_unit_vector_field(rng):
    vector, scale = chi_at(linear(), (1.5, 0.3))
    assert scale == CHI_SCALE
    assert vector == pytest.approx([1.5, 0.0], abs=1e-10)
    assert metric_norm(linear(), (1.5, 0.3), vector) == pytest.approx(1, abs=1e-10)

    h = on_halfplane(random_cauchy_mixture(rng))
    for _ in range(30):
        p = (rng.uniform(-3, 3), rng.uniform(0.3, 3))
        if abs(h.h_z(p)) < 1e-6:
            continue
        assert metric_norm(h, p, chi_at(h, p)[0]) == pytest.approx(1, abs=1e-8)

    with pytest.raises(LabError) as err:
        chi_at(from_formula(lambda x, y: 1.0), (0.0, 0.0))
    assert err.value.code == "metric-degenerate"


def test_flow_follows_gradient_of_linear_function():
    h = linear()
    q = flow_step(h, (1.0, 0.5), 0.1)
    assert q[1] == pytest.approx(0.5, abs=1e-12)
    assert q[0] == pytest.approx(math.exp(0.1), rel=1e-6)
    assert h.value(q) > 1.0
    assert abs(conjugate_change(h, (1.0, 0.5), q)) < 1e-12


def test_flow_preserves_conjugate_function():
    h = on_halfplane(lorentzian())
    p = start = (0.3, 2.0)
    for _ in range(20):
        q = flow_step(h, p, 0.01)
        assert h.value(q) > h.value(p)
        p = q
    assert abs(conjugate_change(h, start, p)) < 1e-6


def test_flow_stops_at_critical_set():
    with pytest.raises(LabError) as err:
        flow_step(from_formula(lambda x, y: 1.0), (0.0, 0.0), 0.1)
    assert err.value.code == "hit-critical-set"


def test_schwarz_gap_vanishes_for_halfplane_isometry():
    chart = SectorChart(lam=1j, theta_max=math.pi, gamma=1.0)
    h = from_formula(lambda x, y: y, distance=lambda x, y: y)
    for p in ((0.3, 0.7), (-2.0, 0.1), (5.0, 3.0)):
        assert ahlfors_schwarz_gap(chart, h, p) == pytest.approx(0, abs=1e-9 * poincare_density(chart, p))
    flat = from_formula(lambda x, y: 1.0)
    assert ahlfors_schwarz_gap(chart, flat, (0.3, 0.7)) == pytest.approx(poincare_density(chart, (0.3, 0.7)))


def test_schwarz_gap_is_nonnegative_on_sector(rng, default_config):
    default_config.metric.h_fd = 1e-4
    chart = sector_of(1j)
    h = on_sector(indicator(-1, 1), chart)
    for _ in range(200):
        rho, theta = rng.uniform(0.3, 2), rng.uniform(0.2, math.pi / 2 - 0.2)
        p = (rho * math.cos(theta), rho * math.sin(theta))
        rho_p = poincare_density(chart, p)
        assert ahlfors_schwarz_gap(chart, h, p) >= -1e-6 * max(1.0, rho_p)
        assert rho_at(h, p) <= rho_p * (1 + 1e-6)


def test_constant_data_gives_zero_mass():
    value, error = mu_mass(sector_of(LAM), constant(2.0), panels=8)
    assert value == pytest.approx(0, abs=1e-12) and error < 1e-12


def test_lorentzian_mass_over_full_bidisc():
    value, error = mu_mass(sector_of(LAM), lorentzian(), panels=16)
    assert value == pytest.approx(math.pi / 4, rel=1e-3)
    assert error < 1e-3


def test_mass_shrinks_with_bidisc():
    rows = mass_profile(sector_of(LAM), lorentzian(), [0.05, 0.2, 0.1], panels=16)
    assert [r for r, _, _ in rows] == [0.2, 0.1, 0.05]
    masses = [value for _, value, _ in rows]
    assert masses[0] > masses[1] > masses[2] > 0
    assert masses[0] < math.pi / 4


def test_mass_radius_validation():
    for r in (0.0, 1.5):
        with pytest.raises(LabError) as err:
            mu_mass(sector_of(LAM), lorentzian(), r=r)
        assert err.value.code == "config"
