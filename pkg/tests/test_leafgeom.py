import math

import numpy as np
import pytest

from core.errors import LabError
from leafgeom_module import (
    sector_of, psi_param, psi_array, tangency_residual, model_tangency, to_halfplane, from_halfplane,
    holonomy_step, bidisc_window, leaf_coordinates, plaque_bounds,
    plaque_index, lowest_plaque
)

LAMBDAS = [1j, -1 + 1j, 0.5 - 0.5j]


def test_sector_exponents():
    assert sector_of(1j).gamma == 2
    assert sector_of(1j).theta_max == pytest.approx(math.pi / 2)
    chart = sector_of(-1 + 1j)
    assert chart.theta_max == pytest.approx(math.pi / 4)
    assert abs(chart.gamma - 4) < 1e-12
    chart = sector_of(1 + 2j)
    assert chart.theta_max == pytest.approx(2.0344439357957027, abs=1e-14)
    assert chart.gamma == pytest.approx(math.pi / (math.pi - math.atan(2)), rel=1e-14)
    assert chart.gamma == pytest.approx(1.54420, abs=1e-5)


def test_sector_requires_positive_imaginary_part():
    with pytest.raises(LabError) as err:
        sector_of(0.5 - 0.5j)
    assert err.value.code == "not-normalized"
    chart = sector_of(0.5 - 0.5j, allow_mirror=True)
    assert chart.mirrored
    assert chart.lam == 0.5 + 0.5j


def test_gamma_exceeds_one(rng):
    for _ in range(1000):
        lam = complex(rng.uniform(-5, 5), rng.uniform(1e-3, 5))
        chart = sector_of(lam)
        assert 0 < chart.theta_max < math.pi
        assert chart.gamma > 1


def test_psi_examples():
    p = psi_param(1j, 1, 0)
    assert (p.z, p.w) == (1, 1)
    p = psi_param(1j, 1, 2 * math.pi)
    assert p.z == pytest.approx(1)
    assert abs(p.w - math.exp(-2 * math.pi)) < 1e-15
    assert p.plaque_n == 1
    p = psi_param(1j, math.exp(-math.pi), 0)
    assert p.z == pytest.approx(-1)
    assert p.w == pytest.approx(1)


@pytest.mark.parametrize("lam", LAMBDAS)
def test_leaf_identities(lam, rng):
    a, b = lam.real, lam.imag
    alphas = np.exp(rng.uniform(-2, 0, 10000) + 1j * rng.uniform(0, 2 * math.pi, 10000))
    zetas = rng.uniform(-3, 10, 10000) + 1j * rng.uniform(-1, 3, 10000)
    for alpha, zeta in zip(alphas[:2000], zetas[:2000]):
        p = psi_param(lam, alpha, zeta)
        assert abs(abs(p.z) - math.exp(-zeta.imag)) <= 1e-12 * abs(p.z)
        expected = math.exp(-b * zeta.real - a * zeta.imag)
        assert abs(abs(p.w) - expected) <= 1e-12 * expected
        assert tangency_residual(lam, alpha, zeta) < 1e-12


def test_tangency_detects_wrong_branch():
    lam, alpha, zeta = 1j, 0.5, 0.3 + 0.2j
    t = zeta + math.log(abs(alpha)) / lam.imag
    z = np.exp(1j * t)
    w_wrong = alpha * np.exp(1j * np.conj(lam) * t)
    assert model_tangency(lam, z, w_wrong, 1j * z, 1j * np.conj(lam) * w_wrong) > 0.1
    assert tangency_residual(lam, 1, 0) < 1e-14


def test_to_halfplane_examples():
    chart = sector_of(1j)
    u, v = to_halfplane(chart, np.exp(1j * math.pi / 4))
    assert u == pytest.approx(0, abs=1e-15)
    assert v == pytest.approx(1)
    assert to_halfplane(chart, 1j) == (-1.0, 0.0)
    chart4 = sector_of(-1 + 1j)
    u, v = to_halfplane(chart4, 2 * np.exp(1j * math.pi / 8))
    assert u == pytest.approx(0, abs=1e-12)
    assert v == pytest.approx(16)
    with pytest.raises(LabError) as err:
        to_halfplane(chart, -1 - 1j)
    assert err.value.code == "outside-sector"


def test_halfplane_edges_and_injectivity():
    chart = sector_of(-1 + 1j)
    for rho in (0.5, 1.0, 2.0):
        assert abs(to_halfplane(chart, rho)[1]) < 1e-12
        assert abs(to_halfplane(chart, rho * np.exp(1j * chart.theta_max))[1]) < 1e-12
    grid = [r * np.exp(1j * t) for r in np.linspace(0.2, 2, 15) for t in np.linspace(0.05, chart.theta_max - 0.05, 15)]
    images = np.array([complex(*to_halfplane(chart, z)) for z in grid])
    diffs = np.abs(images[:, None] - images[None, :]) + np.eye(len(images))
    assert diffs.min() > 1e-9
    for z in grid[:20]:
        assert from_halfplane(chart, *to_halfplane(chart, z)) == pytest.approx(z, abs=1e-12)


def test_holonomy():
    w = 1 - 1e-15
    w1 = holonomy_step(1j, w)
    assert abs(abs(w1) / abs(w) - math.exp(-2 * math.pi)) < 1e-12 * math.exp(-2 * math.pi)
    assert holonomy_step(1j, 0) == 0
    w2 = holonomy_step(1j, w1)
    assert abs(abs(w2) - abs(w) * math.exp(-4 * math.pi)) <= 1e-12 * abs(w2)


def test_holonomy_matches_psi(rng):
    lam = -1 + 1j
    alpha = 0.7 * np.exp(0.4j)
    zeta = 0.3 + 0.1j
    p = psi_param(lam, alpha, zeta)
    w = p.w
    for n in range(1, 4):
        w = holonomy_step(lam, w)
        q = psi_param(lam, alpha, zeta + 2 * math.pi * n)
        assert q.z == pytest.approx(p.z, rel=1e-12)
        assert abs(w - q.w) <= 1e-10 * abs(q.w)


def test_bidisc_window_examples():
    assert bidisc_window(1j, 1 + 1j)
    assert not bidisc_window(1j, 1 - 1j)
    assert not bidisc_window(-1 + 1j, -0.5 + 1j)


@pytest.mark.parametrize("lam", LAMBDAS)
def test_bidisc_window_matches_moduli(lam):
    alpha = 0.6 * np.exp(1.1j)
    us = np.linspace(-8, 12, 200)
    vs = np.linspace(-4, 6, 200)
    zeta = us[None, :] + 1j * vs[:, None]
    z, w = psi_array(lam, alpha, zeta)
    inside = (np.abs(z) < 1) & (np.abs(w) < 1)
    band = (np.abs(np.log(np.abs(z))) < 1e-10) | (np.abs(np.log(np.abs(w))) < 1e-10)
    predicted = np.vectorize(lambda s: bidisc_window(lam, s))(zeta)
    assert np.all((predicted == inside) | band)


def test_leaf_coordinates_inverts_psi(rng):
    chart = sector_of(-1 + 1j)
    low, high = chart.alpha_range
    for _ in range(100):
        z = np.exp(-rng.uniform(0.1, 2) + 1j * rng.uniform(-3, 3))
        w = np.exp(-rng.uniform(0.1, 2) + 1j * rng.uniform(-3, 3))
        alpha, zeta = leaf_coordinates(chart, z, w)
        assert low - 1e-12 <= abs(alpha) < 1
        p = psi_param(chart, alpha, zeta)
        assert p.z == pytest.approx(z, abs=1e-12)
        assert p.w == pytest.approx(w, abs=1e-12)


def test_plaque_bounds():
    chart = sector_of(-1 + 1j)
    bounds = plaque_bounds(chart, 0)
    assert bounds["u"] == (0.0, 2 * math.pi)
    assert bounds["v"][1] == pytest.approx(2 * math.pi)
    assert plaque_bounds(chart, -1)["empty"]


def test_negative_plaques_when_a_positive(rng):
    chart = sector_of(0.5 + 1j)
    zeta = -0.1 + 0.5j
    assert bidisc_window(chart, zeta)
    bounds = plaque_bounds(chart, plaque_index(zeta.real))
    assert bounds["n"] == -1 and not bounds["empty"]
    assert bounds["v"][0] <= zeta.imag

    for n in (-1, -2, -3):
        bounds = plaque_bounds(chart, n)
        u_min, u_max = bounds["u"]
        for u in rng.uniform(u_min, u_max, 50):
            v = -chart.b * u / chart.a + rng.uniform(1e-6, 3)
            assert bidisc_window(chart, complex(u, v))
            assert bounds["v"][0] <= v


def test_lowest_plaque():
    assert lowest_plaque(sector_of(-1 + 1j), 50.0) == 0
    chart = sector_of(0.5 + 1j)
    v_max = 20.0
    low = lowest_plaque(chart, v_max)
    assert low == -math.ceil(0.5 * v_max / (2 * math.pi))
    assert plaque_bounds(chart, low)["v"][0] <= v_max
    assert plaque_bounds(chart, low - 1)["v"][0] > v_max
    with pytest.raises(LabError):
        lowest_plaque(chart, math.inf)
