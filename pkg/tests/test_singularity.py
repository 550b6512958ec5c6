import numpy as np
import pytest
from scipy.integrate import solve_ivp

from algebra_module import Poly
from core.errors import LabError
from foliation_module import AFFINE, preset, make_foliation, homogenize, singular_points
from singularity_module import (
    linear_part, lambda_of, classify_hyperbolic, normalize_lambda, linearize_jet, analyze_singularity,
    solve_homological, HYPERBOLIC, RESONANT_REAL, SWAP_AXES, CONJUGATE_ORIENTATION
)

JOUANOLOU_LAMBDA = (1 + 4 * np.sqrt(3) * 1j) / 7


def test_linear_part_of_model():
    m = linear_part(preset("linear", lam=1j), (0, 0))
    np.testing.assert_allclose(m, np.diag([1, 1j]), atol=1e-15)


def test_linear_part_jouanolou_matches_finite_differences():
    f = preset("jouanolou", d=2)
    m = linear_part(f, (1, 1))
    np.testing.assert_allclose(m, [[-3, 2], [-2, -1]], atol=1e-14)
    x, y = f.vector_field(0)
    h = 1e-6
    for col, dv in enumerate(([h, 0], [0, h])):
        plus = np.array([x(np.add((1, 1), dv)), y(np.add((1, 1), dv))])
        minus = np.array([x(np.subtract((1, 1), dv)), y(np.subtract((1, 1), dv))])
        np.testing.assert_allclose((plus - minus) / (2 * h), m[:, col], atol=1e-6)


def test_linear_part_requires_singular_point():
    with pytest.raises(LabError) as err:
        linear_part(preset("jouanolou", d=2), (0.3, 0.2))
    assert err.value.code == "not-singular"


def test_lambda_examples():
    assert lambda_of(np.diag([1, 1j]))[0] == pytest.approx(1j)
    lam, mu1, mu2 = lambda_of(np.array([[-3, 2], [-2, -1]]))
    assert abs(lam - JOUANOLOU_LAMBDA) < 1e-12
    assert mu2 / mu1 == pytest.approx(lam)
    assert lambda_of(np.diag([1, 2]))[0] == pytest.approx(2)


def test_lambda_errors():
    with pytest.raises(LabError) as err:
        lambda_of(np.diag([0, 1]))
    assert err.value.code == "degenerate-singularity"
    with pytest.raises(LabError) as err:
        lambda_of(np.array([[1, 1], [0, 1]]))
    assert err.value.code == "non-semisimple"


def test_lambda_conjugation_invariance(rng):
    m = np.diag([1.0, -1 + 1j])
    lam = lambda_of(m)[0]
    for _ in range(20):
        p = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
        other = lambda_of(p @ m @ np.linalg.inv(p))[0]
        assert min(abs(other - lam), abs(other - 1 / lam)) < 1e-9


def test_classification():
    assert classify_hyperbolic(1j) == HYPERBOLIC
    assert classify_hyperbolic(2) == RESONANT_REAL
    assert classify_hyperbolic(JOUANOLOU_LAMBDA) == HYPERBOLIC


def test_normalize_examples():
    lam, moves = normalize_lambda(1 + 1j)
    assert lam == pytest.approx(0.5 - 0.5j)
    assert moves == [SWAP_AXES, CONJUGATE_ORIENTATION]
    assert normalize_lambda(1j) == (1j, [])
    lam, moves = normalize_lambda(np.conj(JOUANOLOU_LAMBDA))
    assert abs(lam - JOUANOLOU_LAMBDA) < 1e-12
    assert moves == [SWAP_AXES]


def test_normalize_properties(rng):
    for _ in range(500):
        lam = complex(rng.uniform(-3, 3), rng.uniform(-3, 3))
        if abs(lam.imag) < 1e-3:
            continue
        normalized, moves = normalize_lambda(lam)
        assert classify_hyperbolic(normalized) == classify_hyperbolic(lam)
        assert (CONJUGATE_ORIENTATION in moves) == (normalized.imag < 0)
        if normalized.imag < 0:
            assert abs((1 / normalized).real - 1) < 0.05
        if abs(lam.real - 1) >= 0.05 or abs((1 / lam).real - 1) >= 0.05:
            assert abs(normalized.real - 1) >= 0.05


def test_jouanolou_singularities_are_hyperbolic():
    f = preset("jouanolou", d=2)
    points = singular_points(f, 0).points
    assert len(points) == 7
    for p in points:
        s = analyze_singularity(f, p, order=2)
        assert s.classification == HYPERBOLIC
    s = analyze_singularity(f, (1, 1), order=2)
    assert abs(s.lam - JOUANOLOU_LAMBDA) < 1e-9


def test_linear_input_gives_identity_jet():
    jet = linearize_jet(preset("linear", lam=-1 + 1j), (0, 0), order=4)
    z, w = Poly.variable(AFFINE, "z"), Poly.variable(AFFINE, "w")
    assert jet.forward_coeffs[0].chop(1e-14) == z
    assert jet.forward_coeffs[1].chop(1e-14) == w
    assert jet.lam == pytest.approx(-1 + 1j)


def test_first_order_jet_is_identity():
    jet = linearize_jet(preset("jouanolou", d=2), (1, 1), order=1)
    q = np.array([1.001, 0.999 + 0.001j])
    np.testing.assert_allclose(jet.to_chart(jet.to_model(q)), q, atol=1e-13)
    assert jet.composition_residual() < 1e-14


def test_jet_invariants_on_jouanolou():
    jet = linearize_jet(preset("jouanolou", d=2), (1, 1), order=5)
    assert jet.conjugation_residual() < 1e-9
    assert jet.composition_residual() < 1e-10


def perturbed_linear(eps):
    z, w = Poly.variable(AFFINE, "z"), Poly.variable(AFFINE, "w")
    return make_foliation(*homogenize(w * -1j, z + z ** 2 * eps))


def test_jet_conjugates_flows():
    f = perturbed_linear(1e-3)
    jet = linearize_jet(f, (0, 0), order=2)
    x_field, y_field = f.vector_field(0)
    mu1, mu2 = jet.eigenvalues

    def rhs(t, s):
        q = s[:2] + 1j * s[2:]
        v = np.array([x_field(q), y_field(q)])
        return np.concatenate([v.real, v.imag])

    q0 = np.array([0.05, 0.05])
    sol = solve_ivp(rhs, (0, 0.1), np.concatenate([q0.real, q0.imag]), method="DOP853", rtol=1e-12, atol=1e-14)
    raw = sol.y[:2, -1] + 1j * sol.y[2:, -1]
    x0 = jet.to_model(q0)
    model = jet.to_chart(np.array([x0[0] * np.exp(mu1 * 0.1), x0[1] * np.exp(mu2 * 0.1)]))
    assert np.max(np.abs(model - raw)) < 1e-6


def test_resonance_is_guarded():
    z, w = Poly.variable(AFFINE, "z"), Poly.variable(AFFINE, "w")
    field = (z, w * 2 + z ** 2)
    with pytest.raises(LabError) as err:
        solve_homological(field, (1.0, 2.0), order=3)
    assert err.value.code == "resonance"


def test_real_lambda_has_no_jet():
    f = preset("linear", lam=2.5)
    s = analyze_singularity(f, (0, 0))
    assert s.classification == RESONANT_REAL
    assert s.jet is None
    with pytest.raises(LabError):
        linearize_jet(f, (0, 0))
