import math

import numpy as np
import pytest
from scipy import stats

from core.errors import LabError
from current_module import (
    EmpiricalCurrent, WalkEnsemble, ModelGrid, normalized_current, accumulate_current, merge_currents,
    current_distance, leafwise_walk, model_step, exit_distribution_test, ahlfors_average_model, model_current
)
from current_module.ahlfors import DEFAULT_ALPHA
from foliation_module import preset
from harmonic_module import constant, indicator, lorentzian, cauchy_mixture, poisson_extend
from leafgeom_module import sector_of, psi_array, from_halfplane
from singularity_module import analyze_singularity
from tracer_module import LeafTrace, FlowBox, FlowBoxGrid, build_grid

LAM = -1 + 1j


def model_trace(u_max, v=math.log(2)):
    u = np.linspace(1, u_max, 4000)
    z, w = psi_array(LAM, 1.0, u + 1j * v)
    return LeafTrace.from_polyline(0, np.column_stack([z, w]))


def single_box_grid():
    box = FlowBox(box_id=0, chart=0, center=np.array([0.5, 0j]), radius=0.2, leaf_axis=0)
    return FlowBoxGrid(foliation=preset("linear", lam=LAM), boxes=[box], r_sing=0.05)


def current_from(counts, signature=("test",)):
    return normalized_current(signature, np.asarray(counts, dtype=float))


def test_single_crossing_carries_full_mass():
    current = accumulate_current([model_trace(3 * math.pi)], single_box_grid())
    assert current.weights[0, 28] == 1.0
    assert current.total_mass == 1.0
    assert current.rows() == [(0, 28, 1.0)]


def test_doubling_multiplicities_is_invisible():
    paths = [model_trace(5 * math.pi), model_trace(5 * math.pi, v=math.log(2.2))]
    once = accumulate_current(paths, single_box_grid(), multiplicities=[1, 3])
    twice = accumulate_current(paths, single_box_grid(), multiplicities=[2, 6])
    assert np.array_equal(once.weights, twice.weights)
    assert np.array_equal(once.profiles, twice.profiles)
    assert twice.raw_mass == 2 * once.raw_mass


def test_merge_is_mass_weighted_average():
    p1, p2 = model_trace(5 * math.pi), model_trace(3 * math.pi, v=math.log(2.2))
    grid = single_box_grid()
    merged = merge_currents([accumulate_current([p1], grid), accumulate_current([p2], grid)])
    joint = accumulate_current([p1, p2], grid)
    np.testing.assert_allclose(merged.weights, joint.weights, atol=1e-12)
    assert abs(merged.total_mass - 1) < 1e-12


def test_empty_occupation():
    grid = single_box_grid()
    with pytest.raises(LabError) as err:
        accumulate_current([], grid)
    assert err.value.code == "empty"
    disjoint = LeafTrace.from_polyline(0, [(0.9 + 0.9j, 0.9), (0.95 + 0.9j, 0.9)])
    with pytest.raises(LabError) as err:
        accumulate_current([disjoint], grid)
    assert err.value.code == "empty"


def test_distance_properties():
    t1 = current_from([[1, 0, 0], [0, 0, 0]])
    t2 = current_from([[0, 0, 0], [0, 2, 1]])
    t3 = current_from([[1, 1, 0], [0, 1, 1]])
    assert current_distance(t1, t1) == 0
    assert current_distance(t1, t2) == pytest.approx(2)
    average = merge_currents([t1, t3])
    pairwise = max(current_distance(a, b) for a in (t1, t3) for b in (t1, t3))
    assert current_distance(average, t1) <= pairwise + 1e-15
    assert current_distance(average, t3) <= pairwise + 1e-15


def test_distance_needs_same_grid():
    with pytest.raises(LabError) as err:
        current_distance(current_from([[1, 0]]), current_from([[1, 0]], signature=("other",)))
    assert err.value.code == "grid-mismatch"


def test_ensemble_validation():
    for kwargs in ({"count": 0}, {"h_walk": 0.0}, {"h_walk": -1e-3}, {"steps": 0}):
        with pytest.raises(LabError) as err:
            WalkEnsemble(start=(0.3, 0.2), **kwargs)
        assert err.value.code == "config"


def test_walk_from_singularity_is_rejected():
    with pytest.raises(LabError) as err:
        leafwise_walk(preset("jouanolou", d=2), WalkEnsemble(start=(1, 1)))
    assert err.value.code == "at-singularity"


def test_single_path_ensemble():
    f = preset("jouanolou", d=2)
    result = leafwise_walk(f, WalkEnsemble(start=(0.3, 0.2), count=1, steps=200, seed=1))
    assert len(result.paths) == 1 and result.discarded == 0
    grid = build_grid(f, 0, [(0.3, 0.2)], radius=0.1)
    assert len(grid.boxes) == 1
    current = accumulate_current(result.paths, grid)
    assert abs(current.total_mass - 1) < 1e-12
    assert np.all(current.weights >= 0)


def test_walk_is_seed_deterministic():
    f = preset("jouanolou", d=2)
    ensemble = WalkEnsemble(start=(0.3, 0.2), count=3, steps=50, seed=7)
    first, second = leafwise_walk(f, ensemble), leafwise_walk(f, ensemble)
    for a, b in zip(first.paths, second.paths):
        assert np.array_equal(a.rows(), b.rows())
    other = leafwise_walk(f, WalkEnsemble(start=(0.3, 0.2), count=3, steps=50, seed=8))
    assert not np.array_equal(first.paths[0].rows(), other.paths[0].rows())


def test_walk_stays_on_leaf():
    f = preset("linear", lam=1j)
    result = leafwise_walk(f, WalkEnsemble(start=(0.5, 0.5), count=2, steps=100, h_walk=1e-4, seed=3))
    for path in result.paths:
        points = path.segments[0].points
        log_z = np.log(np.abs(points[:, 0])) + 1j * np.unwrap(np.angle(points[:, 0]))
        invariant = points[:, 1] * np.exp(-1j * log_z)
        assert np.max(np.abs(invariant - invariant[0])) < 1e-8


def test_model_step_follows_linear_flow():
    f = preset("linear", lam=LAM)
    jet = analyze_singularity(f, (0, 0)).jet
    q = np.array([5e-5, 5e-5j])
    moved = model_step(jet, q, 1e-3 * np.exp(0.4j))
    assert 0 < np.linalg.norm(moved - q) <= 1e-3
    taus = [np.log(moved[0] / q[0]) + 2j * math.pi * k for k in range(-10, 11)]
    miss = min(abs(moved[1] - q[1] * np.exp(LAM * tau)) for tau in taus)
    assert miss < 1e-12 * max(1.0, abs(moved[1]) / 1e-4)


def test_walk_continues_through_singular_ball():
    f = preset("linear", lam=LAM)
    start = np.array([5e-5, 5e-5], dtype=complex)
    result = leafwise_walk(f, WalkEnsemble(start=tuple(start), count=4, steps=5, h_walk=1e-12, seed=2))
    assert len(result.paths) + result.discarded == 4
    assert result.paths
    for path in result.paths:
        for p in path.segments[0].points[1:]:
            taus = [np.log(p[0] / start[0]) + 2j * math.pi * k for k in range(-10, 11)]
            miss = min(abs(p[1] - start[1] * np.exp(LAM * tau)) for tau in taus)
            assert miss < 1e-10 * abs(start[1])


def test_poisson_oracle_for_exit_law():
    for x in (-3.0, -0.5, 0.0, 1.2, 10.0):
        assert poisson_extend(indicator(-math.inf, x), (0, 1)) == pytest.approx(stats.cauchy.cdf(x), abs=1e-8)


def test_model_exit_law_matches_harmonic_measure():
    chart = sector_of(LAM)
    statistic, _ = exit_distribution_test(chart, np.exp(1j * math.pi / 8), count=10000, h_walk=1e-3, seed=11)
    assert statistic < 0.05


def base_point(chart):
    z, w = psi_array(chart, DEFAULT_ALPHA, np.array([from_halfplane(chart, 0.0, 1.0)]))
    return z, w


def test_small_ahlfors_disc_concentrates_at_base_point():
    chart = sector_of(LAM)
    current = ahlfors_average_model(chart, 0.01)
    box, bin_, valid = ModelGrid().locate(*base_point(chart))
    assert valid[0]
    assert current.weights[box[0], bin_[0]] >= 0.99


def test_ahlfors_support_grows_with_radius():
    chart = sector_of(LAM)
    small, large = ahlfors_average_model(chart, 0.3), ahlfors_average_model(chart, 0.6)
    assert np.all(large.support()[small.support(1e-3)])


def test_ahlfors_averages_converge():
    chart = sector_of(LAM)
    reference = ahlfors_average_model(chart, 0.99)
    far = current_distance(ahlfors_average_model(chart, 0.9), reference)
    near = current_distance(ahlfors_average_model(chart, 0.95), reference)
    assert near <= far


@pytest.mark.parametrize("r", [0.0, 1.0, 1.5])
def test_ahlfors_radius_must_be_inside_disc(r):
    with pytest.raises(LabError) as err:
        ahlfors_average_model(sector_of(LAM), r)
    assert err.value.code == "config"


def test_constant_weight_does_not_change_ahlfors_average():
    chart = sector_of(LAM)
    plain = ahlfors_average_model(chart, 0.5)
    weighted = ahlfors_average_model(chart, 0.5, H=constant(1.0))
    assert np.array_equal(plain.weights, weighted.weights)


def test_model_current_is_normalized():
    chart = sector_of(LAM)
    current = model_current(chart, lorentzian())
    assert isinstance(current, EmpiricalCurrent)
    assert abs(current.total_mass - 1) < 1e-12
    assert np.all(current.weights >= 0)
    scaled = model_current(chart, cauchy_mixture([2 * math.pi], [0], [1]))
    np.testing.assert_allclose(scaled.weights, current.weights, atol=1e-12)


def test_model_current_needs_finite_weighted_norm():
    with pytest.raises(LabError) as err:
        model_current(sector_of(LAM), constant(1.0))
    assert err.value.code == "divergent-boundary-data"
