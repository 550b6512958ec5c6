import cmath
import math
from collections import Counter

import numpy as np
import pytest

from core.errors import LabError
from intersection_module import (
    PerturbationFamily, RegionConstants, RegionLabel, IntersectionPoint, IntersectionRecord, D1, D2, D3, OUTSIDE,
    CASE_1, CASE_1_MIRROR, CASE_2, perturbed_slope, plaque_graph, slope_variation, classify_region,
    resolve_constants, find_intersections, grid_count_oracle, check_count_bounds, closeness_checks,
    wedge_sum_experiment, sample_annulus, plaque_range, SearchWindow
)
from intersection_module import wedge
from leafgeom_module import sector_of, psi_array, leaf_coordinates, plaque_index, bidisc_window
from monitoring import REGISTRY

LAM = -1 + 1j
FAM = PerturbationFamily(1, 0.3)
CONSTS = RegionConstants(c=0.1, C=3, delta=0.3, C1=4, r=0.05, s=0.04, d=0.05)


def crossing(chart, alpha, zeta0, eps, fam=FAM):
    """Возмущенный лист через точку ψ_α(ζ0): (z0, w0, β, m)"""
    z, w = psi_array(chart, alpha, np.array([zeta0]))
    z0, w0 = complex(z[0]), complex(w[0])
    beta, zeta_p = leaf_coordinates(chart, *fam.pull_back(z0, w0, eps))
    return z0, w0, beta, plaque_index(zeta_p.real)


def test_plaque_graph_examples():
    chart = sector_of(1j)
    assert plaque_graph(chart, 1, 0, 1) == pytest.approx(1, abs=1e-15)
    assert plaque_graph(chart, 1, 0, math.exp(-1)) == pytest.approx(cmath.exp(-1j), abs=1e-15)
    assert plaque_graph(chart, 1, 1, 1) == pytest.approx(math.exp(-2 * math.pi), rel=1e-12)
    for z in (0, 2.0):
        with pytest.raises(LabError) as err:
            plaque_graph(chart, 1, 0, z)
        assert err.value.code == "off-plaque"


def test_family_validation():
    for a1, b1 in ((0, 1), (1, 0)):
        with pytest.raises(LabError) as err:
            PerturbationFamily(a1, b1)
        assert err.value.code == "config"
    with pytest.raises(LabError) as err:
        FAM.check_lambda(0.3)
    assert err.value.code == "config"
    FAM.check_lambda(LAM)


def test_perturbed_slope_examples():
    fam = PerturbationFamily(1, 1)
    assert perturbed_slope(fam, 1j, (1e-4, 1e-4), 1e-3) == 1j
    assert perturbed_slope(fam, LAM, (0.2, 0.1), 0.0) == pytest.approx(LAM * 0.1 / 0.2)
    with pytest.raises(LabError) as err:
        perturbed_slope(fam, 1j, (1e-3, 1e-3), 1e-3)
    assert err.value.code == "perturbed-singularity"


def test_slope_variation_along_plaque():
    chart = sector_of(LAM)
    for zeta in (3 + 1j, 1.2 + 0.4j, 5.5 + 2j):
        numeric, exact = slope_variation(chart, 0.5, zeta, h=1e-5)
        assert abs(numeric - exact) <= 1e-8 * abs(exact)


def test_region_examples():
    eps = 1e-2
    assert classify_region((5e-4, 5e-4), eps, CONSTS).major == D1
    assert classify_region((2e-2, 1e-2), eps, CONSTS) == RegionLabel(D2, "B")
    label = classify_region((0.2, 0.01), eps, CONSTS)
    assert label.major == D3 and label.sub.startswith("R2")
    assert classify_region((0.25, 0.05), eps, CONSTS).sub == "R1A"
    assert classify_region((0.05, 0.25), eps, CONSTS).sub == "R1B"
    assert classify_region((0.2, 0.1), eps, CONSTS).sub == "R1C"
    assert classify_region((0.01, 0.2), eps, CONSTS).sub == "R3"
    assert classify_region((2e-2, 1e-4), eps, CONSTS).sub == "A"
    assert classify_region((1e-4, 2e-2), eps, CONSTS).sub == "A'"
    assert classify_region((0.5, 0.1), eps, CONSTS).major == OUTSIDE


def test_d1_cases():
    eps, slope = 1e-2, FAM.limit_slope(LAM)
    eta = 5e-4
    near_z_axis = (eta * 1.01, slope * eta * 0.01)
    near_w_axis = (1e-6, slope * (1e-6 - eta))
    assert classify_region(near_z_axis, eps, CONSTS, FAM, LAM).case == CASE_1
    assert classify_region(near_w_axis, eps, CONSTS, FAM, LAM).case == CASE_1_MIRROR
    assert classify_region((5e-4, 5e-4), eps, CONSTS, FAM, LAM).case == CASE_2


def test_labels_partition_the_bidisc(rng):
    for _ in range(500):
        point = tuple(rng.uniform(0, 0.35) * np.exp(1j * rng.uniform(0, 2 * math.pi)) for _ in range(2))
        label = classify_region(point, 1e-2, CONSTS, FAM, LAM)
        assert (label.major in (D1, OUTSIDE)) == (label.sub is None)


def test_constants_validation():
    with pytest.raises(LabError) as err:
        RegionConstants(c=0.1, C=3, delta=0.3, C1=4, r=0.2, s=0.04, d=0.05)
    assert err.value.code == "config"
    consts = resolve_constants(sector_of(LAM), FAM)
    assert consts.C == 3 and 0 < consts.s < 1
    assert abs(1 + 2 * consts.s * math.pi * LAM.imag / LAM.real) > 0.5


def test_unperturbed_distinct_leaves_do_not_meet():
    record = find_intersections(sector_of(LAM), FAM, 0.5, 0, 0.3, 0, 0.0)
    assert record.count == 0 and record.unresolved == 0


def test_identical_plaques():
    with pytest.raises(LabError) as err:
        find_intersections(sector_of(LAM), FAM, 0.5, 0, 0.5, 0, 0.0)
    assert err.value.code == "identical-plaques"


def r1_record():
    chart, eps = sector_of(LAM), 1e-3
    z0, w0, beta, m = crossing(chart, 0.5, 4.5 + 2j, eps)
    return chart, eps, z0, beta, m, find_intersections(chart, FAM, 0.5, 0, beta, m, eps)


def test_constructed_r1_crossing_is_found():
    chart, eps, z0, beta, m, record = r1_record()
    assert record.unresolved == 0
    found = [p for p in record.points if abs(p.z - z0) < 1e-9]
    assert len(found) == 1 and found[0].region.sub.startswith("R1")
    consts = resolve_constants(chart, FAM)
    for point in record.points:
        assert max(point.residuals) <= 1e-9
        assert classify_region((point.z, point.w), eps, consts, FAM, LAM) == point.region


def test_winding_count_matches_grid_oracle():
    chart, eps, _, beta, m, record = r1_record()
    assert grid_count_oracle(chart, FAM, 0.5, 0, beta, m, eps, resolution=1000) == record.count


def test_tangency_counts_twice():
    chart, eps, alpha = sector_of(LAM), 1e-3, 0.5
    t = (cmath.log(FAM.ratio / alpha) - 2j * math.pi) / (1j * (LAM - 1))
    zeta0 = t - math.log(alpha) / LAM.imag
    assert plaque_index(zeta0.real) == 0
    z0, w0, beta, m = crossing(chart, alpha, zeta0, eps)
    assert abs(w0 / z0 - FAM.ratio) < 1e-12
    record = find_intersections(chart, FAM, alpha, 0, beta, m, eps)
    assert sum(p.multiplicity for p in record.points if abs(p.z - z0) < 1e-4) == 2


def test_r1_count_bounds_and_closeness():
    _, _, _, _, _, record = r1_record()
    assert check_count_bounds([record], "R1").passed
    report = closeness_checks(record, FAM)
    assert report.rows and report.passed


def test_closeness_limits():
    chart = sector_of(LAM)
    point = IntersectionPoint(z=0.1, w=0.05, zeta=1 + 2j, zeta_p=1 + 2j, residuals=(0.0, 0.0),
                              region=RegionLabel(D3, "R1C"))
    coincident = IntersectionRecord(chart=chart, alpha=0.5, n=0, beta=0.5, m=0, eps=0.0, points=[point])
    row = closeness_checks(coincident, FAM).rows[0]
    assert row.lhs_modulus == 0 and row.lhs_angle == 0

    _, _, _, _, _, record = r1_record()
    record.beta = record.beta * 2
    report = closeness_checks(record, FAM)
    assert not report.passed
    assert all(row.margins[0] < 0 for row in report.rows)


def test_mislabeled_points_are_reported():
    chart = sector_of(LAM)

    def point(label, zeta=1 + 1j):
        return IntersectionPoint(z=1e-4, w=1e-4, zeta=zeta, zeta_p=zeta, residuals=(0.0, 0.0), region=label)

    far = IntersectionRecord(chart=chart, alpha=0.5, n=0, beta=0.5, m=3, eps=1e-3,
                             points=[point(RegionLabel(D3, "R1C"))])
    report = check_count_bounds([far], "R1")
    assert not report.passed
    assert len(report.checks["plaque-index-gap"].violations) == 1

    doubled = IntersectionRecord(chart=chart, alpha=0.5, n=2, beta=0.4, m=2, eps=1e-3,
                                 points=[point(RegionLabel(D1, case=CASE_1)), point(RegionLabel(D1, case=CASE_1))])
    crowded = IntersectionRecord(chart=chart, alpha=0.5, n=2, beta=0.4, m=2, eps=1e-3,
                                 points=[point(RegionLabel(D1, case=CASE_2), 1 + 1j + 0.01 * k) for k in range(3)])
    report = check_count_bounds([doubled, crowded], "D1")
    assert len(report.checks["case-1-single"].violations) == 1
    assert len(report.checks["square-at-most-two"].violations) == 1
    assert "u_prime_window" in report.fitted


def test_annulus_sampling(rng):
    chart = sector_of(LAM)
    alphas = sample_annulus(chart, rng, 1000)
    low, high = chart.alpha_range
    assert np.all((np.abs(alphas) >= low) & (np.abs(alphas) < high))


@pytest.mark.slow
def test_wedge_sum_is_monotone_in_delta():
    rows = wedge_sum_experiment(sector_of(LAM), FAM, [1e-2], deltas=(0.1, 0.3), pairs=3, seed=5, n_max=1)
    assert len(rows) == 2
    small, large = rows
    assert small.delta < large.delta
    assert 0 <= small.J <= large.J
    assert small.pairs == 3 and 0 <= large.unresolved_frac <= 1


def counter_value(name, **labels):
    return REGISTRY.get_sample_value(name, labels) or 0.0


def test_crossing_in_negative_plaque_is_found():
    chart, eps, alpha = sector_of(0.5 + 1j), 1e-3, 0.5
    zeta0 = -1 + 3j
    assert plaque_index(zeta0.real) == -1 and bidisc_window(chart, zeta0)
    z0, w0, beta, m = crossing(chart, alpha, zeta0, eps)
    assert m == -1
    record = find_intersections(chart, FAM, alpha, -1, beta, m, eps)
    found = [p for p in record.points if abs(p.z - z0) < 1e-9]
    assert len(found) == 1
    assert found[0].w == pytest.approx(w0, abs=1e-9)
    assert plaque_index(found[0].zeta.real) == -1


def test_plaque_range_starts_below_zero_when_a_positive():
    window = SearchWindow(radius=1.0, z_floor=1e-6)
    assert plaque_range(sector_of(LAM), window, 3) == range(0, 4)
    plaques = plaque_range(sector_of(0.5 + 1j), window, 3)
    assert plaques.start == -math.ceil(0.5 * -math.log(1e-6) / (2 * math.pi))
    assert plaques.start < 0 and plaques.stop == 4


@pytest.mark.slow
def test_pair_sum_reaches_negative_plaques_without_touching_metrics():
    chart, eps, alpha = sector_of(0.5 + 1j), 1e-3, 0.5
    z0, _, beta, m = crossing(chart, alpha, -1 + 3j, eps)
    before = counter_value("foliation_lab_newton_solves_total", status="converged")
    sums, unresolved, boxes, newton, regions = wedge._pair_sum(chart, FAM, eps, alpha, beta, (1.0,), 0, 0.0)
    assert boxes > 0
    assert newton["converged"] >= 1
    assert sum(regions.values()) >= 1
    assert counter_value("foliation_lab_newton_solves_total", status="converged") == before


def test_wedge_tallies_are_published_by_caller(monkeypatch):
    tally = (np.zeros(1), 2, 10, Counter(converged=3, failed=1), Counter({D1: 2}))
    monkeypatch.setattr(wedge, "map_tasks", lambda fn, tasks, jobs: [tally for _ in tasks])
    names = [("foliation_lab_newton_solves_total", {"status": "converged"}),
             ("foliation_lab_newton_solves_total", {"status": "failed"}),
             ("foliation_lab_intersection_points_total", {"region": D1}),
             ("foliation_lab_unresolved_boxes_total", {})]
    before = [counter_value(name, **labels) for name, labels in names]
    rows = wedge_sum_experiment(sector_of(LAM), FAM, [1e-2], pairs=4, seed=1, n_max=0, jobs=1)
    after = [counter_value(name, **labels) for name, labels in names]
    assert [b - a for a, b in zip(before, after)] == [12, 4, 8, 8]
    assert rows[0].unresolved_frac == pytest.approx(0.2)
