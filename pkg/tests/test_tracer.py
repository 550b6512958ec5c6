import math

import numpy as np
import pytest
from scipy.integrate import quad

from core.errors import LabError
from foliation_module import preset
from leafgeom_module import psi_array, psi_param, sector_of, leaf_coordinates
from tracer_module import (
    line_field_at, tangency, trace_leaf, LeafTrace, FlowBox, FlowBoxGrid, lattice_grid, extract_plaques,
    axis_projection, transversal_crossing, HORIZON, NEAR_SINGULARITY, BAD_AXIS
)


def test_line_field_examples():
    v = line_field_at(preset("linear", lam=1j), 0, (1, 1))
    assert np.linalg.norm(v) == pytest.approx(1)
    assert abs(np.vdot(v, np.array([1, 1j]) / math.sqrt(2))) == pytest.approx(1, abs=1e-15)
    v = line_field_at(preset("jouanolou", d=2), 0, (0, 0))
    assert abs(v[0]) < 1e-15
    assert abs(v[1]) == pytest.approx(1)


def test_line_field_is_tangent(rng):
    f = preset("jouanolou", d=2)
    for _ in range(50):
        p = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        assert tangency(f, 0, p, line_field_at(f, 0, p)) < 1e-14


def test_line_field_at_singularity():
    with pytest.raises(LabError) as err:
        line_field_at(preset("jouanolou", d=2), 0, (1, 1))
    assert err.value.code == "at-singularity"
    with pytest.raises(LabError) as err:
        trace_leaf(preset("linear", lam=1j), (0, 0), 1.0)
    assert err.value.code == "at-singularity"


def test_trace_matches_closed_form_flow():
    f = preset("linear", lam=1j)
    arc, _ = quad(lambda t: math.sqrt(math.exp(-2 * t) + 1), 0, 1, epsabs=1e-14)
    trace = trace_leaf(f, (1, 1), arc, phase=-1)
    assert trace.reason == HORIZON
    np.testing.assert_allclose(trace.endpoint, [math.exp(-1), np.exp(-1j)], atol=1e-7)


def test_trace_preserves_first_integral():
    f = preset("linear", lam=1j)
    trace = trace_leaf(f, (0.5, 0.5), 0.6, phase=np.exp(0.7j))
    seg = trace.segments[0]
    z, w = seg.points[:, 0], seg.points[:, 1]
    log_z = np.log(np.abs(z)) + 1j * np.unwrap(np.angle(z))
    invariant = w * np.exp(-1j * log_z)
    assert np.max(np.abs(invariant - invariant[0])) < 1e-7


def test_trace_half_step_oracle():
    f = preset("jouanolou", d=2)
    coarse = trace_leaf(f, (0, 0), 0.5)
    fine = trace_leaf(f, (0, 0), 0.5, rtol=1e-12, atol=1e-14)
    assert coarse.end_chart == fine.end_chart
    assert np.max(np.abs(coarse.endpoint - fine.endpoint)) < 1e-7


def test_trace_is_reversible():
    f = preset("jouanolou", d=2)
    forward = trace_leaf(f, (0, 0), 1.0)
    assert len(forward.segments) == 1 and forward.reason == HORIZON
    backward = trace_leaf(f, forward.endpoint, 1.0, phase=-forward.final_phase)
    assert np.max(np.abs(backward.endpoint)) < 1e-6


def test_trace_switches_charts_and_stops_near_singularity():
    f = preset("linear", lam=1j)
    trace = trace_leaf(f, (1, 1), 3.0)
    assert [seg.chart for seg in trace.segments] == [0, 1, 1]
    assert [seg.model for seg in trace.segments] == [False, False, True]
    assert max(trace.transition_gaps()) < 1e-9
    assert trace.reason == NEAR_SINGULARITY
    assert np.max(np.abs(trace.singular_point)) < 1e-9
    assert trace.distance == pytest.approx(1e-4, rel=1e-6)
    handoff = trace.handoff
    assert handoff is not None
    assert handoff.lam.imag > 0
    p = psi_param(sector_of(handoff.lam), handoff.alpha, handoff.zeta)
    np.testing.assert_allclose([p.z, p.w], handoff.model_point, atol=1e-12)


def test_trace_continues_on_model_leaf_after_handoff():
    trace = trace_leaf(preset("linear", lam=1j), (1, 1), 3.0)
    handoff, model = trace.handoff, trace.segments[-1]
    assert model.model and len(model.points) > 1
    np.testing.assert_array_equal(model.points[0], trace.segments[-2].points[-1])
    assert np.all(np.diff(model.s) > 0) and model.s[-1] <= 3.0
    assert handoff.model_arc == pytest.approx(model.s[-1] - model.s[0])
    assert trace.arc_length == model.s[-1]
    sector = sector_of(handoff.lam)
    for q in model.points[1:]:
        alpha, _ = leaf_coordinates(sector, *handoff.chart_to_model(q))
        assert abs(alpha - handoff.alpha) < 1e-9 * abs(handoff.alpha)
    assert np.max(np.linalg.norm(model.points - trace.singular_point, axis=1)) < 0.1


def test_trace_without_handoff_stops_at_singularity():
    trace = trace_leaf(preset("linear", lam=1j), (1, 1), 3.0, handoff=False)
    assert trace.handoff is None
    assert not any(seg.model for seg in trace.segments)
    assert trace.distance == pytest.approx(1e-4, rel=1e-6)


def test_trace_csv(tmp_path):
    trace = trace_leaf(preset("jouanolou", d=2), (0.3, 0.2), 0.2)
    path = tmp_path / "trace.csv"
    trace.save_csv(str(path))
    rows = np.loadtxt(path, delimiter=",", skiprows=1)
    assert rows.shape[1] == 6
    assert rows[0, 1] == pytest.approx(0.3)
    assert rows[-1, 5] == pytest.approx(0.2)


def test_trace_prefix():
    trace = LeafTrace.from_polyline(0, [(0.1, 0.1), (0.2, 0.1), (0.3, 0.1)], s=[0.0, 1.0, 2.0])
    head = trace.prefix(1.5)
    assert head.arc_length == 1.0 and len(head.segments[0].points) == 2
    assert trace.prefix(5.0).arc_length == 2.0
    with pytest.raises(LabError) as err:
        trace.prefix(-1.0)
    assert err.value.code == "empty"


LAM = -1 + 1j


def model_trace():
    u = np.linspace(1, 5 * math.pi, 4000)
    z, w = psi_array(LAM, 1.0, u + 1j * math.log(2))
    return LeafTrace.from_polyline(0, np.column_stack([z, w]))


def single_box_grid(leaf_axis):
    box = FlowBox(box_id=0, chart=0, center=np.array([0.5, 0j]), radius=0.2, leaf_axis=leaf_axis)
    return FlowBoxGrid(foliation=preset("linear", lam=LAM), boxes=[box], r_sing=0.05)


def test_model_leaf_gives_one_plaque_per_turn():
    plaques = extract_plaques(model_trace(), single_box_grid(0))
    assert len(plaques) == 2
    for n, plaque in zip((1, 2), plaques):
        expected = 2 * math.exp(-2 * math.pi * n) * np.exp(-1j * math.log(2))
        assert abs(plaque.alpha - expected) < 1e-9
        assert plaque.bin == 28


def test_disjoint_trace_has_no_plaques():
    trace = LeafTrace.from_polyline(0, [(0.9 + 0.9j, 0.9), (0.95 + 0.9j, 0.9)])
    assert extract_plaques(trace, single_box_grid(0)) == []


def test_tangent_axis_is_flagged():
    grid = single_box_grid(1)
    plaques = extract_plaques(model_trace(), grid)
    assert plaques and all(p.status == BAD_AXIS for p in plaques)
    assert grid.bad_axis == {0}


def test_lattice_grid_avoids_singularities():
    f = preset("jouanolou", d=2)
    grid = lattice_grid(f)
    assert 0 < len(grid.boxes) < 625
    singular = grid.singular_points[0]
    assert len(singular) == 7
    for box in grid.boxes:
        gap = np.min(np.linalg.norm(singular - box.center, axis=1)) - box.radius * math.sqrt(2)
        assert gap >= grid.r_sing
    assert grid.n_bins == 64


def test_axis_projection_is_first_order():
    f = preset("jouanolou", d=2)
    box = FlowBox(box_id=0, chart=0, center=np.array([0.3 + 0j, 0.2 + 0j]), radius=0.1,
                  leaf_axis=int(np.argmax(np.abs(line_field_at(f, 0, (0.3, 0.2))))))
    q = box.center + np.array([1e-3, 1e-3j])
    exact = transversal_crossing(f, box, q)
    approx = axis_projection(f, box, q)[0]
    assert abs(exact - approx) < 1e-4
    assert transversal_crossing(f, box, box.center) == box.center[box.transversal_axis]
