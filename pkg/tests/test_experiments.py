import json
import math

import numpy as np
import pytest
import yaml

from core.errors import LabError
from experiments_module import (
    RunConfig, load_run_config, Report, emit_report, render_text, format_value, run_command, parse_point,
    parse_lambda_path
)


def test_run_config_rejects_unknown_field():
    with pytest.raises(LabError) as err:
        RunConfig.from_dict({"command": "sector", "lamda": "0,1"})
    assert err.value.code == "config"
    assert "lam" in err.value.message


@pytest.mark.parametrize("field", ["residual_tol", "curvature_tol", "mass_tol", "ks_max", "slack"])
def test_run_config_rejects_nonpositive_tolerance(field):
    with pytest.raises(LabError) as err:
        RunConfig(command="sector", **{field: 0.0})
    assert err.value.code == "config"


@pytest.mark.parametrize("command", ["wedge", "ergodic", "metric"])
def test_stochastic_command_needs_seed(command):
    with pytest.raises(LabError) as err:
        RunConfig(command=command)
    assert "seed" in err.value.message
    assert RunConfig(command=command, seed=1).seed == 1


def test_run_config_validation():
    for bad in ({"command": "nope"}, {"command": "metric", "seed": 1, "check": "volume"},
                {"command": "sector", "format": "xml"}, {"command": "family-sweep", "steps": 1},
                {"command": "wedge", "seed": 1, "eps": []}):
        with pytest.raises(LabError):
            RunConfig.from_dict(bad)
    with pytest.raises(LabError):
        RunConfig.from_dict({"preset": "jouanolou:2"})


def test_file_and_overrides_merge(tmp_path):
    path = tmp_path / "run.yaml"
    path.write_text(yaml.safe_dump({"command": "wedge", "seed": 5, "pairs": 10, "eps": [0.01, 0.005]}))
    cfg = load_run_config(str(path), {"pairs": 20, "delta": None})
    assert cfg.seed == 5 and cfg.pairs == 20
    assert cfg.eps == [0.01, 0.005] and cfg.delta == [0.3]

    saved = tmp_path / "saved.json"
    cfg.save_to_file(str(saved))
    assert load_run_config(str(saved)) == cfg


def test_output_format_follows_extension():
    assert RunConfig(command="sector").output_format == "text"
    assert RunConfig(command="sector", out="a.json").output_format == "json"
    assert RunConfig(command="sector", out="a.csv").output_format == "csv"
    assert RunConfig(command="sector", out="a.csv", format="json").output_format == "json"


def test_parse_point_and_path():
    np.testing.assert_array_equal(parse_point("0.3,0.1+0.2j"), [0.3, 0.1 + 0.2j])
    assert parse_lambda_path("-1,1 -> -1,1.2") == [-1 + 1j, -1 + 1.2j]
    with pytest.raises(LabError):
        parse_point("1,2,3")
    with pytest.raises(LabError):
        parse_lambda_path("-1,1")


def sample_report():
    report = Report(command="sector", config={"command": "sector"})
    table = report.table("values", ["k", "x", "z"])
    table.add(np.int64(1), 1 / 3, 1 + 2j)
    report.check("ok", True)
    return report


def test_report_exit_code_and_witness():
    report = sample_report()
    assert report.exit_code == 0
    report.check("bad", False)
    assert report.exit_code == 1
    assert report.failed[0].witness
    text = render_text(report)
    assert "PASS ok" in text and "FAIL bad: " in text


def test_report_table_checks_width():
    with pytest.raises(LabError):
        sample_report().tables["values"].add(1, 2)


def test_json_report(tmp_path):
    report = sample_report()
    report.wall_clock = 12.5
    path = tmp_path / "out.json"
    assert emit_report(report, "json", str(path)) == [str(path)]
    data = json.loads(path.read_text())
    assert data["tables"]["values"]["rows"] == [[1, 1 / 3, [1.0, 2.0]]]
    assert data["checks"] == [{"name": "ok", "passed": True, "witness": None}]
    assert "wall_clock" not in data


def test_csv_report(tmp_path):
    report = sample_report()
    second = report.table("extra", ["a"])
    second.add(0.1)
    path = tmp_path / "out.csv"
    written = emit_report(report, "csv", str(path))
    assert written == [str(path), str(tmp_path / "out.extra.csv")]
    lines = path.read_text().splitlines()
    assert lines[0] == "k,x,z"
    assert lines[1] == f"1,{format(1 / 3, '.17g')},1;2"
    assert float(lines[1].split(",")[1]) == 1 / 3

    with pytest.raises(LabError) as err:
        emit_report(Report(command="sector", config={}), "csv", str(path))
    assert err.value.code == "empty"


def test_unwritable_report(tmp_path):
    with pytest.raises(LabError) as err:
        emit_report(sample_report(), "json", str(tmp_path / "missing" / "out.json"))
    assert err.value.code == "unwritable"


def test_format_value():
    assert format_value(0.1) == "0.10000000000000001"
    assert format_value(True) == "true"
    assert format_value(None) == ""
    assert format_value(float("nan")) == "nan"


def test_sector_command():
    report = run_command(RunConfig(command="sector", lam="-1,1", trace_model=True, points=40))
    assert report.exit_code == 0, render_text(report)
    assert report.payload["sector"]["gamma"] > 1
    rows = report.tables["polyline"].rows
    assert len(rows) == 40
    # при λ = −1 + i окно бидиска на прямой v = 1 начинается с u = 1
    assert [row[-1] for row in rows] == [row[0] > 1 for row in rows]


def test_singularities_command():
    report = run_command(RunConfig(command="singularities", preset="jouanolou:2"))
    assert report.exit_code == 0, render_text(report)
    assert len(report.tables["points"].rows) == 7


def test_classify_command():
    report = run_command(RunConfig(command="classify", preset="jouanolou:2"))
    assert [c.name for c in report.checks][0] == "found"
    assert report.checks[0].passed
    assert len(report.tables["singularities"].rows) == 7


def test_poisson_command():
    report = run_command(RunConfig(command="poisson", at="0,1"))
    assert report.exit_code == 0, render_text(report)
    row = report.tables["poisson"].rows[0]
    assert row[2] == pytest.approx(0.5, abs=1e-9)
    assert row[5] == pytest.approx(1.0, abs=1e-9)


def test_poisson_command_reads_csv(tmp_path):
    data = tmp_path / "h.csv"
    xs = np.linspace(-2, 2, 41)
    data.write_text("x,value\n" + "\n".join(f"{x},{1.0}" for x in xs) + "\n")
    report = run_command(RunConfig(command="poisson", data=str(data), at="0,1"))
    value = report.tables["poisson"].rows[0][2]
    assert value == pytest.approx(2 * math.atan(2) / math.pi, abs=1e-6)


def test_trace_command():
    report = run_command(RunConfig(command="trace", preset="jouanolou:2", start="0.3,0.2", arc=0.3))
    assert report.exit_code == 0, render_text(report)
    assert report.tables["trace"].rows[0][1] == pytest.approx(0.3)
    assert report.payload["trace"]["arc_length"] == pytest.approx(0.3)


def test_error_becomes_fail_line():
    report = run_command(RunConfig(command="singularities", preset="nosuch:1"))
    assert report.exit_code == 1
    assert report.checks[-1].name == "error"
    assert report.checks[-1].witness.startswith("config:")
    assert "FAIL error: config:" in render_text(report)


def test_metric_curvature_is_seed_deterministic():
    cfg = RunConfig(command="metric", check="curvature", samples=20, seed=3)
    first, second = run_command(cfg), run_command(cfg)
    assert json.dumps(first.to_dict(), sort_keys=True) == json.dumps(second.to_dict(), sort_keys=True)
    assert first.tables["curvature"].rows
    assert {c.name: c.passed for c in first.checks}["negative-control"]
    other = run_command(RunConfig(command="metric", check="curvature", samples=20, seed=4))
    assert other.tables["curvature"].rows != first.tables["curvature"].rows


def test_metric_schwarz_command():
    report = run_command(RunConfig(command="metric", check="schwarz", samples=10, seed=1))
    assert {c.name: c.passed for c in report.checks}["equality-case"]
    assert len(report.tables["schwarz"].rows) == 10


@pytest.mark.slow
def test_metric_mass_command():
    report = run_command(RunConfig(command="metric", check="mass", seed=1, radii=[0.2, 0.1], panels=16))
    assert report.exit_code == 0, render_text(report)
    assert [row[0] for row in report.tables["mass"].rows] == [1.0, 0.2, 0.1]


@pytest.mark.slow
def test_family_sweep_command():
    report = run_command(RunConfig(command="family-sweep", lambda_path="-1,1 -> -1,1.2", steps=2, panels=8))
    assert report.exit_code == 0, render_text(report)
    assert list(report.tables) == ["distances", "family"]
    assert len(report.tables["family"].rows) == 2


@pytest.mark.slow
def test_wedge_command():
    report = run_command(RunConfig(command="wedge", seed=7, pairs=50, eps=[1e-2, 5e-3]))
    rows = report.tables["wedge"].rows
    assert [row[0] for row in rows] == [1e-2, 5e-3]
    assert all(row[2] >= 0 for row in rows)
    assert report.checks[0].name == "wedge-trend[delta=0.3]"
