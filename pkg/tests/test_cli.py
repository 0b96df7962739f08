from __future__ import annotations

import json

import pandas as pd
import pytest
import yaml

from adversarial_fleet.cli import EXIT_CONFIG, EXIT_DATA, EXIT_OK, main
from tests.conftest import SF_TRACE_ESTIMATES


def _write_config(tmp_path, **doc):
    path = tmp_path / "scenario.yaml"
    path.write_text(yaml.safe_dump(doc))
    return path


@pytest.fixture
def small_config(tmp_path):
    return _write_config(
        tmp_path,
        graph={"grid": 5},
        demand={"uniform": True},
        fleet_size=6,
        adversarial_fraction=0.5,
        delta=2,
        horizon=120,
        runs=2,
        seed=1,
    )


def test_gridgen(tmp_path, capsys):
    out = tmp_path / "grid.json"
    assert main(["gridgen", "2", "--out", str(out)]) == EXIT_OK
    doc = json.loads(out.read_text())
    assert len(doc["nodes"]) == 4 and len(doc["edges"]) == 8
    assert "4 nodes, 8 edges" in capsys.readouterr().out


def test_gridgen_too_small(tmp_path):
    assert main(["gridgen", "1", "--out", str(tmp_path / "g.json")]) == EXIT_CONFIG


def test_solve(tmp_path, capsys):
    costs = tmp_path / "costs.csv"
    costs.write_text("1,2\n2,1\n")
    out = tmp_path / "matching.json"
    assert main(["solve", str(costs), "--out", str(out)]) == EXIT_OK
    printed = capsys.readouterr().out.splitlines()
    assert printed[:3] == ["0,0", "1,1", "total_cost=2"]
    assert json.loads(out.read_text()) == {"pairs": [[0, 0], [1, 1]], "total_cost": 2}


@pytest.mark.parametrize("content", ["1,-2\n2,1\n", "1,a\n2,1\n", "1.5,2\n2,1\n"])
def test_solve_rejects_bad_matrices(tmp_path, content):
    costs = tmp_path / "costs.csv"
    costs.write_text(content)
    assert main(["solve", str(costs)]) == EXIT_DATA


def test_estimate(tmp_path, capsys):
    graph = tmp_path / "grid.json"
    main(["gridgen", "3", "--out", str(graph)])
    trace = tmp_path / "trace.csv"
    trace.write_text("minute,pickup_node,dropoff_node\n0,0,8\n0,1,7\n1,2,6\n")
    model = tmp_path / "model.json"
    assert main(["estimate", str(trace), str(graph), "--out", str(model)]) == EXIT_OK
    doc = json.loads(model.read_text())
    assert doc["p_eta"] == {"1": 0.5, "2": 0.5}
    assert "E[eta]            = 1.5000" in capsys.readouterr().out


def test_estimate_reports_bad_line(tmp_path, capsys):
    graph = tmp_path / "grid.json"
    main(["gridgen", "3", "--out", str(graph)])
    trace = tmp_path / "trace.csv"
    trace.write_text("0,0,8\n0,1,70\n")
    assert main(["estimate", str(trace), str(graph), "--out", str(tmp_path / "m.json")]) == EXIT_DATA
    assert "line 2" in capsys.readouterr().err


def test_analyze_from_estimates(tmp_path, capsys):
    config = _write_config(
        tmp_path,
        graph={"grid": 3},
        demand={"uniform": True},
        fleet_size=35,
        adversarial_fraction=0.4,
        delta=15,
        analysis={"estimates": SF_TRACE_ESTIMATES, "f_values": [0.4]},
    )
    assert main(["analyze", str(config)]) == EXIT_OK
    doc = json.loads((tmp_path / "out" / "report.json").read_text())
    assert doc["report"]["n_coop"] == 35
    assert doc["report"]["n_robust"] == 47
    assert doc["recovery"][0]["added_cooperative"] == 7
    assert "+7 cooperative" in capsys.readouterr().out


def test_analyze_zero_delay_is_a_config_error(tmp_path, capsys):
    config = _write_config(tmp_path, graph={"grid": 3}, demand={"uniform": True}, delta=0)
    assert main(["analyze", str(config)]) == EXIT_CONFIG
    assert "undefined" in capsys.readouterr().err


def test_simulate_rerun_is_byte_identical(tmp_path, small_config, capsys):
    first, second = tmp_path / "first", tmp_path / "second"
    assert main(["simulate", str(small_config), "--out", str(first)]) == EXIT_OK
    assert main(["simulate", str(small_config), "--out", str(second)]) == EXIT_OK
    for name in ("series.csv", "summary.json"):
        assert (first / name).read_bytes() == (second / name).read_bytes()
    summary = json.loads((first / "summary.json").read_text())
    assert summary["classification"] in {"stable-like", "unstable-like"}
    assert len(summary["runs"]) == 2
    assert "Classification:" in capsys.readouterr().out


def test_simulate_overrides(tmp_path, small_config):
    out = tmp_path / "override"
    assert main(["simulate", str(small_config), "--runs", "1", "--horizon", "100", "--out", str(out)]) == EXIT_OK
    assert len(pd.read_csv(out / "series.csv")) == 100
    assert len(json.loads((out / "summary.json").read_text())["runs"]) == 1


def test_simulate_rejects_non_integral_fleet(tmp_path):
    config = _write_config(tmp_path, graph={"grid": 3}, demand={"uniform": True}, fleet_size=5,
                           adversarial_fraction=0.3, delta=2, horizon=100)
    assert main(["simulate", str(config)]) == EXIT_CONFIG


def test_sweep(tmp_path, capsys):
    config = _write_config(
        tmp_path,
        graph={"grid": 5},
        demand={"uniform": True},
        delta=2,
        horizon=120,
        sweep={"policies": ["random-assignment"], "fractions": [0.0, 0.5], "fleet_sizes": [4, "coop"]},
    )
    assert main(["sweep", str(config)]) == EXIT_OK
    frame = pd.read_csv(tmp_path / "out" / "sweep.csv")
    # 7 agents cannot hold half adversaries, so that combination is skipped
    assert list(frame.columns) == ["t", "ra_N4_F0.0000", "ra_N7_F0.0000", "ra_N4_F0.5000"]
    assert len(frame) == 120


def test_unknown_key_exit_code(tmp_path, capsys):
    config = _write_config(tmp_path, graph={"grid": 3}, demand={"uniform": True}, flet_size=3)
    assert main(["simulate", str(config)]) == EXIT_CONFIG
    assert "unknown key" in capsys.readouterr().err


def test_missing_config(tmp_path):
    assert main(["analyze", str(tmp_path / "absent.yaml")]) == EXIT_CONFIG


def test_graph_data_error(tmp_path):
    graph = tmp_path / "graph.json"
    graph.write_text(json.dumps({"nodes": [{"id": 0, "x": 0, "y": 0}, {"id": 1, "x": 1, "y": 0}],
                                 "edges": [{"from": 0, "to": 1}]}))
    config = _write_config(tmp_path, graph={"path": "graph.json"}, demand={"uniform": True}, delta=2, horizon=100)
    assert main(["simulate", str(config)]) == EXIT_DATA
