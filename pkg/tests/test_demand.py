from __future__ import annotations

import numpy as np
import pytest

from adversarial_fleet.core.demand import (
    DemandModel,
    RequestTrace,
    TraceRecord,
    estimate_demand,
    expected_eta,
    expected_graph_distance,
    load_trace,
    sample_arrivals,
)
from adversarial_fleet.utils.errors import DataError


def _trace(*rows):
    return RequestTrace(tuple(TraceRecord(*row) for row in rows))


def test_relative_frequencies(grid3):
    model = estimate_demand(_trace((0, 0, 2), (1, 0, 3), (2, 0, 4), (3, 1, 5)), grid3)
    assert model.p_rho == pytest.approx({0: 0.75, 1: 0.25})
    assert model.p_delta == pytest.approx({2: 0.25, 3: 0.25, 4: 0.25, 5: 0.25})
    assert model.p_eta == pytest.approx({1: 1.0})


def test_minutes_without_requests_count_as_zero_arrivals(grid3):
    model = estimate_demand(_trace((0, 0, 1), (3, 1, 2)), grid3)
    assert model.p_eta == pytest.approx({0: 0.5, 1: 0.5})


def test_initial_and_free_locations_default_to_dropoffs(grid3):
    model = estimate_demand(_trace((0, 0, 2), (0, 1, 2), (1, 3, 8)), grid3)
    assert model.p_xi == model.p_delta
    assert model.p_vrand == model.p_delta


def test_location_overrides(grid3):
    model = estimate_demand(_trace((0, 0, 2)), grid3, p_xi={4: 1.0}, p_vrand={5: 1.0})
    assert model.p_xi == {4: 1.0}
    assert model.p_vrand == {5: 1.0}


def test_empty_trace_rejected(grid3):
    with pytest.raises(DataError, match="empty trace"):
        estimate_demand(_trace(), grid3)


def test_unknown_node_rejected(grid3):
    with pytest.raises(DataError, match="node 42"):
        estimate_demand(_trace((0, 0, 42)), grid3)


def test_unnormalized_pmf_rejected():
    with pytest.raises(DataError, match="sum to"):
        DemandModel(p_eta={1: 0.5}, p_rho={0: 1.0}, p_delta={0: 1.0}, p_xi={0: 1.0})


def test_load_trace_with_header(tmp_path, grid3):
    path = tmp_path / "trace.csv"
    path.write_text("minute,pickup_node,dropoff_node\n0,0,1\n0,1,2\n2,4,8\n")
    trace = load_trace(path, grid3)
    assert len(trace) == 3
    assert trace.records[2] == TraceRecord(2, 4, 8)


def test_load_trace_reports_line_of_unknown_node(tmp_path, grid3):
    path = tmp_path / "trace.csv"
    path.write_text("minute,pickup_node,dropoff_node\n0,0,1\n1,0,99\n")
    with pytest.raises(DataError, match="line 3") as excinfo:
        load_trace(path, grid3)
    assert excinfo.value.line == 3


def test_load_trace_rejects_malformed_record(tmp_path):
    path = tmp_path / "trace.csv"
    path.write_text("0,0,1\n1,x,2\n")
    with pytest.raises(DataError, match="line 2"):
        load_trace(path)


def test_load_trace_missing_file(tmp_path):
    with pytest.raises(DataError, match="not found"):
        load_trace(tmp_path / "absent.csv")


@pytest.mark.parametrize(
    "p_eta, expected",
    [({0: 1.0}, 0.0), ({2: 1.0}, 2.0), ({0: 0.5, 2: 0.5}, 1.0), ({1: 0.98, 3: 0.02}, 1.04)],
)
def test_expected_eta(p_eta, expected):
    model = DemandModel(p_eta=p_eta, p_rho={0: 1.0}, p_delta={0: 1.0}, p_xi={0: 1.0})
    assert expected_eta(model) == pytest.approx(expected)


def test_expected_distance_of_point_masses(grid5):
    assert expected_graph_distance(grid5, {7: 1.0}, {7: 1.0}) == 0.0
    assert expected_graph_distance(grid5, {0: 1.0}, {24: 1.0}) == 8.0


def test_expected_distance_matches_double_sum(grid5):
    rng = np.random.default_rng(5)
    weights_p = rng.random(25)
    weights_q = rng.random(25)
    p = {v: float(w) for v, w in zip(grid5.node_ids, weights_p / weights_p.sum())}
    q = {v: float(w) for v, w in zip(grid5.node_ids, weights_q / weights_q.sum())}
    brute = sum(p[u] * q[v] * grid5.distance(u, v) for u in p for v in q)
    assert expected_graph_distance(grid5, p, q) == pytest.approx(brute, abs=1e-9)


def test_uniform_grid_expected_distance():
    from adversarial_fleet.core.graph import grid_graph

    g = grid_graph(15)
    uniform = DemandModel.uniform(g).p_rho
    # mean |x - x'| on {0..k-1} is (k^2 - 1) / (3k), per axis
    assert expected_graph_distance(g, uniform, uniform) == pytest.approx(2 * 224 / 45, abs=1e-9)


def test_zero_arrivals(uniform5):
    model = DemandModel(p_eta={0: 1.0}, p_rho=uniform5.p_rho, p_delta=uniform5.p_delta, p_xi=uniform5.p_xi)
    assert sample_arrivals(model, 0, np.random.default_rng(0)) == []


def test_sampling_is_deterministic(uniform5):
    model = DemandModel(p_eta={0: 0.3, 2: 0.7}, p_rho=uniform5.p_rho, p_delta=uniform5.p_delta, p_xi=uniform5.p_xi)

    def draw(seed):
        rng = np.random.default_rng(seed)
        return [(r.id, r.pickup, r.dropoff) for t in range(50) for r in sample_arrivals(model, t, rng, first_id=t * 10)]

    assert draw(123) == draw(123)
    assert draw(123) != draw(124)


def test_arrival_fields(uniform5):
    requests = sample_arrivals(uniform5, 7, np.random.default_rng(1), first_id=40)
    assert [r.id for r in requests] == [40]
    assert requests[0].entry_time == 7
    assert not requests[0].picked_up and requests[0].agent is None


def test_pickup_frequencies_converge():
    model = DemandModel(p_eta={1: 1.0}, p_rho={0: 0.75, 1: 0.25}, p_delta={0: 1.0}, p_xi={0: 1.0})
    rng = np.random.default_rng(2024)
    draws = np.array([model.draw("p_rho", rng) for _ in range(100_000)])
    empirical = np.array([np.mean(draws == 0), np.mean(draws == 1)])
    total_variation = 0.5 * np.abs(empirical - np.array([0.75, 0.25])).sum()
    assert total_variation <= 0.01


def test_document_round_trip(tmp_path, grid3):
    model = estimate_demand(_trace((0, 0, 2), (0, 1, 2), (2, 3, 8)), grid3, p_vrand={4: 1.0})
    loaded = DemandModel.load(model.save(tmp_path / "model.json"))
    assert loaded == model
    assert loaded.p_vrand == {4: 1.0}
