from __future__ import annotations

import pytest
import yaml

from adversarial_fleet.config import ScenarioConfig
from adversarial_fleet.core.analysis import GroundMetric
from adversarial_fleet.core.demand import DemandModel
from adversarial_fleet.core.fleet import DelayMode
from adversarial_fleet.core.graph import grid_document
from adversarial_fleet.core.policy import PolicyKind
from adversarial_fleet.utils.errors import ConfigError, DataError
from adversarial_fleet.utils.helpers import write_json

MINIMAL = {"graph": {"grid": 3}, "demand": {"uniform": True}}


def _doc(**overrides):
    doc = dict(MINIMAL)
    doc.update(overrides)
    return doc


def test_defaults():
    cfg = ScenarioConfig.from_document(MINIMAL)
    assert cfg.policy is PolicyKind.RANDOM_ASSIGNMENT
    assert cfg.delay_mode is DelayMode.FIXED_MAXIMUM
    assert cfg.analysis.metric is GroundMetric.GRAPH_HOPS
    assert cfg.stability.slope == 0.02 and cfg.stability.ratio == 2.0
    assert cfg.f_max == cfg.adversarial_fraction == 0.0


def test_f_max_override():
    cfg = ScenarioConfig.from_document(_doc(adversarial_fraction=0.2, analysis={"f_max": 0.6}))
    assert cfg.f_max == 0.6


@pytest.mark.parametrize(
    "doc, message",
    [
        (_doc(colour="red"), "unknown key"),
        (_doc(analysis={"metrc": "euclidean"}), "analysis: unknown key"),
        (_doc(output={"directory": "x"}), "output: unknown key"),
        ({"graph": {"grid": 3, "path": "g.json"}, "demand": {"uniform": True}}, "exactly one"),
        ({"graph": {"grid": 3}, "demand": {}}, "exactly one"),
        ({"graph": {"grid": 3}, "demand": {"trace": "t.csv", "eta": {"1": 1.0}}}, "only applies"),
        (_doc(policy="greedy"), "policy"),
        (_doc(fleet_size=2.5), "fleet_size"),
        (_doc(adversarial_fraction=1.5), "adversarial_fraction"),
        (_doc(symmetric="yes"), "symmetric"),
        (_doc(analysis={"estimates": {"e_eta": 1.0}}), "missing"),
        (_doc(demand={"uniform": True, "eta": {"x": 1.0}}), "demand.eta"),
    ],
)
def test_invalid_documents(doc, message):
    with pytest.raises(ConfigError, match=message):
        ScenarioConfig.from_document(doc)


def test_load_yaml(tmp_path):
    path = tmp_path / "scenario.yaml"
    path.write_text(
        yaml.safe_dump(
            {
                "graph": {"grid": 4},
                "demand": {"uniform": True, "eta": {0: 0.5, 2: 0.5}},
                "policy": "instantaneous-assignment",
                "fleet_size": 8,
                "adversarial_fraction": 0.25,
                "delta": 5,
                "delay_mode": "uniform",
                "output": {"dir": "results"},
            }
        )
    )
    cfg = ScenarioConfig.load(path)
    assert cfg.policy is PolicyKind.INSTANTANEOUS_ASSIGNMENT
    assert cfg.demand["eta"] == {0: 0.5, 2: 0.5}
    assert cfg.output.dir == tmp_path / "results"

    g = cfg.resolve_graph()
    sc = cfg.scenario(g, cfg.resolve_demand(g))
    assert sc.fleet_size == 8 and sc.delay_mode is DelayMode.UNIFORM
    assert sc.delay_policy().delta == 5


def test_missing_and_invalid_files(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        ScenarioConfig.load(tmp_path / "absent.yaml")
    bad = tmp_path / "bad.yaml"
    bad.write_text("graph: [unclosed\n")
    with pytest.raises(ConfigError, match="invalid YAML"):
        ScenarioConfig.load(bad)


def test_resolve_graph_and_model_from_files(tmp_path):
    write_json(tmp_path / "graph.json", grid_document(3))
    g_cfg = ScenarioConfig.from_document({"graph": {"path": "graph.json"}, "demand": {"uniform": True}}, tmp_path)
    g = g_cfg.resolve_graph()
    assert g.num_nodes == 9

    DemandModel(p_eta={1: 1.0}, p_rho={0: 1.0}, p_delta={8: 1.0}, p_xi={4: 1.0}).save(tmp_path / "model.json")
    m_cfg = ScenarioConfig.from_document({"graph": {"path": "graph.json"}, "demand": {"model": "model.json"}}, tmp_path)
    assert m_cfg.resolve_demand(g).p_xi == {4: 1.0}


def test_model_off_the_graph_is_a_data_error(tmp_path):
    DemandModel(p_eta={1: 1.0}, p_rho={0: 1.0}, p_delta={50: 1.0}, p_xi={4: 1.0}).save(tmp_path / "model.json")
    cfg = ScenarioConfig.from_document({"graph": {"grid": 3}, "demand": {"model": "model.json"}}, tmp_path)
    with pytest.raises(DataError):
        cfg.resolve_demand(cfg.resolve_graph())


def test_document_echo():
    cfg = ScenarioConfig.from_document(_doc(demand={"uniform": True, "eta": {"2": 1.0}}, delta=4))
    doc = cfg.to_document()
    assert doc["demand"]["eta"] == {"2": 1.0}
    assert doc["delta"] == 4
    assert doc["analysis"]["metric"] == "graph-hops"
    yaml.safe_dump(doc)
