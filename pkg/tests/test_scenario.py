from pathlib import Path

import pytest
from pydantic import ValidationError

from coalition_utils.scenario import GameKind, Scenario, SweepSpec, build_scenario, load_scenario_data


def test_queue_scenario():
    sc = build_scenario({"game": "queue", "queue": {"servers": [3, 2], "lambda": 4.0}}, {})
    assert sc.game == GameKind.QUEUE
    assert sc.queue_system().lambda_total == 4.0
    assert sc.queue.mu == 1.0
    assert sc.output.format == "csv"


def test_overrides_win():
    base = {"game": "queue", "queue": {"servers": [3, 2], "lambda": 4.0, "mu": 2.0}}
    sc = build_scenario(base, {"queue": {"lambda": 9.0}})
    assert sc.queue.lambda_total == 9.0
    assert sc.queue.mu == 2.0


@pytest.mark.parametrize("data", [
    {"game": "queue"},
    {"game": "kelly", "queue": {"servers": [1], "lambda": 1.0}},
    {"game": "queue", "queue": {"servers": [3, 0], "lambda": 1.0}},
    {"game": "kelly", "kelly": {"influence": [2.0, 1.0], "eta": 0.5}},
    {"game": "queue", "queue": {"servers": [3, 2], "lambda": 1.0}, "partition": "{{1}}"},
    {"game": "queue", "queue": {"servers": [3, 2], "lambda": 1.0}, "payoff": "nucleolus"},
    {"game": "queue", "queue": {"servers": [3, 2], "lambda": 1.0}, "colour": "blue"},
    {"schema_version": 2, "game": "queue", "queue": {"servers": [3, 2], "lambda": 1.0}},
])
def test_invalid_scenarios(data):
    with pytest.raises(ValidationError):
        Scenario.model_validate(data)


def test_linear_grid_labels_are_clean():
    spec = SweepSpec(axis="delta", start=0.1, stop=0.15, alpha=[0, 1])
    values = spec.values()
    assert len(values) == 51
    assert values[46] == 0.146


def test_log_grid():
    spec = SweepSpec(axis="lambda", start=1e-3, stop=1e4, points=20, log=True)
    values = spec.values()
    assert values[0] == pytest.approx(1e-3)
    assert values[-1] == pytest.approx(1e4)
    assert values == sorted(values)


def test_grid_validation():
    with pytest.raises(ValidationError):
        SweepSpec(axis="delta", start=0.0, stop=1.0)
    with pytest.raises(ValidationError):
        SweepSpec(axis="lambda", start=0.0, stop=1.0, log=True, points=5)
    with pytest.raises(ValidationError):
        SweepSpec(axis="lambda", start=2.0, stop=1.0)


SCENARIO_DIR = Path(__file__).resolve().parent.parent / "scenarios"


@pytest.mark.parametrize("path", sorted(SCENARIO_DIR.glob("*.json")), ids=lambda p: p.name)
def test_checked_in_scenarios_validate(path):
    sc = build_scenario(load_scenario_data(str(path)), {})
    assert sc.schema_version == 1
