# coalition_utils/scenario.py
"""Scenario files: one JSON document describing a system, the analyses to run
on it and where results go. Command-line flags are merged on top before the
document is validated, so bad parameters are rejected before any compute."""

import json
from enum import Enum
from typing import Any, Dict, List, Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from coalition_utils.kelly import KellySystem
from coalition_utils.partitions import Partition
from coalition_utils.wardrop import QueueSystem

SCHEMA_VERSION = 1


class GameKind(str, Enum):
    QUEUE = "queue"
    KELLY = "kelly"


class SweepAxis(str, Enum):
    LAMBDA = "lambda"
    ETA = "eta"
    DELTA = "delta"
    LEAD_SERVERS = "lead_servers"


class QueueParams(BaseModel):
    model_config = ConfigDict(populate_by_name=True, extra="forbid")

    servers: List[int]
    lambda_total: float = Field(alias="lambda")
    mu: float = 1.0

    def to_system(self) -> QueueSystem:
        return QueueSystem(tuple(self.servers), self.lambda_total, self.mu)


class KellyParams(BaseModel):
    model_config = ConfigDict(extra="forbid")

    influence: List[float]
    eta: Optional[float] = None
    gamma: float = 1.0
    action_bound: Optional[float] = None

    def to_system(self) -> KellySystem:
        return KellySystem(tuple(self.influence), self.gamma, self.eta, self.action_bound)


class SweepSpec(BaseModel):
    """Grid along one parameter.

    ``lambda`` accepts a log grid, ``delta`` rebuilds the influence vector as
    ``base - alpha_j * delta`` and ``lead_servers`` changes provider 1's server count.
    """

    model_config = ConfigDict(extra="forbid")

    axis: SweepAxis
    start: float
    stop: float
    step: Optional[float] = None
    points: Optional[int] = None
    log: bool = False
    alpha: Optional[List[float]] = None
    base: float = 20.0

    @model_validator(mode="after")
    def _check_grid(self):
        if self.log and (self.points is None or self.start <= 0 or self.stop <= 0):
            raise ValueError("A log grid needs positive bounds and a point count")
        if self.step is None and self.points is None:
            self.step = 0.001 if self.axis in (SweepAxis.DELTA, SweepAxis.ETA) else 1.0
        if self.step is not None and not self.step > 0:
            raise ValueError(f"Sweep step must be positive, got {self.step}")
        if self.axis == SweepAxis.DELTA and not self.alpha:
            raise ValueError("A delta sweep needs an alpha vector")
        if self.stop < self.start:
            raise ValueError(f"Sweep stops at {self.stop}, before its start {self.start}")
        return self

    def values(self) -> List[float]:
        if self.log:
            return [float(v) for v in np.geomspace(self.start, self.stop, self.points)]
        if self.points is not None:
            return [float(v) for v in np.linspace(self.start, self.stop, self.points)]
        count = int(round((self.stop - self.start) / self.step))
        # rounding keeps grid labels such as 0.146 free of float noise
        return [round(self.start + i * self.step, 12) for i in range(count + 1)]


class OutputSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    directory: Optional[str] = None
    format: Literal["csv", "json"] = "csv"


class Scenario(BaseModel):
    model_config = ConfigDict(extra="forbid")

    schema_version: Literal[1] = SCHEMA_VERSION
    game: GameKind
    queue: Optional[QueueParams] = None
    kelly: Optional[KellyParams] = None
    partition: Optional[str] = None
    rule: Optional[str] = None
    payoff: str = "proportional"
    analysis: List[str] = Field(default_factory=list)
    sweep: Optional[SweepSpec] = None
    seed: int = 0
    runs: int = Field(default=1, ge=1)
    max_steps: Optional[int] = Field(default=None, ge=1)
    output: OutputSpec = Field(default_factory=OutputSpec)

    @model_validator(mode="after")
    def _check_game(self):
        if self.game == GameKind.QUEUE:
            if self.queue is None:
                raise ValueError("A queue scenario needs a 'queue' section")
            n = len(self.queue.to_system().servers)
        else:
            if self.kelly is None:
                raise ValueError("A kelly scenario needs a 'kelly' section")
            n = self.kelly.to_system().n
        if self.partition is not None:
            Partition.parse(self.partition, n)
        if self.payoff not in ("proportional", "shapley") and not self.payoff.startswith("file:"):
            raise ValueError(f"Unknown payoff rule '{self.payoff}'")
        return self

    def queue_system(self) -> QueueSystem:
        return self.queue.to_system()

    def kelly_system(self) -> KellySystem:
        return self.kelly.to_system()

    def parsed_partition(self) -> Optional[Partition]:
        if self.partition is None:
            return None
        n = len(self.queue.servers) if self.game == GameKind.QUEUE else len(self.kelly.influence)
        return Partition.parse(self.partition, n)


def _deep_update(base, overrides):
    merged = dict(base)
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _deep_update(merged[key], value)
        else:
            merged[key] = value
    return merged


def load_scenario_data(path: str) -> Dict[str, Any]:
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)


def build_scenario(data: Optional[Dict[str, Any]], overrides: Dict[str, Any]) -> Scenario:
    """Validate ``data`` (possibly empty) with ``overrides`` taking precedence."""
    return Scenario.model_validate(_deep_update(data or {}, overrides))
