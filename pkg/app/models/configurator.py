from dataclasses import dataclass
from typing import Dict, List, Optional, Set, Tuple

from pydantic import BaseModel

from app.models.configuration import Assignment, FleetConfiguration
from app.models.topology import Topology


class TrainIteration(BaseModel):
    iteration: int
    mean_reward: float
    best_reward: float
    entropy: float
    grad_norm: float


class EvaluatedConfiguration(BaseModel):
    configuration: FleetConfiguration
    reward: float
    iteration: int


class TrainReport(BaseModel):
    """Training curve plus every configuration evaluated, in discovery order"""
    iterations: List[TrainIteration] = []
    evaluated: List[EvaluatedConfiguration] = []
    best: Optional[EvaluatedConfiguration] = None
    rollouts: int = 0
    greedy_configuration: Optional[FleetConfiguration] = None

    def record(self, configuration: FleetConfiguration, reward: float, iteration: int) -> None:
        entry = EvaluatedConfiguration(configuration=configuration, reward=reward, iteration=iteration)
        self.evaluated.append(entry)
        # strict comparison keeps the earliest discovery on ties
        if self.best is None or reward > self.best.reward:
            self.best = entry


class ConfiguratorCheckpoint(BaseModel):
    """On-disk layout of configurator parameters"""
    format_version: int = 1
    topology_fingerprint: str
    hidden_width: int
    params: Dict[str, List]


ConfTriple = Tuple[str, str, str]


@dataclass(frozen=True)
class ConfState:
    """
    State of the construction process: one slot per vessel in topology order.

    A None slot is the unassigned marker.
    """
    topology: Topology
    slots: Tuple[Optional[Assignment], ...]
    demand_share: Tuple[float, ...]

    @property
    def step(self) -> int:
        return sum(slot is not None for slot in self.slots)

    @property
    def terminal(self) -> bool:
        return self.step == len(self.slots)

    @property
    def unassigned(self) -> Set[str]:
        return {vessel.id for vessel, slot in zip(self.topology.vessels, self.slots) if slot is None}

    def configuration(self) -> FleetConfiguration:
        return FleetConfiguration(assignments=tuple(slot for slot in self.slots if slot is not None))
