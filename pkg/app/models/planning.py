from dataclasses import dataclass
from enum import StrEnum
from functools import cached_property
from typing import Dict, Hashable, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict


class ForecastDemand(BaseModel):
    model_config = ConfigDict(frozen=True)

    origin: str
    destination: str
    day: int
    quantity: int


class ForecastCall(BaseModel):
    """Expected vessel arrival; ordinal counts the vessel's arrivals since day 0"""
    model_config = ConfigDict(frozen=True)

    port: str
    day: int
    ordinal: int


class Forecast(BaseModel):
    """Noisy estimate of orders and arrivals over [from_day, to_day)"""
    model_config = ConfigDict(frozen=True)

    from_day: int
    to_day: int
    noise_level: float = 0.0
    demands: Tuple[ForecastDemand, ...] = ()
    arrivals: Dict[str, Tuple[ForecastCall, ...]] = {}

    @cached_property
    def demand_lookup(self) -> Dict[Tuple[str, str, int], int]:
        return {(d.origin, d.destination, d.day): d.quantity for d in self.demands}

    def demand(self, origin: str, destination: str, day: int) -> int:
        return self.demand_lookup.get((origin, destination, day), 0)

    @property
    def total_demand(self) -> int:
        return sum(d.quantity for d in self.demands)


class PlanMove(BaseModel):
    model_config = ConfigDict(frozen=True)

    vessel: str
    call: int
    port: str
    day: int
    delta: int


class Plan(BaseModel):
    """Signed empty moves per (vessel, call ordinal) and the planned outcome"""
    model_config = ConfigDict(frozen=True)

    moves: Tuple[PlanMove, ...] = ()
    planned_objective: float = 0.0
    planned_shortage: int = 0
    from_day: int = 0
    window: int = 0
    # True once the search has shown no move sequence serves more forecast demand
    proven_optimal: bool = False

    @cached_property
    def move_lookup(self) -> Dict[Tuple[str, int], int]:
        return {(move.vessel, move.call): move.delta for move in self.moves}

    def delta_for(self, vessel: str, call: int) -> int:
        return self.move_lookup.get((vessel, call), 0)


class ArcKind(StrEnum):
    """Enum for the roles of arcs in the planning network"""
    PASS = "pass"
    CARRY = "carry"
    OVERFLOW = "overflow"
    DRAIN = "drain"
    DEMAND = "demand"
    LOAD = "load"
    DISCHARGE = "discharge"
    LEG = "leg"
    STRAND = "strand"


@dataclass(frozen=True, slots=True)
class FlowArc:
    tail: Hashable
    head: Hashable
    # None means uncapacitated
    capacity: Optional[int]
    cost: int
    kind: ArcKind = ArcKind.PASS
    key: Tuple = ()


@dataclass
class FlowNetwork:
    """Directed network with node supplies; every unit of supply must reach the sink"""
    nodes: List[Hashable]
    arcs: List[FlowArc]
    supplies: Dict[Hashable, int]
    sink: Hashable
    window: Tuple[int, int] = (0, 0)
    total_forecast_demand: int = 0

    @property
    def total_supply(self) -> int:
        return sum(self.supplies.values())

    def arcs_of(self, kind: ArcKind) -> List[int]:
        return [index for index, arc in enumerate(self.arcs) if arc.kind == kind]


@dataclass
class FlowSolution:
    flows: List[int]
    objective: int
    # node potentials, present when certification was requested
    potentials: Optional[Dict[Hashable, int]] = None
    augmentations: int = 0
