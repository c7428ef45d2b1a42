from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict

from app.models.configuration import FleetConfiguration
from app.models.topology import Topology


class Observation(BaseModel):
    """Local view of the port agent at a vessel arrival"""
    model_config = ConfigDict(frozen=True)

    port_stock: int
    port_capacity: int
    vessel_empties: int
    vessel_free_space: int
    recent_demand: int
    recent_shortage: int
    day: int
    horizon: int


class DecisionPoint(BaseModel):
    """A vessel arrival at which a repositioning action is taken"""
    model_config = ConfigDict(frozen=True)

    vessel_id: str
    port_id: str
    day: int
    call_ordinal: int
    observation: Observation
    max_load: int
    max_discharge: int


class EpisodeEnd(BaseModel):
    """Returned by next_decision once the horizon is exhausted"""
    model_config = ConfigDict(frozen=True)

    day: int
    total_demand: int
    total_shortage: int


class RepositionAction(BaseModel):
    """Signed move: positive loads empties onto the vessel, negative discharges them"""
    model_config = ConfigDict(frozen=True)

    delta: int = 0


class EpisodeMetrics(BaseModel):
    """Per-episode shortage accounting and return"""
    total_demand: int
    total_shortage: int
    total_fulfilled: int
    shortage_by_port_day: Dict[str, List[int]]
    fulfillment_pct: float
    discounted_return: float
    decisions: int = 0
    clamped_actions: int = 0


class TraceRow(BaseModel):
    day: int
    port: str
    stock: int
    demand: int
    fulfilled: int
    shortage: int


@dataclass
class LadenLot:
    """Containers destined for `port`; empties once `maturity_day` is reached"""
    port: str
    maturity_day: int
    quantity: int


@dataclass
class VesselState:
    route_id: str
    stop_index: int
    arrival_day: int
    empties: int = 0
    laden: Dict[str, int] = field(default_factory=dict)
    call_count: int = 0
    # False once the next arrival falls beyond the horizon
    scheduled: bool = True

    @property
    def laden_total(self) -> int:
        return sum(self.laden.values())


@dataclass
class SimState:
    """Mutable state of one episode; owned by a single rollout"""
    topology: Topology
    configuration: FleetConfiguration
    day: int
    port_stock: Dict[str, int]
    vessels: Dict[str, VesselState]
    waiting_laden: Dict[str, List[List]]
    in_transit_laden: List[LadenLot]
    pending_events: List[Tuple[int, str, str]]
    rng: np.random.Generator
    observation_window: int = 7
    initial_total: int = 0
    day_started: bool = False
    pending_decision: Optional[DecisionPoint] = None
    demand_by_port_day: Dict[str, List[int]] = field(default_factory=dict)
    shortage_by_port_day: Dict[str, List[int]] = field(default_factory=dict)
    total_demand: int = 0
    total_shortage: int = 0
    decisions: int = 0
    clamped_actions: int = 0
    record_trace: bool = False
    trace: List[TraceRow] = field(default_factory=list)
    # set when the episode replays a forecast instead of sampling the world
    end_day: Optional[int] = None
    scripted_orders: Optional[Dict[int, List[Tuple[str, str, int]]]] = None
    scripted_calls: Optional[Dict[Tuple[str, int], int]] = None

    @property
    def total_fulfilled(self) -> int:
        return self.total_demand - self.total_shortage

    def containers_in_system(self) -> int:
        """Left-hand side of the conservation identity"""
        return (
            sum(self.port_stock.values())
            + sum(v.empties + v.laden_total for v in self.vessels.values())
            + sum(qty for lots in self.waiting_laden.values() for _, qty in lots)
            + sum(lot.quantity for lot in self.in_transit_laden)
        )
