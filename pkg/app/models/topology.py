import hashlib
import math
from enum import StrEnum
from functools import cached_property
from typing import Dict, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict


class SpeedNoiseKind(StrEnum):
    """Enum for travel-time multiplier distributions"""
    UNIFORM = "uniform"


class SpeedNoise(BaseModel):
    """Multiplier distribution applied to nominal leg days (u_v)"""
    model_config = ConfigDict(frozen=True)

    kind: SpeedNoiseKind = SpeedNoiseKind.UNIFORM
    sigma: float = 0.0


class Port(BaseModel):
    """Pydantic model for a harbor and its empty-container yard"""
    model_config = ConfigDict(frozen=True)

    id: str
    capacity: int
    initial_stock: int
    # None means unbounded
    handling_cap: Optional[int] = None


class Route(BaseModel):
    """Directed cycle of harbors; the last stop sails back to the first"""
    model_config = ConfigDict(frozen=True)

    id: str
    stops: Tuple[str, ...]
    leg_distances: Tuple[float, ...]

    def next_index(self, index: int) -> int:
        return (index + 1) % len(self.stops)

    def contains(self, port_id: str) -> bool:
        return port_id in self.stops


class VesselSpec(BaseModel):
    """Pydantic model for a vessel"""
    model_config = ConfigDict(frozen=True)

    id: str
    capacity: int
    speed_noise: SpeedNoise = SpeedNoise()


class DemandPeriod(BaseModel):
    """One sinusoidal component of an order pair's daily mean"""
    model_config = ConfigDict(frozen=True)

    amplitude: float
    period_days: float
    phase: float = 0.0


class OrderPair(BaseModel):
    """Order stream between an origin and a destination port"""
    model_config = ConfigDict(frozen=True)

    origin: str
    destination: str
    base_volume: float
    periods: Tuple[DemandPeriod, ...] = ()
    noise_cv: float = 0.0

    def mean(self, day: int) -> float:
        """Clipped daily mean: max(0, base * (1 + sum a_k sin(2 pi day / T_k + phi_k)))"""
        shape = 1.0 + sum(
            period.amplitude * math.sin(2.0 * math.pi * day / period.period_days + period.phase)
            for period in self.periods
        )
        return max(0.0, self.base_volume * shape)

    def means(self, days: np.ndarray) -> np.ndarray:
        """Vectorized clipped mean over an array of days"""
        shape = np.ones_like(days, dtype=float)
        for period in self.periods:
            shape += period.amplitude * np.sin(2.0 * np.pi * days / period.period_days + period.phase)
        return np.maximum(0.0, self.base_volume * shape)


class SailDays(BaseModel):
    """Nominal shipping days between an origin and a destination"""
    model_config = ConfigDict(frozen=True)

    origin: str
    destination: str
    days: float


class OrderModel(BaseModel):
    """Stochastic order function q"""
    model_config = ConfigDict(frozen=True)

    pairs: Tuple[OrderPair, ...] = ()
    sail_days: Tuple[SailDays, ...] = ()

    @cached_property
    def sail_lookup(self) -> Dict[Tuple[str, str], float]:
        return {(entry.origin, entry.destination): entry.days for entry in self.sail_days}

    def sail_days_between(self, origin: str, destination: str) -> Optional[float]:
        return self.sail_lookup.get((origin, destination))

    def mean_daily(self, pair: OrderPair, horizon: int) -> float:
        """Mean of the clipped daily mean over days 0..horizon-1"""
        return float(pair.means(np.arange(horizon)).mean())


class Topology(BaseModel):
    """Immutable world description G = (H, V, E) plus orders and horizon"""
    model_config = ConfigDict(frozen=True)

    name: str = "topology"
    ports: Tuple[Port, ...]
    routes: Tuple[Route, ...] = ()
    vessels: Tuple[VesselSpec, ...] = ()
    order_model: OrderModel = OrderModel()
    empty_return_delay: int = 2
    horizon: int

    @cached_property
    def port_index(self) -> Dict[str, Port]:
        return {port.id: port for port in self.ports}

    @cached_property
    def route_index(self) -> Dict[str, Route]:
        return {route.id: route for route in self.routes}

    @cached_property
    def vessel_index(self) -> Dict[str, VesselSpec]:
        return {vessel.id: vessel for vessel in self.vessels}

    def port(self, port_id: str) -> Port:
        return self.port_index[port_id]

    def route(self, route_id: str) -> Route:
        return self.route_index[route_id]

    def vessel(self, vessel_id: str) -> VesselSpec:
        return self.vessel_index[vessel_id]

    def fingerprint(self) -> str:
        """SHA-256 of the canonical JSON form"""
        return hashlib.sha256(self.model_dump_json().encode("utf-8")).hexdigest()
