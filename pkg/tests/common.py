"""Small hand-built worlds shared across the test modules."""
from typing import Optional, Sequence, Tuple

from app.models.configuration import FleetConfiguration
from app.models.topology import (
    DemandPeriod,
    OrderModel,
    OrderPair,
    Port,
    Route,
    SpeedNoise,
    Topology,
    VesselSpec,
)
from app.services.topology_generator import sail_days_for


def two_port_topology(
    horizon: int = 10,
    initial: Tuple[int, int] = (10, 0),
    port_capacity: int = 100,
    volume: float = 2.0,
    reverse_volume: float = 0.0,
    vessel_capacity: int = 20,
    legs: Tuple[float, float] = (2.0, 2.0),
    delay: int = 1,
    noise_cv: float = 0.0,
    sigma: float = 0.0,
    handling_cap: Optional[int] = None,
    periods: Sequence[DemandPeriod] = (),
) -> Topology:
    """Ports A and B on one route R served by vessel V; orders A->B (and optionally B->A)"""
    routes = (Route(id="R", stops=("A", "B"), leg_distances=legs),)
    pairs = [OrderPair(origin="A", destination="B", base_volume=volume, periods=tuple(periods), noise_cv=noise_cv)]
    if reverse_volume:
        pairs.append(OrderPair(origin="B", destination="A", base_volume=reverse_volume, noise_cv=noise_cv))
    return Topology(
        name="two-port",
        ports=(
            Port(id="A", capacity=port_capacity, initial_stock=initial[0], handling_cap=handling_cap),
            Port(id="B", capacity=port_capacity, initial_stock=initial[1], handling_cap=handling_cap),
        ),
        routes=routes,
        vessels=(VesselSpec(id="V", capacity=vessel_capacity, speed_noise=SpeedNoise(sigma=sigma)),),
        order_model=OrderModel(pairs=tuple(pairs), sail_days=sail_days_for(list(routes))),
        empty_return_delay=delay,
        horizon=horizon,
    )


def two_route_topology(horizon: int = 30, vessels: int = 2) -> Topology:
    """Routes R0 = (A, B) and R1 = (B, C) sharing B; demand A->B and B->C"""
    routes = (
        Route(id="R0", stops=("A", "B"), leg_distances=(2.0, 2.0)),
        Route(id="R1", stops=("B", "C"), leg_distances=(3.0, 3.0)),
    )
    return Topology(
        name="two-route",
        ports=tuple(Port(id=port_id, capacity=200, initial_stock=30) for port_id in ("A", "B", "C")),
        routes=routes,
        vessels=tuple(VesselSpec(id=f"V{i}", capacity=40, speed_noise=SpeedNoise(sigma=0.2)) for i in range(vessels)),
        order_model=OrderModel(
            pairs=(
                OrderPair(origin="A", destination="B", base_volume=4.0, noise_cv=0.3),
                OrderPair(origin="B", destination="C", base_volume=3.0, noise_cv=0.3),
            ),
            sail_days=sail_days_for(list(routes)),
        ),
        empty_return_delay=2,
        horizon=horizon,
    )


def single_route_configuration(t: Topology, start: Optional[str] = None) -> FleetConfiguration:
    route = t.routes[0]
    return FleetConfiguration.from_triples((v.id, route.id, start or route.stops[0]) for v in t.vessels)
