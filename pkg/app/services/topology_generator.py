"""Bundled reference topologies: desk scale, WWT-shaped synthetic stand-ins and the planted two-route instance."""
import logging
from enum import StrEnum
from itertools import permutations
from typing import Dict, List, Optional, Tuple

import numpy as np

from app.core.seeding import SeedStream, derive_seed
from app.models.topology import (
    DemandPeriod,
    OrderModel,
    OrderPair,
    Port,
    Route,
    SailDays,
    SpeedNoise,
    Topology,
    VesselSpec,
)

logger = logging.getLogger(__name__)


class TopologyShape(StrEnum):
    """Enum for the shapes gen_topology can emit"""
    DESK = "desk"
    WWT1 = "wwt1-shaped"
    WWT2 = "wwt2-shaped"
    PLANTED = "planted"


# ports, routes, vessels, horizon
WWT_COUNTS: Dict[TopologyShape, Tuple[int, int, int, int]] = {
    TopologyShape.WWT1: (22, 13, 46, 400),
    TopologyShape.WWT2: (22, 6, 46, 200),
}


def sail_days_for(routes: List[Route]) -> Tuple[SailDays, ...]:
    """Shortest along-route sailing time between every ordered pair of co-routed stops"""
    best: Dict[Tuple[str, str], float] = {}
    for route in routes:
        size = len(route.stops)
        for start in range(size):
            elapsed = 0.0
            index = start
            for _ in range(size - 1):
                elapsed += route.leg_distances[index]
                index = route.next_index(index)
                key = (route.stops[start], route.stops[index])
                best[key] = min(best.get(key, elapsed), elapsed)
    return tuple(SailDays(origin=o, destination=d, days=days) for (o, d), days in sorted(best.items()))


def random_periods(rng: np.random.Generator, count: int = 2) -> Tuple[DemandPeriod, ...]:
    """Trigonometric components whose amplitudes sum below one"""
    amplitudes = rng.uniform(0.05, 0.9 / count, size=count)
    periods = rng.uniform(7.0, 60.0, size=count)
    phases = rng.uniform(0.0, 2.0 * np.pi, size=count)
    return tuple(
        DemandPeriod(amplitude=round(float(a), 4), period_days=round(float(T), 2), phase=round(float(phi), 4))
        for a, T, phi in zip(amplitudes, periods, phases)
    )


def desk_topology(seed: int = 0) -> Topology:
    """
    Four ports, two routes sharing P2, three vessels, 60 days.

    P0 exports far more than it imports, so its yard runs dry without repositioning.
    """
    rng = np.random.default_rng(derive_seed(seed, SeedStream.EPISODE, 0))
    routes = [
        Route(id="R0", stops=("P0", "P1", "P2"), leg_distances=(3.0, 3.0, 4.0)),
        Route(id="R1", stops=("P2", "P3"), leg_distances=(2.0, 2.0)),
    ]
    ports = [
        Port(id="P0", capacity=300, initial_stock=80),
        Port(id="P1", capacity=300, initial_stock=60),
        Port(id="P2", capacity=300, initial_stock=60),
        Port(id="P3", capacity=300, initial_stock=60),
    ]
    volumes = {
        ("P0", "P1"): 8.0, ("P0", "P2"): 6.0, ("P1", "P2"): 3.0,
        ("P2", "P0"): 2.0, ("P2", "P3"): 4.0, ("P3", "P2"): 3.0,
    }
    pairs = tuple(
        OrderPair(
            origin=origin,
            destination=destination,
            base_volume=round(volume * float(rng.uniform(0.9, 1.1)), 3),
            periods=random_periods(rng),
            noise_cv=0.2,
        )
        for (origin, destination), volume in volumes.items()
    )
    vessels = [
        VesselSpec(id=f"V{index}", capacity=80, speed_noise=SpeedNoise(sigma=0.1))
        for index in range(3)
    ]
    return Topology(
        name="desk",
        ports=tuple(ports),
        routes=tuple(routes),
        vessels=tuple(vessels),
        order_model=OrderModel(pairs=pairs, sail_days=sail_days_for(routes)),
        empty_return_delay=2,
        horizon=60,
    )


def wwt_shaped_topology(shape: TopologyShape, seed: int = 0) -> Topology:
    """
    Synthetic world matching only the published port, route, vessel and horizon counts.

    Every port lies on at least one route; order pairs connect stops of a common route.
    """
    n_ports, n_routes, n_vessels, horizon = WWT_COUNTS[shape]
    rng = np.random.default_rng(derive_seed(seed, SeedStream.EPISODE, 1))
    port_ids = [f"P{index:02d}" for index in range(n_ports)]

    uncovered = list(rng.permutation(port_ids))
    routes: List[Route] = []
    for index in range(n_routes):
        # ceil share of the still uncovered ports, so the last route covers the rest
        share = -(-len(uncovered) // (n_routes - index))
        size = max(int(rng.integers(3, 7)), share)
        stops = [str(uncovered.pop()) for _ in range(share)]
        for candidate in rng.permutation(port_ids):
            if len(stops) >= size:
                break
            if candidate not in stops:
                stops.append(str(candidate))
        legs = tuple(float(leg) for leg in rng.integers(2, 8, size=len(stops)))
        routes.append(Route(id=f"R{index:02d}", stops=tuple(stops), leg_distances=legs))

    export_bias = rng.uniform(0.3, 2.0, size=n_ports)
    bias = dict(zip(port_ids, export_bias))
    pairs: List[OrderPair] = []
    seen = set()
    for route in routes:
        for origin, destination in permutations(route.stops, 2):
            if (origin, destination) in seen or rng.random() > 0.5:
                continue
            seen.add((origin, destination))
            pairs.append(OrderPair(
                origin=origin,
                destination=destination,
                base_volume=round(float(rng.uniform(1.0, 6.0) * bias[origin]), 3),
                periods=random_periods(rng, count=int(rng.integers(2, 4))),
                noise_cv=0.2,
            ))

    ports = tuple(
        Port(id=port_id, capacity=1000, initial_stock=int(rng.integers(100, 300)))
        for port_id in port_ids
    )
    vessels = tuple(
        VesselSpec(
            id=f"V{index:02d}",
            capacity=int(rng.choice([100, 150, 200, 250])),
            speed_noise=SpeedNoise(sigma=0.1),
        )
        for index in range(n_vessels)
    )
    return Topology(
        name=str(shape),
        ports=ports,
        routes=tuple(routes),
        vessels=vessels,
        order_model=OrderModel(pairs=tuple(pairs), sail_days=sail_days_for(routes)),
        empty_return_delay=2,
        horizon=horizon,
    )


def planted_topology(seed: int = 0, horizon: int = 60) -> Topology:
    """Two disjoint routes A and B with all demand on A, four vessels"""
    rng = np.random.default_rng(derive_seed(seed, SeedStream.EPISODE, 2))
    routes = [
        Route(id="A", stops=("A0", "A1"), leg_distances=(3.0, 3.0)),
        Route(id="B", stops=("B0", "B1"), leg_distances=(3.0, 3.0)),
    ]
    ports = tuple(
        Port(id=port_id, capacity=400, initial_stock=40) for port_id in ("A0", "A1", "B0", "B1")
    )
    pairs = (
        OrderPair(origin="A0", destination="A1", base_volume=10.0, periods=random_periods(rng), noise_cv=0.1),
        OrderPair(origin="A1", destination="A0", base_volume=4.0, periods=random_periods(rng), noise_cv=0.1),
    )
    vessels = tuple(VesselSpec(id=f"V{index}", capacity=60) for index in range(4))
    return Topology(
        name="planted",
        ports=ports,
        routes=tuple(routes),
        vessels=vessels,
        order_model=OrderModel(pairs=pairs, sail_days=sail_days_for(routes)),
        empty_return_delay=1,
        horizon=horizon,
    )


def gen_topology(shape: TopologyShape, seed: int = 0, horizon: Optional[int] = None) -> Topology:
    """
    Build one of the bundled topologies.

    Args:
        shape: desk, wwt1-shaped, wwt2-shaped or planted
        seed: Seed of the demand parameters and the synthetic layout
        horizon: Optional override of the shape's horizon

    Returns:
        A topology that passes validate_topology
    """
    shape = TopologyShape(shape)
    if shape == TopologyShape.DESK:
        topology = desk_topology(seed)
    elif shape == TopologyShape.PLANTED:
        topology = planted_topology(seed)
    else:
        topology = wwt_shaped_topology(shape, seed)
    if horizon is not None:
        topology = topology.model_copy(update={"horizon": horizon})
    logger.info(
        f"Generated {shape} topology: {len(topology.ports)} ports, {len(topology.routes)} routes, "
        f"{len(topology.vessels)} vessels, {topology.horizon} days"
    )
    return topology
