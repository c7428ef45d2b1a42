"""
Discrete-event engine for the empty-container world.

A simulated day runs in three phases:

1. the day's orders are served from the stock left at the end of the previous
   day; what cannot be served is recorded as shortage and lost,
2. laden lots whose return delay has elapsed turn into empties at their port,
   as far as the yard has room,
3. vessels arriving that day are processed in (port id, vessel id) order: laden
   for the port is unloaded, the agent acts on the decision point, laden
   waiting at the port boards, the vessel sails to its next stop.

Every decision point must be answered with apply_action before next_decision
is called again.
"""
import copy
import heapq
import logging
from typing import Dict, List, Optional, Protocol, Tuple, Union

import numpy as np
from scipy.stats import truncnorm

from app.core.appsettings import app_settings
from app.core.errors import SimulationError, StaleDecisionError
from app.core.seeding import episode_streams, round_half_up
from app.models.configuration import FleetConfiguration
from app.models.planning import Forecast
from app.models.simulation import (
    DecisionPoint,
    EpisodeEnd,
    EpisodeMetrics,
    LadenLot,
    Observation,
    RepositionAction,
    SimState,
    TraceRow,
    VesselState,
)
from app.models.topology import OrderModel, Topology, VesselSpec
from app.services.validation import require_valid_configuration, require_valid_topology

logger = logging.getLogger(__name__)


class Policy(Protocol):
    """Maps a decision point (and, for planners, the true state) to an action"""

    def act(self, decision: DecisionPoint, state: SimState, rng: np.random.Generator) -> RepositionAction:
        ...


def init_episode(
    t: Topology,
    p: FleetConfiguration,
    seed: int,
    observation_window: Optional[int] = None,
    record_trace: bool = False,
) -> SimState:
    """
    Place every vessel at its start port and schedule the day-0 arrivals.

    Args:
        t: The world description
        p: The fleet configuration
        seed: Episode seed; the world stream of episode_streams(seed) drives orders and travel times
        observation_window: Trailing days summed into Observation.recent_demand
        record_trace: Record one TraceRow per port and day

    Returns:
        A fresh SimState at day 0

    Raises:
        InvalidInputError: If t or p is invalid
    """
    require_valid_topology(t)
    require_valid_configuration(t, p)

    assignments = p.by_vessel()
    vessels = {}
    events: List[Tuple[int, str, str]] = []
    for spec in t.vessels:
        assignment = assignments[spec.id]
        route = t.route(assignment.route)
        vessels[spec.id] = VesselState(
            route_id=route.id,
            stop_index=route.stops.index(assignment.start_port),
            arrival_day=0,
        )
        events.append((0, assignment.start_port, spec.id))
    heapq.heapify(events)

    return SimState(
        topology=t,
        configuration=p,
        day=0,
        port_stock={port.id: port.initial_stock for port in t.ports},
        vessels=vessels,
        waiting_laden={port.id: [] for port in t.ports},
        in_transit_laden=[],
        pending_events=events,
        rng=episode_streams(seed).world,
        observation_window=observation_window or app_settings.simulator.observation_window,
        initial_total=sum(port.initial_stock for port in t.ports),
        demand_by_port_day={port.id: [0] * t.horizon for port in t.ports},
        shortage_by_port_day={port.id: [0] * t.horizon for port in t.ports},
        record_trace=record_trace,
    )


def sample_orders(m: OrderModel, day: int, rng: np.random.Generator) -> List[Tuple[str, str, int]]:
    """
    Draw the orders of one day, one entry per pair in listed order.

    The multiplicative noise follows a normal of mean 1 and standard deviation
    noise_cv truncated at zero, so large noise_cv values raise the mean order
    slightly instead of piling mass on empty days.

    Args:
        m: The order model
        day: Day index (>= 0)
        rng: Stream to draw the multiplicative noise from

    Returns:
        (origin, destination, quantity) per pair
    """
    if not m.pairs:
        return []
    means = np.array([pair.mean(day) for pair in m.pairs])
    cvs = np.array([pair.noise_cv for pair in m.pairs])
    noise = np.ones(len(cvs))
    noisy = cvs > 0.0
    if noisy.any():
        scale = cvs[noisy]
        noise[noisy] = truncnorm.rvs(-1.0 / scale, np.inf, loc=1.0, scale=scale, random_state=rng)
    quantities = np.floor(means * noise + 0.5).astype(int)
    return [
        (pair.origin, pair.destination, int(quantity))
        for pair, quantity in zip(m.pairs, quantities)
    ]


def sample_travel_time(v: VesselSpec, leg_days: float, rng: np.random.Generator) -> int:
    """Days to sail a leg: max(1, round(leg_days * m)), m ~ U[1 - sigma, 1 + sigma]"""
    sigma = v.speed_noise.sigma
    multiplier = rng.uniform(1.0 - sigma, 1.0 + sigma)
    return max(1, round_half_up(leg_days * multiplier))


def next_decision(s: SimState) -> Union[DecisionPoint, EpisodeEnd]:
    """
    Advance the episode to the next vessel arrival or to the end of the horizon.

    Args:
        s: The episode state; mutated in place

    Returns:
        The next DecisionPoint, or EpisodeEnd once day == horizon

    Raises:
        StaleDecisionError: If the previous decision point was never answered
        SimulationError: If an invariant fails at a day close
    """
    if s.pending_decision is not None:
        raise StaleDecisionError(
            f"decision for vessel '{s.pending_decision.vessel_id}' on day {s.pending_decision.day} is still pending"
        )

    horizon = s.topology.horizon if s.end_day is None else s.end_day
    while s.day < horizon:
        if not s.day_started:
            _open_day(s)
        if s.pending_events and s.pending_events[0][0] == s.day:
            _, port_id, vessel_id = heapq.heappop(s.pending_events)
            return _arrive(s, vessel_id, port_id)
        _close_day(s)
        s.day += 1
        s.day_started = False

    return EpisodeEnd(day=s.day, total_demand=s.total_demand, total_shortage=s.total_shortage)


def apply_action(s: SimState, d: DecisionPoint, a: RepositionAction) -> int:
    """
    Execute a repositioning action at the pending decision point.

    Args:
        s: The episode state
        d: Must be the decision point returned by the last next_decision call
        a: Requested signed move

    Returns:
        The clamped delta actually applied

    Raises:
        StaleDecisionError: If d is not the pending decision point
    """
    if s.pending_decision is None or d != s.pending_decision:
        raise StaleDecisionError(f"decision for vessel '{d.vessel_id}' on day {d.day} is not pending")

    delta = int(np.clip(a.delta, -d.max_discharge, d.max_load))
    if delta != a.delta:
        s.clamped_actions += 1
        logger.debug(f"Day {d.day}: vessel {d.vessel_id} at {d.port_id} asked {a.delta}, applied {delta}")

    vessel = s.vessels[d.vessel_id]
    s.port_stock[d.port_id] -= delta
    vessel.empties += delta

    _board_laden(s, d.vessel_id, d.port_id)
    _depart(s, d.vessel_id)
    s.pending_decision = None
    return delta


def run_episode(
    t: Topology,
    p: FleetConfiguration,
    policy: Policy,
    seed: int,
    gamma: Optional[float] = None,
    record_trace: bool = False,
) -> Tuple[EpisodeMetrics, SimState]:
    """Run one episode to the horizon and return its metrics with the final state"""
    gamma = app_settings.simulator.gamma if gamma is None else gamma
    if not 0.0 < gamma <= 1.0:
        raise ValueError(f"gamma must lie in (0, 1], got {gamma}")

    s = init_episode(t, p, seed, record_trace=record_trace)
    policy_rng = episode_streams(seed).policy
    discounted_return = 0.0
    settled = 0

    while True:
        event = next_decision(s)
        reward = -(s.total_shortage - settled)
        settled = s.total_shortage
        discounted_return += gamma ** event.day * reward
        if isinstance(event, EpisodeEnd):
            break
        apply_action(s, event, policy.act(event, s, policy_rng))

    metrics = EpisodeMetrics(
        total_demand=s.total_demand,
        total_shortage=s.total_shortage,
        total_fulfilled=s.total_fulfilled,
        shortage_by_port_day={port: list(days) for port, days in s.shortage_by_port_day.items()},
        fulfillment_pct=fulfillment_pct(s.total_demand, s.total_shortage),
        discounted_return=discounted_return,
        decisions=s.decisions,
        clamped_actions=s.clamped_actions,
    )
    return metrics, s


def rollout(
    t: Topology,
    p: FleetConfiguration,
    policy: Policy,
    seed: int,
    gamma: Optional[float] = None,
) -> EpisodeMetrics:
    """
    Run one seeded episode; J sums gamma^t_i times minus the shortage since the previous epoch.

    Args:
        t: The world description
        p: The fleet configuration
        policy: Acts at every decision point
        seed: Episode seed
        gamma: Discount in (0, 1]; the settings default is 1

    Returns:
        EpisodeMetrics with exact totals
    """
    metrics, _ = run_episode(t, p, policy, seed, gamma=gamma)
    return metrics


def fulfillment_pct(total_demand: int, total_shortage: int) -> float:
    if total_demand == 0:
        return 100.0
    return 100.0 * (1.0 - total_shortage / total_demand)


def free_space(s: SimState, vessel_id: str) -> int:
    vessel = s.vessels[vessel_id]
    return s.topology.vessel(vessel_id).capacity - vessel.empties - vessel.laden_total


def check_invariants(s: SimState) -> None:
    """Raise SimulationError if a bound or the conservation identity fails"""
    t = s.topology
    for port in t.ports:
        stock = s.port_stock[port.id]
        if not 0 <= stock <= port.capacity:
            raise SimulationError(f"day {s.day}: port '{port.id}' stock {stock} outside [0, {port.capacity}]")
    for vessel_id, vessel in s.vessels.items():
        if vessel.empties < 0 or any(qty < 0 for qty in vessel.laden.values()):
            raise SimulationError(f"day {s.day}: vessel '{vessel_id}' carries a negative quantity")
        if free_space(s, vessel_id) < 0:
            raise SimulationError(f"day {s.day}: vessel '{vessel_id}' over capacity")
    if any(lot.quantity < 0 for lot in s.in_transit_laden):
        raise SimulationError(f"day {s.day}: negative laden lot")
    total = s.containers_in_system()
    if total != s.initial_total:
        raise SimulationError(f"day {s.day}: {total} containers in the system, expected {s.initial_total}")


def clone_state(s: SimState) -> SimState:
    """Independent copy of an episode; the topology and configuration are shared"""
    return copy.deepcopy(s, {id(s.topology): s.topology, id(s.configuration): s.configuration})


def script_episode(s: SimState, f: Forecast) -> SimState:
    """
    Make s replay a forecast: its orders, its vessel calls, and its window end.

    Orders of a day are served in the order the forecast lists them. A vessel
    leaving call k sails to the forecast call k + 1, and a vessel with no
    further call stays unscheduled. The world stream is no longer drawn from.
    """
    orders: Dict[int, List[Tuple[str, str, int]]] = {}
    for demand in f.demands:
        orders.setdefault(demand.day, []).append((demand.origin, demand.destination, demand.quantity))
    s.scripted_orders = orders
    s.scripted_calls = {
        (vessel_id, call.ordinal): call.day
        for vessel_id, calls in f.arrivals.items()
        for call in calls
    }
    s.end_day = f.to_day
    return s


def state_signature(s: SimState) -> Tuple:
    """Everything that shapes the rest of an episode, without its accounting"""
    pending = s.pending_decision
    return (
        s.day,
        s.day_started,
        None if pending is None else (pending.vessel_id, pending.call_ordinal),
        tuple(sorted(s.port_stock.items())),
        tuple(
            (vessel_id, v.stop_index, v.arrival_day, v.empties, tuple(sorted(v.laden.items())), v.call_count)
            for vessel_id, v in sorted(s.vessels.items())
        ),
        tuple((port, tuple(tuple(entry) for entry in queue)) for port, queue in sorted(s.waiting_laden.items())),
        tuple((lot.port, lot.maturity_day, lot.quantity) for lot in s.in_transit_laden),
        tuple(sorted(s.pending_events)),
    )


def _open_day(s: SimState) -> None:
    t = s.topology
    day = s.day

    if s.scripted_orders is not None:
        orders = s.scripted_orders.get(day, [])
    else:
        orders = sample_orders(t.order_model, day, s.rng)
    for origin, destination, quantity in orders:
        fulfilled = min(quantity, s.port_stock[origin])
        s.port_stock[origin] -= fulfilled
        s.demand_by_port_day[origin][day] += quantity
        s.shortage_by_port_day[origin][day] += quantity - fulfilled
        s.total_demand += quantity
        s.total_shortage += quantity - fulfilled
        if fulfilled > 0:
            s.waiting_laden[origin].append([destination, fulfilled])

    remaining = []
    for lot in s.in_transit_laden:
        if lot.maturity_day <= day:
            lot.quantity -= _stock_up(s, lot.port, lot.quantity)
        if lot.quantity > 0:
            remaining.append(lot)
    s.in_transit_laden = remaining
    s.day_started = True


def _close_day(s: SimState) -> None:
    check_invariants(s)
    if not s.record_trace:
        return
    for port in s.topology.ports:
        demand = s.demand_by_port_day[port.id][s.day]
        shortage = s.shortage_by_port_day[port.id][s.day]
        s.trace.append(TraceRow(
            day=s.day,
            port=port.id,
            stock=s.port_stock[port.id],
            demand=demand,
            fulfilled=demand - shortage,
            shortage=shortage,
        ))


def _stock_up(s: SimState, port_id: str, quantity: int) -> int:
    """Move up to quantity empties into the yard; returns how many fit"""
    room = s.topology.port(port_id).capacity - s.port_stock[port_id]
    moved = max(0, min(quantity, room))
    s.port_stock[port_id] += moved
    return moved


def _arrive(s: SimState, vessel_id: str, port_id: str) -> DecisionPoint:
    t = s.topology
    vessel = s.vessels[vessel_id]
    vessel.call_count += 1
    vessel.arrival_day = s.day

    laden = vessel.laden.pop(port_id, 0)
    if laden > 0:
        if t.empty_return_delay == 0:
            laden -= _stock_up(s, port_id, laden)
        if laden > 0:
            s.in_transit_laden.append(LadenLot(port=port_id, maturity_day=s.day + t.empty_return_delay, quantity=laden))

    port = t.port(port_id)
    handling = port.handling_cap if port.handling_cap is not None else np.iinfo(np.int64).max
    stock = s.port_stock[port_id]
    vessel_free = free_space(s, vessel_id)
    window_start = max(0, s.day - s.observation_window + 1)

    observation = Observation(
        port_stock=stock,
        port_capacity=port.capacity,
        vessel_empties=vessel.empties,
        vessel_free_space=vessel_free,
        recent_demand=sum(s.demand_by_port_day[port_id][window_start:s.day + 1]),
        recent_shortage=sum(s.shortage_by_port_day[port_id][window_start:s.day + 1]),
        day=s.day,
        horizon=t.horizon,
    )
    decision = DecisionPoint(
        vessel_id=vessel_id,
        port_id=port_id,
        day=s.day,
        call_ordinal=vessel.call_count - 1,
        observation=observation,
        max_load=int(min(stock, vessel_free, handling)),
        max_discharge=int(min(vessel.empties, port.capacity - stock, handling)),
    )
    s.decisions += 1
    s.pending_decision = decision
    return decision


def _board_laden(s: SimState, vessel_id: str, port_id: str) -> None:
    vessel = s.vessels[vessel_id]
    route = s.topology.route(vessel.route_id)
    room = free_space(s, vessel_id)
    queue = s.waiting_laden[port_id]
    for entry in queue:
        if room == 0:
            break
        destination, quantity = entry
        if not route.contains(destination):
            continue
        boarded = min(quantity, room)
        vessel.laden[destination] = vessel.laden.get(destination, 0) + boarded
        entry[1] -= boarded
        room -= boarded
    s.waiting_laden[port_id] = [entry for entry in queue if entry[1] > 0]


def _depart(s: SimState, vessel_id: str) -> None:
    t = s.topology
    vessel = s.vessels[vessel_id]
    route = t.route(vessel.route_id)
    if s.scripted_calls is not None:
        arrival = s.scripted_calls.get((vessel_id, vessel.call_count))
        vessel.stop_index = route.next_index(vessel.stop_index)
        vessel.arrival_day = t.horizon if arrival is None else arrival
        vessel.scheduled = arrival is not None
    else:
        travel = sample_travel_time(t.vessel(vessel_id), route.leg_distances[vessel.stop_index], s.rng)
        vessel.stop_index = route.next_index(vessel.stop_index)
        vessel.arrival_day = s.day + travel
        vessel.scheduled = vessel.arrival_day < t.horizon
    if vessel.scheduled:
        heapq.heappush(s.pending_events, (vessel.arrival_day, route.stops[vessel.stop_index], vessel_id))
