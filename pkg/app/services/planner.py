"""
OR and OR(I) planning: forecasts, the time-expanded flow network, plan extraction.

Network nodes per port h and window day d are S(h, d), the yard at the start of
the day, and A(h, d), the yard once the day's orders are served. Every forecast
vessel call is a node C(v, ordinal). Satisfied demand leaves S(origin, d) and
re-enters the network as empties at A(destination, r), r being the day the
carrying vessel unloads it plus the return delay.

Arc costs are integral and lexicographic: a satisfied container is worth more
than any amount of earliness, one day of earliness more than every possible
move, and each load or discharge costs 1.

The network may hold stock back from an order and assumes laden always finds
room aboard, which the simulator does not allow. Its moves are therefore only a
proposal: build_plan replays them through a simulator that follows the
forecast and reports the replayed outcome. On windows with a small move tree a
branch and bound search, bounded by a relaxed network, makes the plan optimal.
"""
import logging
from bisect import bisect_left
from typing import Dict, List, Optional, Tuple, Union

import numpy as np

from app.core.appsettings import app_settings
from app.core.errors import InvalidInputError
from app.core.seeding import round_half_up
from app.models.configuration import FleetConfiguration
from app.models.planning import (
    ArcKind,
    FlowArc,
    FlowNetwork,
    Forecast,
    ForecastCall,
    ForecastDemand,
    Plan,
    PlanMove,
)
from app.models.simulation import DecisionPoint, EpisodeEnd, RepositionAction, SimState
from app.models.topology import Topology
from app.services.flow import solve_min_cost_flow
from app.services.policies import PlanPolicy
from app.services.simulator import (
    apply_action,
    clone_state,
    init_episode,
    next_decision,
    script_episode,
    state_signature,
)

logger = logging.getLogger(__name__)

SINK = ("T",)


def stock_node(port: str, day: int) -> Tuple:
    return ("S", port, day)


def after_orders_node(port: str, day: int) -> Tuple:
    return ("A", port, day)


def call_node(vessel: str, ordinal: int) -> Tuple:
    return ("C", vessel, ordinal)


def make_forecast(
    t: Topology,
    p: FleetConfiguration,
    from_day: int,
    horizon: int,
    noise_level: float,
    rng: np.random.Generator,
    state: Optional[SimState] = None,
) -> Forecast:
    """
    Noisy orders and arrivals over [from_day, min(from_day + horizon, t.horizon)).

    Demands are round(mean * (1 + e)) and every sailing leg is
    max(1, round(leg * (1 + e))), e ~ U[-noise_level, noise_level]. Without a
    state the fleet starts from its configured start ports at day 0; with a
    state each vessel starts from its known next arrival, and the orders of
    from_day (already served) are left out.

    Args:
        t: The world description
        p: The fleet configuration
        from_day: First day of the window
        horizon: Window length in days
        noise_level: Relative corruption of means and legs
        rng: Planning stream
        state: True simulator state for a warm start

    Returns:
        The Forecast of the window
    """
    to_day = min(from_day + horizon, t.horizon)
    demand_start = from_day + 1 if state is not None else from_day
    days = np.arange(demand_start, to_day)

    demands = []
    for pair in t.order_model.pairs:
        noise = rng.uniform(-noise_level, noise_level, size=len(days))
        quantities = np.floor(pair.means(days) * (1.0 + noise) + 0.5).astype(int)
        demands.extend(
            ForecastDemand(origin=pair.origin, destination=pair.destination, day=int(day), quantity=int(q))
            for day, q in zip(days, quantities)
            if q > 0
        )

    assignments = p.by_vessel()
    arrivals = {}
    for spec in t.vessels:
        route = t.route(assignments[spec.id].route)
        if state is None:
            index = route.stops.index(assignments[spec.id].start_port)
            day, ordinal = 0, 0
        else:
            vessel = state.vessels[spec.id]
            pending = state.pending_decision
            if pending is not None and pending.vessel_id == spec.id:
                day, ordinal = pending.day, pending.call_ordinal
            elif vessel.scheduled:
                day, ordinal = vessel.arrival_day, vessel.call_count
            else:
                arrivals[spec.id] = ()
                continue
            index = vessel.stop_index

        calls = []
        while day < to_day:
            if day >= from_day:
                calls.append(ForecastCall(port=route.stops[index], day=day, ordinal=ordinal))
            leg = route.leg_distances[index]
            day += max(1, round_half_up(leg * (1.0 + rng.uniform(-noise_level, noise_level))))
            index = route.next_index(index)
            ordinal += 1
        arrivals[spec.id] = tuple(calls)

    return Forecast(
        from_day=from_day,
        to_day=to_day,
        noise_level=noise_level,
        demands=tuple(demands),
        arrivals=arrivals,
    )


class CallSchedule:
    """Index over forecast calls answering which call carries laden and where it unloads"""

    def __init__(self, t: Topology, p: FleetConfiguration, f: Forecast):
        self.topology = t
        self.forecast = f
        self.routes = {a.vessel: t.route(a.route) for a in p.assignments}
        self.by_port: Dict[str, List[Tuple[int, str, int]]] = {}
        for vessel, calls in f.arrivals.items():
            for index, call in enumerate(calls):
                self.by_port.setdefault(call.port, []).append((call.day, vessel, index))
        for calls in self.by_port.values():
            calls.sort()

    def carrying_call(self, origin: str, destination: str, day: int) -> Optional[Tuple[str, int]]:
        """First call at origin on or after day by a vessel whose route reaches destination"""
        calls = self.by_port.get(origin, [])
        for call_day, vessel, index in calls[bisect_left(calls, (day, "", -1)):]:
            if self.routes[vessel].contains(destination):
                return vessel, index
        return None

    def next_call_at(self, vessel: str, after_index: int, port: str) -> Optional[int]:
        calls = self.forecast.arrivals[vessel]
        for index in range(after_index + 1, len(calls)):
            if calls[index].port == port:
                return index
        return None

    def earliest_unload(self, origin: str, destination: str, day: int) -> Optional[int]:
        """Earliest day any call at origin on or after day can deliver to destination"""
        calls = self.by_port.get(origin, [])
        days = []
        for _, vessel, index in calls[bisect_left(calls, (day, "", -1)):]:
            if not self.routes[vessel].contains(destination):
                continue
            unload = self.next_call_at(vessel, index, destination)
            if unload is not None:
                days.append(self.forecast.arrivals[vessel][unload].day)
        return min(days, default=None)

    def served(self, origin: str, destination: str) -> bool:
        return any(route.contains(origin) and route.contains(destination) for route in self.routes.values())

    def unload_index(self, vessel: str, port: str) -> Optional[int]:
        """First forecast call of vessel at port, the current call included"""
        return self.next_call_at(vessel, -1, port)


def return_day(t: Topology, p: FleetConfiguration, f: Forecast, origin: str, destination: str, day: int,
               schedule: Optional[CallSchedule] = None, earliest: bool = False) -> Optional[int]:
    """
    Day on which laden served at origin on day becomes empties at destination.

    The laden is assumed to board the first carrying call; with earliest it
    takes whichever call delivers first, as it may when that call is full.

    Returns:
        A day inside the forecast window, or None when the containers do not
        come back before the window closes
    """
    schedule = schedule or CallSchedule(t, p, f)
    carrier = schedule.carrying_call(origin, destination, day)
    if carrier is not None:
        vessel, index = carrier
        if earliest:
            unload_day = schedule.earliest_unload(origin, destination, day)
        else:
            unload = schedule.next_call_at(vessel, index, destination)
            unload_day = None if unload is None else f.arrivals[vessel][unload].day
        if unload_day is None:
            return None
        ripe = unload_day + t.empty_return_delay
    elif schedule.served(origin, destination):
        # the carrying call lies beyond the window
        return None
    else:
        sail = t.order_model.sail_days_between(origin, destination)
        if sail is None:
            return None
        ripe = day + round_half_up(sail) + t.empty_return_delay
    return ripe if ripe < f.to_day else None


def laden_estimates(t: Topology, p: FleetConfiguration, f: Forecast, state: Optional[SimState] = None,
                    schedule: Optional[CallSchedule] = None, aboard_only: bool = False) -> Dict[str, List[int]]:
    """
    Greedy estimate of the laden aboard each vessel as it leaves each forecast call.

    Forecast demand boards the carrying call and stays aboard until the
    vessel's next call at the destination; with a state, laden already aboard
    or waiting at a port is added the same way. With aboard_only only the laden
    already aboard counts, so the room left is never understated.
    """
    schedule = schedule or CallSchedule(t, p, f)
    estimates = {vessel: [0] * len(calls) for vessel, calls in f.arrivals.items()}

    def add(vessel: str, first: int, destination: str, quantity: int) -> None:
        unload = schedule.next_call_at(vessel, first, destination)
        end = unload if unload is not None else len(estimates[vessel])
        for index in range(first, end):
            estimates[vessel][index] += quantity

    forecast_demands = () if aboard_only else f.demands
    for demand in forecast_demands:
        carrier = schedule.carrying_call(demand.origin, demand.destination, demand.day)
        if carrier is not None:
            add(carrier[0], carrier[1], demand.destination, demand.quantity)

    if state is not None:
        for vessel_id, vessel in state.vessels.items():
            if not f.arrivals.get(vessel_id):
                continue
            for destination, quantity in vessel.laden.items():
                unload = schedule.unload_index(vessel_id, destination)
                end = unload if unload is not None else len(estimates[vessel_id])
                for index in range(0, end):
                    estimates[vessel_id][index] += quantity
        waiting = {} if aboard_only else state.waiting_laden
        for origin, queue in waiting.items():
            for destination, quantity in queue:
                carrier = schedule.carrying_call(origin, destination, state.day)
                if carrier is not None:
                    add(carrier[0], carrier[1], destination, quantity)
    return estimates


def build_flow_network(t: Topology, p: FleetConfiguration, f: Forecast,
                       current_state: Optional[SimState] = None, relaxed: bool = False) -> FlowNetwork:
    """
    Build the time-expanded network of the forecast window.

    Args:
        t: The world description
        p: The fleet configuration
        f: Forecast covering the window
        current_state: Supplies come from this state instead of the initial stocks
        relaxed: Reduce vessel room by the laden already aboard only, which makes
            the optimum an upper bound on what any move sequence serves

    Returns:
        A balanced FlowNetwork whose sink absorbs all supply

    Raises:
        InvalidInputError: If a forecast call lies outside the window or arrivals are not increasing
    """
    from_day, to_day = f.from_day, f.to_day
    if to_day <= from_day:
        raise InvalidInputError(f"empty planning window [{from_day}, {to_day})")
    for vessel, calls in f.arrivals.items():
        days = [call.day for call in calls]
        if any(day < from_day or day >= to_day for day in days):
            raise InvalidInputError(f"forecast arrival of vessel '{vessel}' outside [{from_day}, {to_day})")
        if any(later <= earlier for earlier, later in zip(days, days[1:])):
            raise InvalidInputError(f"forecast arrivals of vessel '{vessel}' are not strictly increasing")

    schedule = CallSchedule(t, p, f)
    estimates = laden_estimates(t, p, f, current_state, schedule, aboard_only=relaxed)
    window = range(from_day, to_day)
    last = to_day - 1

    nodes: List[Tuple] = []
    arcs: List[FlowArc] = []
    for port in t.ports:
        for day in window:
            nodes.append(stock_node(port.id, day))
            nodes.append(after_orders_node(port.id, day))
            arcs.append(FlowArc(stock_node(port.id, day), after_orders_node(port.id, day), None, 0, ArcKind.PASS))
            if day < last:
                arcs.append(FlowArc(after_orders_node(port.id, day), stock_node(port.id, day + 1),
                                    port.capacity, 0, ArcKind.CARRY))
                arcs.append(FlowArc(after_orders_node(port.id, day), after_orders_node(port.id, day + 1),
                                    None, 0, ArcKind.OVERFLOW))
        arcs.append(FlowArc(after_orders_node(port.id, last), SINK, None, 0, ArcKind.DRAIN))

    move_arcs: List[FlowArc] = []
    for spec in t.vessels:
        calls = f.arrivals.get(spec.id, ())
        for index, call in enumerate(calls):
            node = call_node(spec.id, call.ordinal)
            nodes.append(node)
            handling = t.port(call.port).handling_cap
            cap = spec.capacity if handling is None else min(spec.capacity, handling)
            key = (spec.id, call.ordinal, call.port, call.day)
            move_arcs.append(FlowArc(after_orders_node(call.port, call.day), node, cap, 1, ArcKind.LOAD, key))
            move_arcs.append(FlowArc(node, after_orders_node(call.port, call.day), cap, 1, ArcKind.DISCHARGE, key))
            if index + 1 < len(calls):
                leg_cap = max(0, spec.capacity - estimates[spec.id][index])
                arcs.append(FlowArc(node, call_node(spec.id, calls[index + 1].ordinal), leg_cap, 0, ArcKind.LEG, key))
            arcs.append(FlowArc(node, SINK, None, 0, ArcKind.STRAND, key))
    nodes.append(SINK)

    demand_start = from_day + 1 if current_state is not None else from_day
    demands = [d for d in f.demands if d.quantity > 0 and demand_start <= d.day < to_day]
    move_bound = sum(arc.capacity for arc in move_arcs)
    day_weight = move_bound + 1
    satisfied_weight = sum(d.quantity for d in demands) * (to_day - from_day) * day_weight + move_bound + 1
    for demand in demands:
        ripe = return_day(t, p, f, demand.origin, demand.destination, demand.day, schedule, earliest=relaxed)
        head = SINK if ripe is None else after_orders_node(demand.destination, ripe)
        cost = -(satisfied_weight + (to_day - demand.day) * day_weight)
        arcs.append(FlowArc(stock_node(demand.origin, demand.day), head, demand.quantity, cost, ArcKind.DEMAND,
                            (demand.origin, demand.destination, demand.day)))
    arcs.extend(move_arcs)

    supplies: Dict[Tuple, int] = {}

    def supply(node: Tuple, quantity: int) -> None:
        if quantity > 0:
            supplies[node] = supplies.get(node, 0) + quantity

    if current_state is None:
        for port in t.ports:
            supply(stock_node(port.id, from_day), port.initial_stock)
    else:
        s = current_state
        for port_id, stock in s.port_stock.items():
            supply(after_orders_node(port_id, from_day), stock)
        for lot in s.in_transit_laden:
            ripe = max(lot.maturity_day, from_day)
            if ripe < to_day:
                supply(after_orders_node(lot.port, ripe), lot.quantity)
        for vessel_id, vessel in s.vessels.items():
            calls = f.arrivals.get(vessel_id, ())
            if not calls:
                continue
            supply(call_node(vessel_id, calls[0].ordinal), vessel.empties)
            for destination, quantity in vessel.laden.items():
                unload = schedule.unload_index(vessel_id, destination)
                if unload is not None:
                    ripe = calls[unload].day + t.empty_return_delay
                    if ripe < to_day:
                        supply(after_orders_node(destination, ripe), quantity)
        for origin, queue in s.waiting_laden.items():
            for destination, quantity in queue:
                ripe = return_day(t, p, f, origin, destination, s.day, schedule, earliest=relaxed)
                if ripe is not None:
                    supply(after_orders_node(destination, ripe), quantity)

    return FlowNetwork(
        nodes=nodes,
        arcs=arcs,
        supplies=supplies,
        sink=SINK,
        window=(from_day, to_day),
        total_forecast_demand=sum(d.quantity for d in demands),
    )


def extract_plan(n: FlowNetwork, flows: List[int]) -> Plan:
    """
    Read the per-call moves and the satisfied demand off an optimal flow.

    Args:
        n: The network the flows belong to
        flows: One flow per arc of n

    Returns:
        Plan with move = load flow - discharge flow for every call with a non-zero move
    """
    net: Dict[Tuple, int] = {}
    satisfied = 0
    for arc, flow in zip(n.arcs, flows):
        if arc.kind == ArcKind.LOAD:
            net[arc.key] = net.get(arc.key, 0) + flow
        elif arc.kind == ArcKind.DISCHARGE:
            net[arc.key] = net.get(arc.key, 0) - flow
        elif arc.kind == ArcKind.DEMAND:
            satisfied += flow

    moves = tuple(
        PlanMove(vessel=vessel, call=ordinal, port=port, day=day, delta=delta)
        for (vessel, ordinal, port, day), delta in sorted(net.items(), key=lambda item: (item[0][3], item[0][0]))
        if delta != 0
    )
    from_day, to_day = n.window
    return Plan(
        moves=moves,
        planned_objective=float(satisfied),
        planned_shortage=n.total_forecast_demand - satisfied,
        from_day=from_day,
        window=to_day - from_day,
    )


def satisfied_demand(n: FlowNetwork, flows: List[int]) -> int:
    return sum(flow for arc, flow in zip(n.arcs, flows) if arc.kind == ArcKind.DEMAND)


def call_move(n: FlowNetwork, flows: List[int], vessel: str, ordinal: int) -> int:
    """Net load minus discharge the flow puts on one call"""
    delta = 0
    for arc, flow in zip(n.arcs, flows):
        if arc.key[:2] != (vessel, ordinal):
            continue
        if arc.kind == ArcKind.LOAD:
            delta += flow
        elif arc.kind == ArcKind.DISCHARGE:
            delta -= flow
    return delta


def scripted_state(t: Topology, p: FleetConfiguration, f: Forecast,
                   current_state: Optional[SimState] = None) -> SimState:
    """
    A simulator state that plays out forecast f from the start of its window.

    Raises:
        InvalidInputError: If there is no state and the window does not start on day 0
    """
    if current_state is None:
        if f.from_day != 0:
            raise InvalidInputError(f"a plan without a simulator state starts on day 0, not {f.from_day}")
        s = init_episode(t, p, seed=0)
    else:
        s = clone_state(current_state)
        s.record_trace = False
    return script_episode(s, f)


def current_event(s: SimState) -> Union[DecisionPoint, EpisodeEnd]:
    return s.pending_decision if s.pending_decision is not None else next_decision(s)


def replay_moves(s: SimState, deltas: Dict[Tuple[str, int], int]) -> Tuple[PlanMove, ...]:
    """Run a scripted state to its window end with fixed moves; returns the moves as applied"""
    moves = []
    event = current_event(s)
    while isinstance(event, DecisionPoint):
        requested = deltas.get((event.vessel_id, event.call_ordinal), 0)
        applied = apply_action(s, event, RepositionAction(delta=requested))
        if applied != 0:
            moves.append(PlanMove(vessel=event.vessel_id, call=event.call_ordinal, port=event.port_id,
                                  day=event.day, delta=applied))
        event = next_decision(s)
    return tuple(moves)


def remaining_forecast(f: Forecast, s: SimState) -> Forecast:
    """The part of f still ahead of a state paused at a decision point"""
    arrivals = {}
    for vessel_id, calls in f.arrivals.items():
        pending = s.pending_decision
        if pending is not None and pending.vessel_id == vessel_id:
            first = pending.call_ordinal
        else:
            first = s.vessels[vessel_id].call_count
        arrivals[vessel_id] = tuple(call for call in calls if call.ordinal >= first)
    return Forecast(
        from_day=s.day,
        to_day=f.to_day,
        noise_level=f.noise_level,
        demands=tuple(d for d in f.demands if d.day > s.day),
        arrivals=arrivals,
    )


def move_tree_size(t: Topology, f: Forecast, limit: int) -> int:
    """Product of the move choices over all forecast calls, capped just above limit"""
    size = 1
    for vessel_id, calls in f.arrivals.items():
        capacity = t.vessel(vessel_id).capacity
        for call in calls:
            handling = t.port(call.port).handling_cap
            moves = capacity if handling is None else min(capacity, handling)
            size *= 2 * moves + 1
            if size > limit:
                return limit + 1
    return size


class PlanSearch:
    """
    Depth-first branch and bound over the moves of a scripted episode.

    A node is a decision point in simulator order and its children are the
    feasible moves there. A node's bound is the demand served so far plus the
    optimum of the relaxed network built from its state. A state already
    reached with at least as much demand served is not expanded again.
    """

    def __init__(self, t: Topology, p: FleetConfiguration, f: Forecast, root: SimState,
                 node_limit: Optional[int]):
        self.topology = t
        self.configuration = p
        self.forecast = f
        self.root = root
        self.node_limit = node_limit
        self.nodes = 0
        self.complete = True
        self.seen: Dict[Tuple, int] = {}
        self.best_moves: Tuple[PlanMove, ...] = ()
        self.best_served = -1

    def served(self, s: SimState) -> int:
        return (s.total_demand - self.root.total_demand) - (s.total_shortage - self.root.total_shortage)

    def offer(self, moves: Tuple[PlanMove, ...], served: int) -> None:
        if served > self.best_served:
            self.best_moves, self.best_served = moves, served

    def bound(self, s: SimState, event: DecisionPoint) -> Tuple[int, int]:
        """Upper bound on the demand served from the root, and the relaxed move at event"""
        self.nodes += 1
        rest = remaining_forecast(self.forecast, s)
        network = build_flow_network(self.topology, self.configuration, rest, s, relaxed=True)
        flows = solve_min_cost_flow(network).flows
        return self.served(s) + satisfied_demand(network, flows), call_move(network, flows, event.vessel_id,
                                                                            event.call_ordinal)

    def exhausted(self) -> bool:
        return self.node_limit is not None and self.nodes >= self.node_limit

    def run(self) -> bool:
        """Search from the root; returns True when the best plan found is optimal"""
        s = clone_state(self.root)
        event = current_event(s)
        if isinstance(event, EpisodeEnd):
            self.offer((), self.served(s))
            return True

        stack = [(s, event, ())]
        while stack:
            if self.exhausted():
                self.complete = False
                break
            s, event, moves = stack.pop()
            if self.served(s) + sum(d.quantity for d in self.forecast.demands if d.day > s.day) <= self.best_served:
                continue
            upper, hint = self.bound(s, event)
            if upper <= self.best_served:
                continue

            planned = dict(((m.vessel, m.call), m.delta) for m in self.best_moves)
            incumbent = planned.get((event.vessel_id, event.call_ordinal), 0)
            choices = sorted(
                range(-event.max_discharge, event.max_load + 1),
                key=lambda delta: (delta != hint, delta != incumbent, abs(delta - hint)),
            )
            children = []
            for delta in choices:
                child = clone_state(s)
                apply_action(child, child.pending_decision, RepositionAction(delta=delta))
                child_moves = moves
                if delta != 0:
                    child_moves = moves + (PlanMove(vessel=event.vessel_id, call=event.call_ordinal,
                                                    port=event.port_id, day=event.day, delta=delta),)
                following = next_decision(child)
                served = self.served(child)
                if isinstance(following, EpisodeEnd):
                    self.offer(child_moves, served)
                    continue
                signature = state_signature(child)
                if self.seen.get(signature, -1) >= served:
                    continue
                self.seen[signature] = served
                children.append((child, following, child_moves))
            stack.extend(reversed(children))
        return self.complete


def build_plan(t: Topology, p: FleetConfiguration, f: Forecast, current_state: Optional[SimState] = None,
               exact: Optional[bool] = None) -> Plan:
    """
    Plan the window of f.

    The flow network proposes moves, which are replayed through a simulator
    that follows f, so orders are served exactly as the simulator serves them
    and laden boards only where there is room. The planned outcome is the
    replayed one: executed without noise the plan reproduces it. A branch and
    bound search then improves on the replayed moves.

    Args:
        t: The world description
        p: The fleet configuration
        f: Forecast covering the window
        current_state: Simulator state paused at a decision point, for a warm start
        exact: Search to optimality; by default only windows whose move tree
            is at most exact_search_size are, larger ones get search_nodes
            bound evaluations

    Returns:
        The Plan with the replayed moves and shortage
    """
    settings = app_settings.planner
    network = build_flow_network(t, p, f, current_state)
    flow_plan = extract_plan(network, solve_min_cost_flow(network).flows)

    root = scripted_state(t, p, f, current_state)
    if exact is None:
        exact = move_tree_size(t, f, settings.exact_search_size) <= settings.exact_search_size
    search = PlanSearch(t, p, f, root, node_limit=None if exact else settings.search_nodes)
    replay = clone_state(root)
    search.offer(replay_moves(replay, flow_plan.move_lookup), search.served(replay))
    proven = search.run() if exact or settings.search_nodes > 0 else False

    replay = clone_state(root)
    moves = replay_moves(replay, {(m.vessel, m.call): m.delta for m in search.best_moves})
    served = search.served(replay)
    shortage = replay.total_shortage - root.total_shortage
    logger.debug(
        f"Plan over days [{f.from_day}, {f.to_day}): {len(moves)} moves, planned shortage {shortage}, "
        f"flow promised {flow_plan.planned_shortage}, {search.nodes} bounds, optimal {proven}"
    )
    return Plan(
        moves=moves,
        planned_objective=float(served),
        planned_shortage=shortage,
        from_day=f.from_day,
        window=f.to_day - f.from_day,
        proven_optimal=proven,
    )


def plan_objective(t: Topology, p: FleetConfiguration, f: Forecast) -> float:
    """Planned satisfied demand of configuration p under forecast f"""
    return build_plan(t, p, f).planned_objective


class OrPolicy(PlanPolicy):
    """One plan over the whole horizon, built before the first decision"""

    def __init__(self, t: Topology, p: FleetConfiguration, noise_level: float, rng: np.random.Generator):
        self.forecast = make_forecast(t, p, 0, t.horizon, noise_level, rng)
        super().__init__(build_plan(t, p, self.forecast))
        self.plans_built = 1


class OriPolicy(PlanPolicy):
    """Rolling horizon: plan over plan_horizon days, execute the first window days, replan"""

    def __init__(self, t: Topology, p: FleetConfiguration, window: int, plan_horizon: int,
                 noise_level: float, rng: np.random.Generator):
        if not 1 <= window <= plan_horizon:
            raise InvalidInputError(f"need 1 <= window <= plan_horizon, got {window} and {plan_horizon}")
        self.topology = t
        self.configuration = p
        self.window = window
        self.plan_horizon = plan_horizon
        self.noise_level = noise_level
        self.rng = rng
        super().__init__(build_plan(t, p, make_forecast(t, p, 0, plan_horizon, noise_level, rng)))
        self.plans_built = 1
        self.next_replan = window

    def act(self, decision: DecisionPoint, state: SimState, rng: np.random.Generator) -> RepositionAction:
        if decision.day >= self.next_replan:
            forecast = make_forecast(self.topology, self.configuration, decision.day, self.plan_horizon,
                                     self.noise_level, self.rng, state=state)
            self.plan = build_plan(self.topology, self.configuration, forecast, state)
            self.plans_built += 1
            self.next_replan = (decision.day // self.window + 1) * self.window
        return super().act(decision, state, rng)


def or_policy(t: Topology, p: FleetConfiguration, noise_level: Optional[float], rng: np.random.Generator) -> OrPolicy:
    noise = app_settings.planner.noise_level if noise_level is None else noise_level
    return OrPolicy(t, p, noise, rng)


def ori_policy(t: Topology, p: FleetConfiguration, window_W: Optional[int], plan_horizon_L: Optional[int],
               noise_level: Optional[float], rng: np.random.Generator) -> OriPolicy:
    settings = app_settings.planner
    return OriPolicy(
        t,
        p,
        window=settings.window if window_W is None else window_W,
        plan_horizon=settings.plan_horizon if plan_horizon_L is None else plan_horizon_L,
        noise_level=settings.noise_level if noise_level is None else noise_level,
        rng=rng,
    )
