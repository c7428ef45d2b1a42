import copy
from itertools import islice, product

import numpy as np
import pytest

from app.core.errors import InvalidInputError
from app.models.configuration import FleetConfiguration
from app.models.planning import ArcKind, Forecast, ForecastCall
from app.models.simulation import EpisodeEnd, RepositionAction
from app.services.flow import solve_min_cost_flow
from app.services.planner import (
    OrPolicy,
    OriPolicy,
    build_flow_network,
    build_plan,
    extract_plan,
    make_forecast,
    or_policy,
    ori_policy,
    return_day,
)
from app.services.policies import NullPolicy, PlanPolicy
from app.services.simulator import apply_action, init_episode, next_decision, rollout, run_episode
from tests.common import single_route_configuration, two_port_topology, two_route_topology


def exact_forecast(t, p, from_day=0, horizon=None):
    return make_forecast(t, p, from_day, horizon or t.horizon, 0.0, np.random.default_rng(0))


class RecordingPolicy:
    def __init__(self):
        self.calls = []

    def act(self, decision, state, rng):
        self.calls.append((decision.vessel_id, decision.port_id, decision.day, decision.call_ordinal))
        return RepositionAction()


def signature(s):
    return (
        s.day,
        s.day_started,
        tuple(sorted(s.port_stock.items())),
        tuple(
            (vessel_id, v.stop_index, v.arrival_day, v.empties, tuple(sorted(v.laden.items())), v.scheduled)
            for vessel_id, v in sorted(s.vessels.items())
        ),
        tuple((port, tuple(map(tuple, queue))) for port, queue in sorted(s.waiting_laden.items())),
        tuple((lot.port, lot.maturity_day, lot.quantity) for lot in s.in_transit_laden),
        tuple(sorted(s.pending_events)),
    )


def least_shortage(t, p):
    """Smallest shortage any sequence of moves reaches in the noise-free simulator itself"""
    memo = {}

    def rest(s):
        key = signature(s)
        if key not in memo:
            before = s.total_shortage
            event = next_decision(s)
            if isinstance(event, EpisodeEnd):
                memo[key] = event.total_shortage - before
            else:
                outcomes = []
                for delta in range(-event.max_discharge, event.max_load + 1):
                    child = copy.deepcopy(s, {id(t): t, id(p): p})
                    apply_action(child, event, RepositionAction(delta=delta))
                    outcomes.append(child.total_shortage - before + rest(child))
                memo[key] = min(outcomes)
        return memo[key]

    return rest(init_episode(t, p, seed=0))


def oracle_instances():
    grid = product(
        (4, 6),                      # horizon
        ((2, 0), (1, 2), (3, 1)),    # initial stocks of A and B
        (1, 3),                      # vessel capacity
        ((1.0, 1.0), (2.0, 1.0)),    # legs
        (1.0, 3.0),                  # A->B volume
        (0.0, 1.0),                  # B->A volume
        (0, 1),                      # return delay
        ("A", "B"),                  # start port
    )
    for horizon, initial, capacity, legs, volume, reverse, delay, start in grid:
        t = two_port_topology(
            horizon=horizon, initial=initial, port_capacity=10, volume=volume, reverse_volume=reverse,
            vessel_capacity=capacity, legs=legs, delay=delay,
        )
        yield t, single_route_configuration(t, start)


def check_plans_are_optimal(instances):
    checked = 0
    for t, p in instances:
        f = exact_forecast(t, p)
        plan = build_plan(t, p, f)
        best = least_shortage(t, p)
        assert plan.proven_optimal
        assert plan.planned_shortage == best, f"{t.model_dump()} {p.model_dump()}"
        assert plan.planned_objective == f.total_demand - best
        checked += 1
    return checked


def test_plan_matches_best_move_sequence():
    assert check_plans_are_optimal(islice(oracle_instances(), 0, None, 8)) == 48


@pytest.mark.slow
def test_plan_matches_best_move_sequence_on_every_tiny_instance():
    assert check_plans_are_optimal(oracle_instances()) >= 200


def test_plan_does_not_count_on_room_the_vessel_lacks():
    """One slot aboard: laden served on day 0 cannot all leave on the first call"""
    t = two_port_topology(
        horizon=4, initial=(2, 0), port_capacity=10, volume=3.0, reverse_volume=1.0,
        vessel_capacity=1, legs=(1.0, 1.0), delay=0,
    )
    p = single_route_configuration(t, "A")
    f = exact_forecast(t, p)
    network = build_flow_network(t, p, f)
    proposal = extract_plan(network, solve_min_cost_flow(network).flows)

    policy = OrPolicy(t, p, 0.0, np.random.default_rng(0))
    metrics = rollout(t, p, policy, seed=0)

    assert proposal.planned_shortage < 13
    assert policy.plan.planned_shortage == metrics.total_shortage == least_shortage(t, p) == 13
    assert policy.plan.proven_optimal
    assert policy.divergences == 0


@pytest.mark.parametrize("horizon,initial,volume,legs,delay", [
    (10, (10, 0), 2.0, (2.0, 2.0), 1),
    (12, (6, 4), 3.0, (2.0, 3.0), 0),
    (15, (4, 8), 2.0, (3.0, 3.0), 2),
    (20, (5, 0), 1.0, (1.0, 2.0), 1),
    (20, (20, 0), 4.0, (2.0, 2.0), 2),
    (16, (0, 12), 2.0, (2.0, 1.0), 0),
    (18, (8, 8), 3.0, (3.0, 2.0), 1),
    (14, (3, 3), 1.0, (1.0, 1.0), 0),
    (25, (10, 5), 2.0, (4.0, 3.0), 2),
    (11, (2, 9), 2.0, (2.0, 2.0), 1),
])
@pytest.mark.parametrize("start", ["A", "B"])
def test_plan_equals_execution(horizon, initial, volume, legs, delay, start):
    """Without any noise the simulator realizes exactly the planned shortage"""
    t = two_port_topology(
        horizon=horizon, initial=initial, port_capacity=1000, volume=volume,
        vessel_capacity=100, legs=legs, delay=delay,
    )
    p = single_route_configuration(t, start)
    policy = OrPolicy(t, p, 0.0, np.random.default_rng(0))

    metrics = rollout(t, p, policy, seed=3)

    assert metrics.total_shortage == policy.plan.planned_shortage
    assert metrics.clamped_actions == 0
    assert policy.divergences == 0


def test_noise_free_forecast_reproduces_schedule():
    t = two_port_topology(horizon=20, legs=(2.0, 3.0))
    p = single_route_configuration(t)
    recorder = RecordingPolicy()
    run_episode(t, p, recorder, seed=0)

    f = exact_forecast(t, p)

    assert [(c.port, c.day, c.ordinal) for c in f.arrivals["V"]] == [
        (port, day, ordinal) for _, port, day, ordinal in recorder.calls
    ]


def test_forecast_demand_noise_band():
    t = two_port_topology(horizon=30, volume=10.0)
    p = single_route_configuration(t)

    f = make_forecast(t, p, 0, 30, 0.2, np.random.default_rng(1))

    assert all(8 <= d.quantity <= 12 for d in f.demands)
    assert exact_forecast(t, p).total_demand == 300


def test_forecast_window_is_clamped_to_horizon():
    t = two_port_topology(horizon=10)
    p = single_route_configuration(t)

    f = make_forecast(t, p, 6, 20, 0.0, np.random.default_rng(0))

    assert (f.from_day, f.to_day) == (6, 10)
    assert all(6 <= call.day < 10 for call in f.arrivals["V"])


def test_forecast_is_unbiased():
    """Uniform relative noise leaves the expected order and leg lengths at their means"""
    t = two_port_topology(horizon=40, volume=20.0, legs=(4.0, 4.0))
    p = single_route_configuration(t)
    rng = np.random.default_rng(14)

    forecasts = [make_forecast(t, p, 0, 40, 0.3, rng) for _ in range(300)]

    daily = [f.total_demand / 40 for f in forecasts]
    gaps = [b.day - a.day for f in forecasts for a, b in zip(f.arrivals["V"], f.arrivals["V"][1:])]
    assert np.mean(daily) == pytest.approx(20.0, rel=0.02)
    assert np.mean(gaps) == pytest.approx(4.0, abs=0.1)
    assert set(gaps) == {3, 4, 5}


def test_return_day_follows_the_carrier():
    t = two_port_topology(horizon=10, delay=1)
    p = single_route_configuration(t)
    f = exact_forecast(t, p)

    assert return_day(t, p, f, "A", "B", 0) == 3
    assert return_day(t, p, f, "A", "B", 1) == 7
    assert return_day(t, p, f, "A", "B", 5) is None
    assert return_day(t, p, f, "A", "B", 9) is None


def test_return_day_falls_back_to_sail_days():
    t = two_route_topology(horizon=30)
    p = FleetConfiguration.from_triples((v.id, "R1", "B") for v in t.vessels)
    f = exact_forecast(t, p)

    assert return_day(t, p, f, "A", "B", 0) == 0 + 2 + t.empty_return_delay


def test_network_arc_inventory(two_port, two_port_config):
    f = exact_forecast(two_port, two_port_config)
    network = build_flow_network(two_port, two_port_config, f)
    calls = len(f.arrivals["V"])

    assert len(network.arcs_of(ArcKind.PASS)) == 2 * two_port.horizon
    assert len(network.arcs_of(ArcKind.CARRY)) == 2 * (two_port.horizon - 1)
    assert len(network.arcs_of(ArcKind.LOAD)) == calls
    assert len(network.arcs_of(ArcKind.LEG)) == calls - 1
    assert len(network.arcs_of(ArcKind.STRAND)) == calls
    assert network.total_supply == 10
    assert network.total_forecast_demand == 20


def test_arrivals_outside_window_are_rejected(two_port, two_port_config):
    f = Forecast(from_day=0, to_day=5, arrivals={"V": (ForecastCall(port="A", day=7, ordinal=0),)})

    with pytest.raises(InvalidInputError):
        build_flow_network(two_port, two_port_config, f)


def test_arrivals_must_increase(two_port, two_port_config):
    f = Forecast(from_day=0, to_day=5, arrivals={"V": (
        ForecastCall(port="A", day=2, ordinal=0),
        ForecastCall(port="B", day=2, ordinal=1),
    )})

    with pytest.raises(InvalidInputError):
        build_flow_network(two_port, two_port_config, f)


@pytest.mark.parametrize("capacity", [1, 2, 3])
def test_optimal_plan_never_loses_to_standing_still(capacity):
    t = two_port_topology(horizon=8, initial=(3, 3), volume=2.0, reverse_volume=1.0, vessel_capacity=capacity)
    p = single_route_configuration(t)

    plan = build_plan(t, p, exact_forecast(t, p), exact=True)

    assert plan.proven_optimal
    assert plan.planned_shortage <= rollout(t, p, NullPolicy(), seed=0).total_shortage


def test_warm_plan_equals_the_rest_of_the_execution():
    t = two_port_topology(horizon=16, initial=(6, 2), volume=2.0, reverse_volume=1.0, vessel_capacity=4)
    p = single_route_configuration(t)
    s = init_episode(t, p, seed=0)
    event = next_decision(s)
    while event.day < 5:
        apply_action(s, event, RepositionAction(delta=event.max_load))
        event = next_decision(s)

    f = make_forecast(t, p, event.day, t.horizon, 0.0, np.random.default_rng(0), state=s)
    plan = build_plan(t, p, f, s)
    policy = PlanPolicy(plan)
    before = s.total_shortage
    while not isinstance(event, EpisodeEnd):
        apply_action(s, event, policy.act(event, s, np.random.default_rng(0)))
        event = next_decision(s)

    assert plan.from_day == 6
    assert s.total_shortage - before == plan.planned_shortage
    assert policy.divergences == 0


def test_cold_plan_must_start_on_day_zero(two_port, two_port_config):
    with pytest.raises(InvalidInputError):
        build_plan(two_port, two_port_config, exact_forecast(two_port, two_port_config, from_day=2))


def test_zero_demand_plan_is_empty():
    t = two_port_topology(volume=0.0)
    p = single_route_configuration(t)

    plan = build_plan(t, p, exact_forecast(t, p))

    assert plan.planned_objective == 0
    assert plan.moves == ()


def test_warm_start_network_is_feasible(desk, desk_config):
    s = init_episode(desk, desk_config, seed=4)
    event = next_decision(s)
    while not isinstance(event, EpisodeEnd) and event.day < 15:
        apply_action(s, event, RepositionAction(delta=event.max_load // 2))
        event = next_decision(s)
    assert not isinstance(event, EpisodeEnd)

    f = make_forecast(desk, desk_config, event.day, 20, 0.2, np.random.default_rng(0), state=s)
    plan = build_plan(desk, desk_config, f, s)

    assert plan.from_day == event.day
    assert 0 <= plan.planned_shortage <= f.total_demand


def test_rolling_horizon_counts_replans(desk, desk_config):
    recorder = RecordingPolicy()
    run_episode(desk, desk_config, recorder, seed=6)
    decision_days = {day for _, _, day, _ in recorder.calls}

    every_day = OriPolicy(desk, desk_config, 1, 10, 0.2, np.random.default_rng(0))
    run_episode(desk, desk_config, every_day, seed=6)
    once = OriPolicy(desk, desk_config, desk.horizon, desk.horizon, 0.2, np.random.default_rng(0))
    run_episode(desk, desk_config, once, seed=6)

    assert every_day.plans_built == 1 + len({day for day in decision_days if day >= 1})
    assert once.plans_built == 1


def test_window_longer_than_plan_horizon_is_rejected(desk, desk_config):
    with pytest.raises(InvalidInputError):
        OriPolicy(desk, desk_config, 10, 5, 0.2, np.random.default_rng(0))


def test_planner_beats_doing_nothing(desk, desk_config):
    seeds = range(5)
    ori = np.mean([
        rollout(desk, desk_config, OriPolicy(desk, desk_config, 10, 30, 0.2, np.random.default_rng(s)), s).fulfillment_pct
        for s in seeds
    ])
    null = np.mean([rollout(desk, desk_config, NullPolicy(), s).fulfillment_pct for s in seeds])

    assert ori > null


def test_extracted_plan_accounts_for_all_forecast_demand(desk, desk_config):
    f = make_forecast(desk, desk_config, 0, desk.horizon, 0.2, np.random.default_rng(3))
    network = build_flow_network(desk, desk_config, f)

    plan = extract_plan(network, solve_min_cost_flow(network).flows)
    replayed = build_plan(desk, desk_config, f)

    assert plan.planned_objective + plan.planned_shortage == network.total_forecast_demand
    assert all(move.delta != 0 for move in plan.moves)
    assert [move.day for move in plan.moves] == sorted(move.day for move in plan.moves)
    assert replayed.planned_objective + replayed.planned_shortage == f.total_demand
    assert all(move.delta != 0 for move in replayed.moves)


def test_policy_factories(desk, desk_config):
    once = or_policy(desk, desk_config, 0.0, np.random.default_rng(0))
    rolling = ori_policy(desk, desk_config, 7, 14, None, np.random.default_rng(0))

    assert once.plans_built == 1
    assert once.forecast.to_day == desk.horizon
    assert (rolling.window, rolling.plan_horizon, rolling.next_replan) == (7, 14, 7)
