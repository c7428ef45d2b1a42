from itertools import product

import pytest

from app.core.errors import InvalidInputError
from app.models.configuration import FleetConfiguration
from app.models.topology import DemandPeriod, OrderModel, OrderPair, Port, Route, SailDays
from app.services.topology_generator import TopologyShape, gen_topology
from app.services.validation import (
    feasible_triples,
    require_valid_configuration,
    require_valid_topology,
    validate_configuration,
    validate_topology,
)
from tests.common import two_port_topology


def messages(report):
    return [issue.message for issue in report.errors]


def test_generated_worlds_are_valid(two_port, two_route, desk, planted):
    for t in (two_port, two_route, desk, planted):
        assert validate_topology(t).ok


def test_duplicate_ports_are_reported(two_port):
    t = two_port.model_copy(update={"ports": two_port.ports + (Port(id="A", capacity=5, initial_stock=0),)})

    assert "duplicate port id 'A'" in messages(validate_topology(t))


def test_initial_stock_above_capacity(two_port):
    t = two_port.model_copy(update={"ports": (Port(id="A", capacity=5, initial_stock=6), two_port.ports[1])})

    report = validate_topology(t)

    assert not report.ok
    assert any("initial_stock 6" in message for message in messages(report))


def test_route_checks(two_port):
    routes = (
        Route(id="R", stops=("A",), leg_distances=(1.0,)),
        Route(id="S", stops=("A", "Z"), leg_distances=(1.0,)),
        Route(id="U", stops=("A", "A"), leg_distances=(1.0, -1.0)),
    )
    found = messages(validate_topology(two_port.model_copy(update={"routes": routes})))

    assert "route 'R': needs at least 2 stops, got 1" in found
    assert "route 'S': unknown port 'Z'" in found
    assert "route 'S': 1 leg_distances for 2 legs" in found
    assert "route 'U': port 'A' visited twice per cycle" in found
    assert "route 'U': leg_distances must be positive" in found


def test_order_pair_checks(two_port):
    model = OrderModel(
        pairs=(
            OrderPair(origin="A", destination="A", base_volume=1.0),
            OrderPair(origin="A", destination="B", base_volume=-1.0, noise_cv=-0.5),
            OrderPair(origin="B", destination="A", base_volume=1.0),
        ),
        sail_days=two_port.order_model.sail_days,
    )
    found = messages(validate_topology(two_port.model_copy(update={"order_model": model})))

    assert "order pair A->A: origin equals destination" in found
    assert "order pair A->B: base_volume must be >= 0" in found
    assert "order pair A->B: noise_cv must be >= 0" in found
    assert not any(message.startswith("order pair B->A") for message in found)


def test_large_amplitudes_only_warn():
    t = two_port_topology(periods=(DemandPeriod(amplitude=0.8, period_days=5.0), DemandPeriod(amplitude=0.5, period_days=3.0)))

    report = validate_topology(t)

    assert report.ok
    assert any("amplitudes exceed 1" in issue.message for issue in report.issues)


def test_unserved_pair_only_warns(two_route):
    model = OrderModel(
        pairs=two_route.order_model.pairs + (OrderPair(origin="A", destination="C", base_volume=1.0),),
        sail_days=two_route.order_model.sail_days + (SailDays(origin="A", destination="C", days=5.0),),
    )

    report = validate_topology(two_route.model_copy(update={"order_model": model}))

    assert report.ok
    assert any("no route serves both ports" in issue.message for issue in report.issues)


def test_horizon_must_be_positive(two_port):
    with pytest.raises(InvalidInputError, match="horizon"):
        require_valid_topology(two_port.model_copy(update={"horizon": 0}))


def test_configuration_checks(two_route):
    p = FleetConfiguration.from_triples([("V0", "R0", "C"), ("V0", "R1", "B"), ("V9", "R7", "A")])

    found = messages(validate_configuration(two_route, p))

    assert "vessel 'V0' has 2 assignments" in found
    assert "vessel 'V1' has no assignment" in found
    assert "vessel 'V0': start_port 'C' is not a stop of route 'R0'" in found
    assert "assignment for unknown vessel 'V9'" in found
    assert "vessel 'V9': unknown route 'R7'" in found


def test_valid_configuration_passes(two_route):
    p = FleetConfiguration.from_triples([("V0", "R0", "B"), ("V1", "R1", "C")])

    require_valid_configuration(two_route, p)


def test_feasible_triples_count(two_route):
    triples = feasible_triples(two_route, {"V1"})

    assert len(triples) == 4
    assert triples[0] == ("V1", "R0", "A")
    assert all(vessel == "V1" for vessel, _, _ in triples)


def test_feasible_triples_match_brute_force_on_wwt1_scale():
    t = gen_topology(TopologyShape.WWT1, seed=0)

    triples = feasible_triples(t, {vessel.id for vessel in t.vessels})

    brute = [
        (vessel.id, route.id, port.id)
        for vessel, route, port in product(t.vessels, t.routes, t.ports)
        if port.id in route.stops
    ]
    assert len(triples) == 46 * sum(len(route.stops) for route in t.routes)
    assert sorted(triples) == sorted(brute)
