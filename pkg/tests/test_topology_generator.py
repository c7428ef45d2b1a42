import pytest

from app.services.policies import PortRoleLabel, classify_ports
from app.services.topology_generator import WWT_COUNTS, TopologyShape, gen_topology
from app.services.validation import validate_topology


@pytest.mark.parametrize("shape", list(TopologyShape))
def test_generated_topologies_validate(shape):
    t = gen_topology(shape, seed=3)

    assert validate_topology(t).ok


@pytest.mark.parametrize("shape", [TopologyShape.WWT1, TopologyShape.WWT2])
def test_wwt_shaped_counts(shape):
    t = gen_topology(shape, seed=0)

    assert (len(t.ports), len(t.routes), len(t.vessels), t.horizon) == WWT_COUNTS[shape]
    covered = {stop for route in t.routes for stop in route.stops}
    assert covered == {port.id for port in t.ports}


def test_generation_is_deterministic():
    assert gen_topology(TopologyShape.WWT2, seed=5).fingerprint() == gen_topology(TopologyShape.WWT2, seed=5).fingerprint()
    assert gen_topology(TopologyShape.DESK, seed=1).fingerprint() != gen_topology(TopologyShape.DESK, seed=2).fingerprint()


def test_horizon_override():
    assert gen_topology(TopologyShape.PLANTED, horizon=25).horizon == 25


def test_desk_layout(desk):
    assert [route.stops for route in desk.routes] == [("P0", "P1", "P2"), ("P2", "P3")]
    assert classify_ports(desk)["P0"].label == PortRoleLabel.EXPORTING


def test_planted_demand_lives_on_route_a(planted):
    route_a = planted.route("A")

    assert all(route_a.contains(pair.origin) and route_a.contains(pair.destination)
               for pair in planted.order_model.pairs)
