import sys
from pathlib import Path

import pytest

# Add the project root directory to the Python path
project_root = str(Path(__file__).parent.parent)
sys.path.insert(0, project_root)

from app.models.configuration import FleetConfiguration
from app.models.topology import Topology
from app.services.search import round_robin_configuration
from app.services.topology_generator import desk_topology, planted_topology
from tests.common import single_route_configuration, two_port_topology, two_route_topology


@pytest.fixture
def two_port() -> Topology:
    return two_port_topology()


@pytest.fixture
def two_port_config(two_port) -> FleetConfiguration:
    return single_route_configuration(two_port)


@pytest.fixture
def two_route() -> Topology:
    return two_route_topology()


@pytest.fixture(scope="session")
def desk() -> Topology:
    return desk_topology(seed=0)


@pytest.fixture(scope="session")
def desk_config(desk) -> FleetConfiguration:
    return round_robin_configuration(desk)


@pytest.fixture(scope="session")
def planted() -> Topology:
    return planted_topology(seed=0)
