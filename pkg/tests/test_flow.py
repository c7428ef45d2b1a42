import networkx as nx
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from app.core.errors import InfeasibleFlowError
from app.models.planning import FlowArc, FlowNetwork
from app.services.flow import reduced_cost, solve_min_cost_flow

SINK = "T"


@st.composite
def acyclic_networks(draw):
    """DAG over 0..n-1 with negative costs allowed, every node drained to the sink at a high cost"""
    size = draw(st.integers(min_value=2, max_value=7))
    arcs = []
    for tail in range(size):
        for head in range(tail + 1, size):
            if draw(st.booleans()):
                capacity = draw(st.one_of(st.none(), st.integers(min_value=0, max_value=5)))
                arcs.append(FlowArc(tail, head, capacity, draw(st.integers(min_value=-5, max_value=10))))
        arcs.append(FlowArc(tail, SINK, None, 20))
    supplies = {node: draw(st.integers(min_value=0, max_value=4)) for node in range(size)}
    return FlowNetwork(nodes=list(range(size)) + [SINK], arcs=arcs, supplies=supplies, sink=SINK)


def networkx_cost(n: FlowNetwork) -> int:
    graph = nx.DiGraph()
    for node in n.nodes:
        graph.add_node(node, demand=-n.supplies.get(node, 0))
    graph.nodes[SINK]["demand"] = n.total_supply
    for arc in n.arcs:
        attributes = {"weight": arc.cost}
        if arc.capacity is not None:
            attributes["capacity"] = arc.capacity
        graph.add_edge(arc.tail, arc.head, **attributes)
    return nx.min_cost_flow_cost(graph)


@settings(max_examples=150, deadline=None)
@given(network=acyclic_networks())
def test_matches_network_simplex(network):
    solution = solve_min_cost_flow(network)

    assert solution.objective == networkx_cost(network)


@settings(max_examples=100, deadline=None)
@given(network=acyclic_networks())
def test_solution_is_feasible_and_certified(network):
    solution = solve_min_cost_flow(network, certify=True)
    balance = {node: 0 for node in network.nodes}

    for index, (arc, flow) in enumerate(zip(network.arcs, solution.flows)):
        upper = network.total_supply if arc.capacity is None else arc.capacity
        assert 0 <= flow <= upper
        balance[arc.tail] -= flow
        balance[arc.head] += flow
        if flow < upper:
            assert reduced_cost(network, solution, index) >= 0
        if flow > 0:
            assert reduced_cost(network, solution, index) <= 0

    for node in network.nodes:
        if node != SINK:
            assert balance[node] == -network.supplies.get(node, 0)
    assert balance[SINK] == network.total_supply


def test_prefers_the_cheaper_path():
    network = FlowNetwork(
        nodes=["s", "a", "b", SINK],
        arcs=[
            FlowArc("s", "a", 3, 1),
            FlowArc("s", "b", None, 4),
            FlowArc("a", SINK, None, 1),
            FlowArc("b", SINK, None, 0),
        ],
        supplies={"s": 5},
        sink=SINK,
    )

    solution = solve_min_cost_flow(network)

    assert solution.flows == [3, 2, 3, 2]
    assert solution.objective == 3 * 2 + 2 * 4


def test_negative_costs_are_exploited():
    network = FlowNetwork(
        nodes=["s", "a", SINK],
        arcs=[FlowArc("s", "a", 2, -10), FlowArc("a", SINK, None, 0), FlowArc("s", SINK, None, 0)],
        supplies={"s": 3},
        sink=SINK,
    )

    assert solve_min_cost_flow(network).objective == -20


def test_zero_supply_is_empty_flow():
    network = FlowNetwork(nodes=["s", SINK], arcs=[FlowArc("s", SINK, None, 1)], supplies={}, sink=SINK)

    solution = solve_min_cost_flow(network)

    assert solution.flows == [0]
    assert solution.objective == 0


def test_unreachable_sink_is_infeasible():
    network = FlowNetwork(
        nodes=["s", "a", SINK],
        arcs=[FlowArc("s", "a", None, 0), FlowArc("a", SINK, 1, 0)],
        supplies={"s": 2},
        sink=SINK,
    )

    with pytest.raises(InfeasibleFlowError):
        solve_min_cost_flow(network)


def test_negative_capacity_is_rejected():
    network = FlowNetwork(nodes=["s", SINK], arcs=[FlowArc("s", SINK, -1, 0)], supplies={"s": 1}, sink=SINK)

    with pytest.raises(InfeasibleFlowError):
        solve_min_cost_flow(network)


def test_missing_sink_is_rejected():
    network = FlowNetwork(nodes=["s"], arcs=[], supplies={"s": 1}, sink=SINK)

    with pytest.raises(InfeasibleFlowError):
        solve_min_cost_flow(network)
