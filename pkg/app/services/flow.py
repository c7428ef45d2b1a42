"""
Exact integral min-cost flow by successive shortest paths with node potentials.

Initial potentials come from a Bellman-Ford pass over all arcs (negative costs
allowed, negative cycles not). Each phase runs Dijkstra on reduced costs, then
pushes a blocking flow through the zero-reduced-cost subgraph before the next
Dijkstra.
"""
import heapq
import logging
from collections import deque
from typing import Dict, Hashable, List, Optional

from app.core.errors import InfeasibleFlowError
from app.models.planning import FlowNetwork, FlowSolution

logger = logging.getLogger(__name__)

_SOURCE = ("__source__",)


class _Residual:
    """Adjacency-list residual graph; arc 2i is original arc i, arc 2i+1 its reverse"""

    def __init__(self, node_count: int):
        self.adjacency: List[List[int]] = [[] for _ in range(node_count)]
        self.tail: List[int] = []
        self.head: List[int] = []
        self.capacity: List[int] = []
        self.cost: List[int] = []

    def add(self, tail: int, head: int, capacity: int, cost: int) -> int:
        index = len(self.head)
        for u, v, cap, c in ((tail, head, capacity, cost), (head, tail, 0, -cost)):
            self.adjacency[u].append(len(self.head))
            self.tail.append(u)
            self.head.append(v)
            self.capacity.append(cap)
            self.cost.append(c)
        return index


def _initial_potentials(graph: _Residual, node_count: int) -> List[int]:
    """Shortest distances from a virtual root joined to every node at cost 0 (SPFA)"""
    potential = [0] * node_count
    in_queue = [True] * node_count
    queue = deque(range(node_count))
    relaxations = [0] * node_count
    while queue:
        u = queue.popleft()
        in_queue[u] = False
        for arc in graph.adjacency[u]:
            if graph.capacity[arc] <= 0:
                continue
            v = graph.head[arc]
            candidate = potential[u] + graph.cost[arc]
            if candidate < potential[v]:
                potential[v] = candidate
                relaxations[v] += 1
                if relaxations[v] > node_count:
                    raise InfeasibleFlowError("negative-cost cycle in flow network")
                if not in_queue[v]:
                    in_queue[v] = True
                    queue.append(v)
    return potential


def _dijkstra(graph: _Residual, source: int, potential: List[int]) -> List[Optional[int]]:
    distance: List[Optional[int]] = [None] * len(graph.adjacency)
    distance[source] = 0
    heap = [(0, source)]
    while heap:
        d, u = heapq.heappop(heap)
        if d > distance[u]:
            continue
        for arc in graph.adjacency[u]:
            if graph.capacity[arc] <= 0:
                continue
            v = graph.head[arc]
            candidate = d + graph.cost[arc] + potential[u] - potential[v]
            if distance[v] is None or candidate < distance[v]:
                distance[v] = candidate
                heapq.heappush(heap, (candidate, v))
    return distance


def _admissible(graph: _Residual, arc: int, potential: List[int]) -> bool:
    return (
        graph.capacity[arc] > 0
        and graph.cost[arc] + potential[graph.tail[arc]] - potential[graph.head[arc]] == 0
    )


def _levels(graph: _Residual, source: int, potential: List[int]) -> List[int]:
    level = [-1] * len(graph.adjacency)
    level[source] = 0
    queue = deque([source])
    while queue:
        u = queue.popleft()
        for arc in graph.adjacency[u]:
            v = graph.head[arc]
            if level[v] < 0 and _admissible(graph, arc, potential):
                level[v] = level[u] + 1
                queue.append(v)
    return level


def _blocking_flow(graph: _Residual, source: int, sink: int, level: List[int], potential: List[int]) -> int:
    """Iterative DFS along level-increasing admissible arcs; returns the amount pushed"""
    cursor = [0] * len(graph.adjacency)
    pushed = 0
    while True:
        path: List[int] = []
        node = source
        while node != sink:
            adjacency = graph.adjacency[node]
            advanced = False
            while cursor[node] < len(adjacency):
                arc = adjacency[cursor[node]]
                head = graph.head[arc]
                if level[head] == level[node] + 1 and _admissible(graph, arc, potential):
                    path.append(arc)
                    node = head
                    advanced = True
                    break
                cursor[node] += 1
            if advanced:
                continue
            if node == source:
                return pushed
            # dead end
            level[node] = -1
            arc = path.pop()
            node = graph.tail[arc]
            cursor[node] += 1

        amount = min(graph.capacity[arc] for arc in path)
        for arc in path:
            graph.capacity[arc] -= amount
            graph.capacity[arc ^ 1] += amount
        pushed += amount


def solve_min_cost_flow(n: FlowNetwork, certify: bool = False) -> FlowSolution:
    """
    Route every unit of supply to the sink at minimum total cost.

    Args:
        n: The network; uncapacitated arcs are bounded by the total supply
        certify: Also return the final node potentials

    Returns:
        FlowSolution with one integral flow per arc of n.arcs

    Raises:
        InfeasibleFlowError: If some supply cannot reach the sink
    """
    index: Dict[Hashable, int] = {node: i for i, node in enumerate(n.nodes)}
    if n.sink not in index:
        raise InfeasibleFlowError(f"sink {n.sink!r} is not a node of the network")
    source = len(index)
    index[_SOURCE] = source
    node_count = source + 1

    total_supply = n.total_supply
    unbounded = max(total_supply, 0)
    graph = _Residual(node_count)
    arc_ids = []
    for arc in n.arcs:
        capacity = unbounded if arc.capacity is None else arc.capacity
        if capacity < 0:
            raise InfeasibleFlowError(f"negative capacity on arc {arc.tail!r}->{arc.head!r}")
        arc_ids.append(graph.add(index[arc.tail], index[arc.head], capacity, arc.cost))
    for node, supply in n.supplies.items():
        if supply < 0:
            raise InfeasibleFlowError(f"negative supply at {node!r}")
        if supply > 0:
            graph.add(source, index[node], supply, 0)

    potential = _initial_potentials(graph, node_count)
    sink = index[n.sink]
    remaining = total_supply
    phases = 0
    while remaining > 0:
        distance = _dijkstra(graph, source, potential)
        if distance[sink] is None:
            raise InfeasibleFlowError(f"{remaining} units of supply cannot reach the sink")
        bound = distance[sink]
        for v in range(node_count):
            potential[v] += bound if distance[v] is None else min(distance[v], bound)
        phases += 1
        while remaining > 0:
            level = _levels(graph, source, potential)
            if level[sink] < 0:
                break
            remaining -= _blocking_flow(graph, source, sink, level, potential)

    flows = [graph.capacity[arc_id ^ 1] for arc_id in arc_ids]
    objective = sum(arc.cost * flow for arc, flow in zip(n.arcs, flows))
    logger.debug(f"Min-cost flow: {len(n.nodes)} nodes, {len(n.arcs)} arcs, {phases} phases, objective {objective}")

    potentials = None
    if certify:
        potentials = {node: potential[i] for node, i in index.items() if node != _SOURCE}
    return FlowSolution(flows=flows, objective=objective, potentials=potentials, augmentations=phases)


def reduced_cost(n: FlowNetwork, solution: FlowSolution, arc_index: int) -> int:
    """Reduced cost of an arc under the solution's potentials"""
    arc = n.arcs[arc_index]
    return arc.cost + solution.potentials[arc.tail] - solution.potentials[arc.head]
