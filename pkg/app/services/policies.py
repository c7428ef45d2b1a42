"""Repositioning policies that need no planning: Rand, Heur, plan replay, action matrices."""
import logging
import math
from enum import StrEnum
from typing import Dict, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict

from app.core.appsettings import app_settings
from app.core.seeding import round_half_up
from app.models.planning import Plan
from app.models.search import MatrixPolicySpec
from app.models.simulation import DecisionPoint, RepositionAction, SimState
from app.models.topology import Topology

logger = logging.getLogger(__name__)


class PortRoleLabel(StrEnum):
    """Enum for trade-balance classes of ports"""
    EXPORTING = "exporting"
    IMPORTING = "importing"
    BALANCED = "balanced"


class PortRole(BaseModel):
    model_config = ConfigDict(frozen=True)

    port: str
    label: PortRoleLabel
    outbound: float
    inbound: float
    net_flow: float
    threshold: float


def classify_ports(t: Topology, threshold_ratio: Optional[float] = None) -> Dict[str, PortRole]:
    """
    Label each port by its mean daily net outbound demand.

    net = outbound - inbound, both averaged over the horizon from the analytic
    clipped means; the threshold is threshold_ratio * (outbound + inbound).

    Args:
        t: The world description
        threshold_ratio: Fraction of a port's mean daily total demand; settings default 0.1

    Returns:
        Mapping of port id to PortRole
    """
    ratio = app_settings.policy.heuristic_threshold if threshold_ratio is None else threshold_ratio
    outbound = {port.id: 0.0 for port in t.ports}
    inbound = {port.id: 0.0 for port in t.ports}
    for pair in t.order_model.pairs:
        mean = t.order_model.mean_daily(pair, t.horizon)
        outbound[pair.origin] += mean
        inbound[pair.destination] += mean

    roles = {}
    for port in t.ports:
        net = outbound[port.id] - inbound[port.id]
        threshold = ratio * (outbound[port.id] + inbound[port.id])
        if net > threshold:
            label = PortRoleLabel.EXPORTING
        elif net < -threshold:
            label = PortRoleLabel.IMPORTING
        else:
            label = PortRoleLabel.BALANCED
        roles[port.id] = PortRole(
            port=port.id,
            label=label,
            outbound=outbound[port.id],
            inbound=inbound[port.id],
            net_flow=net,
            threshold=threshold,
        )
    return roles


def random_policy(d: DecisionPoint, rng: np.random.Generator) -> RepositionAction:
    """Uniform over the feasible interval [-max_discharge, max_load]"""
    return RepositionAction(delta=int(rng.integers(-d.max_discharge, d.max_load + 1)))


def heuristic_policy(d: DecisionPoint, roles: Dict[str, PortRole], rng: np.random.Generator) -> RepositionAction:
    """
    Discharge at exporting ports, load at importing ports, idle elsewhere.

    Exporting: discharge U ~ {ceil(E/2), ..., E} where E is the empties aboard.
    Importing: load U ~ {ceil(M/2), ..., M} where M is the feasible load.
    """
    label = roles[d.port_id].label
    if label == PortRoleLabel.EXPORTING:
        empties = d.observation.vessel_empties
        if empties == 0:
            return RepositionAction(delta=0)
        return RepositionAction(delta=-int(rng.integers(math.ceil(empties / 2), empties + 1)))
    if label == PortRoleLabel.IMPORTING:
        load = d.max_load
        if load == 0:
            return RepositionAction(delta=0)
        return RepositionAction(delta=int(rng.integers(math.ceil(load / 2), load + 1)))
    return RepositionAction(delta=0)


def plan_executor(plan: Plan, d: DecisionPoint) -> RepositionAction:
    """Planned delta of the vessel's current call; calls without a move return 0"""
    return RepositionAction(delta=plan.delta_for(d.vessel_id, d.call_ordinal))


def matrix_action(spec: MatrixPolicySpec, d: DecisionPoint) -> RepositionAction:
    """Map the matrix cell of (vessel, call ordinal) onto the feasible range"""
    try:
        row = spec.matrix[spec.vessel_ids.index(d.vessel_id)]
    except ValueError:
        return RepositionAction(delta=0)
    if d.call_ordinal >= len(row):
        return RepositionAction(delta=0)
    cell = row[d.call_ordinal]
    if cell >= 0:
        return RepositionAction(delta=round_half_up(cell * d.max_load))
    return RepositionAction(delta=-round_half_up(-cell * d.max_discharge))


class NullPolicy:
    """Never moves an empty"""

    def act(self, decision: DecisionPoint, state: SimState, rng: np.random.Generator) -> RepositionAction:
        return RepositionAction(delta=0)


class RandomPolicy:
    def act(self, decision: DecisionPoint, state: SimState, rng: np.random.Generator) -> RepositionAction:
        return random_policy(decision, rng)


class HeuristicPolicy:
    def __init__(self, roles: Dict[str, PortRole]):
        self.roles = roles

    def act(self, decision: DecisionPoint, state: SimState, rng: np.random.Generator) -> RepositionAction:
        return heuristic_policy(decision, self.roles, rng)


class PlanPolicy:
    """Replays a Plan and counts calls where the simulator will clamp the planned move"""

    def __init__(self, plan: Plan):
        self.plan = plan
        self.divergences = 0

    def act(self, decision: DecisionPoint, state: SimState, rng: np.random.Generator) -> RepositionAction:
        action = plan_executor(self.plan, decision)
        if not -decision.max_discharge <= action.delta <= decision.max_load:
            self.divergences += 1
            logger.debug(
                f"Plan move {action.delta} for vessel {decision.vessel_id} call {decision.call_ordinal} "
                f"outside feasible [{-decision.max_discharge}, {decision.max_load}]"
            )
        return action


class MatrixPolicy:
    def __init__(self, spec: MatrixPolicySpec):
        self.spec = spec

    def act(self, decision: DecisionPoint, state: SimState, rng: np.random.Generator) -> RepositionAction:
        return matrix_action(self.spec, decision)
