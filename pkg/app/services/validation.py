"""Validation of world descriptions and fleet configurations."""
import logging
from collections import Counter
from typing import Iterable, List, Set, Tuple

from app.core.errors import InvalidInputError
from app.models.configuration import FleetConfiguration
from app.models.topology import Topology
from app.models.validation import ValidationReport

logger = logging.getLogger(__name__)


def _duplicates(ids: Iterable[str]) -> List[str]:
    return sorted(item for item, count in Counter(ids).items() if count > 1)


def validate_topology(t: Topology) -> ValidationReport:
    """
    Check every Topology, Port, Route, VesselSpec and OrderModel invariant.

    Args:
        t: The topology to check

    Returns:
        A report listing every violated invariant; ok is true iff there is no error
    """
    report = ValidationReport()

    for kind, ids in (
        ("port", [p.id for p in t.ports]),
        ("route", [r.id for r in t.routes]),
        ("vessel", [v.id for v in t.vessels]),
    ):
        for duplicate in _duplicates(ids):
            report.error(f"duplicate {kind} id '{duplicate}'")

    if t.horizon < 1:
        report.error(f"horizon must be >= 1, got {t.horizon}")
    if t.empty_return_delay < 0:
        report.error(f"empty_return_delay must be >= 0, got {t.empty_return_delay}")

    for port in t.ports:
        if port.capacity <= 0:
            report.error(f"port '{port.id}': capacity must be > 0, got {port.capacity}")
        if not 0 <= port.initial_stock <= port.capacity:
            report.error(
                f"port '{port.id}': initial_stock {port.initial_stock} outside [0, {port.capacity}]"
            )
        if port.handling_cap is not None and port.handling_cap <= 0:
            report.error(f"port '{port.id}': handling_cap must be > 0 or unbounded")

    known_ports = set(t.port_index)
    for route in t.routes:
        if len(route.stops) < 2:
            report.error(f"route '{route.id}': needs at least 2 stops, got {len(route.stops)}")
        for stop in route.stops:
            if stop not in known_ports:
                report.error(f"route '{route.id}': unknown port '{stop}'")
        for duplicate in _duplicates(route.stops):
            report.error(f"route '{route.id}': port '{duplicate}' visited twice per cycle")
        if len(route.leg_distances) != len(route.stops):
            report.error(
                f"route '{route.id}': {len(route.leg_distances)} leg_distances for {len(route.stops)} legs"
            )
        if any(leg <= 0 for leg in route.leg_distances):
            report.error(f"route '{route.id}': leg_distances must be positive")

    for vessel in t.vessels:
        if vessel.capacity < 1:
            report.error(f"vessel '{vessel.id}': capacity must be >= 1, got {vessel.capacity}")
        if not 0.0 <= vessel.speed_noise.sigma < 1.0:
            report.error(f"vessel '{vessel.id}': speed_noise.sigma must lie in [0, 1)")

    for pair in t.order_model.pairs:
        label = f"order pair {pair.origin}->{pair.destination}"
        if pair.origin == pair.destination:
            report.error(f"{label}: origin equals destination")
        for end in (pair.origin, pair.destination):
            if end not in known_ports:
                report.error(f"{label}: unknown port '{end}'")
        if pair.base_volume < 0:
            report.error(f"{label}: base_volume must be >= 0")
        if pair.noise_cv < 0:
            report.error(f"{label}: noise_cv must be >= 0")
        if any(period.period_days <= 0 for period in pair.periods):
            report.error(f"{label}: period-days must be positive")
        if sum(abs(period.amplitude) for period in pair.periods) > 1.0:
            report.warning(f"{label}: amplitudes exceed 1, the daily mean is clipped at zero on some days")
        sail = t.order_model.sail_days_between(pair.origin, pair.destination)
        if sail is None:
            report.error(f"{label}: no sail_days entry")
        elif sail <= 0:
            report.error(f"{label}: sail_days must be positive")
        if not any(r.contains(pair.origin) and r.contains(pair.destination) for r in t.routes):
            report.warning(f"{label}: no route serves both ports, laden will wait at the origin")

    if not report.ok:
        logger.debug(f"Topology '{t.name}' failed validation with {len(report.errors)} errors")
    return report


def validate_configuration(t: Topology, p: FleetConfiguration) -> ValidationReport:
    """
    Check that every vessel has exactly one assignment whose start-port lies on its route.

    Args:
        t: A valid topology
        p: The configuration to check

    Returns:
        ValidationReport with one error per violation
    """
    report = ValidationReport()
    counts = Counter(a.vessel for a in p.assignments)

    for vessel in t.vessels:
        if counts[vessel.id] == 0:
            report.error(f"vessel '{vessel.id}' has no assignment")
        elif counts[vessel.id] > 1:
            report.error(f"vessel '{vessel.id}' has {counts[vessel.id]} assignments")

    for assignment in p.assignments:
        if assignment.vessel not in t.vessel_index:
            report.error(f"assignment for unknown vessel '{assignment.vessel}'")
        route = t.route_index.get(assignment.route)
        if route is None:
            report.error(f"vessel '{assignment.vessel}': unknown route '{assignment.route}'")
        elif not route.contains(assignment.start_port):
            report.error(
                f"vessel '{assignment.vessel}': start_port '{assignment.start_port}' "
                f"is not a stop of route '{route.id}'"
            )
    return report


def feasible_triples(t: Topology, unassigned: Set[str]) -> List[Tuple[str, str, str]]:
    """
    Enumerate the unmasked (vessel, route, start-port) triples.

    Args:
        t: A valid topology
        unassigned: Vessel ids still without an assignment

    Returns:
        Triples in topology order; |unassigned| * sum of route lengths entries
    """
    return [
        (vessel.id, route.id, stop)
        for vessel in t.vessels
        if vessel.id in unassigned
        for route in t.routes
        for stop in route.stops
    ]


def require_valid_topology(t: Topology) -> None:
    """Raise InvalidInputError carrying the first error of validate_topology"""
    report = validate_topology(t)
    if not report.ok:
        raise InvalidInputError(f"invalid topology '{t.name}': {report.errors[0].message}")


def require_valid_configuration(t: Topology, p: FleetConfiguration) -> None:
    """Raise InvalidInputError carrying the first error of validate_configuration"""
    report = validate_configuration(t, p)
    if not report.ok:
        raise InvalidInputError(f"invalid configuration: {report.errors[0].message}")
