"""
YAML documents for topologies, fleet configurations, plans and action matrices.

Topology layout (schema_version 1)::

    schema_version: 1
    meta: {name, horizon, empty_return_delay}
    ports: [{id, capacity, initial_stock, handling_cap}]
    routes: [{id, stops, leg_distances}]
    vessels: [{id, capacity, speed_noise: {kind, sigma}}]
    orders: {pairs: [{origin, destination, base_volume, periods, noise_cv}], sail_days: [...]}

Configuration layout::

    assignments: [{vessel, route, start_port}]
"""
import logging
from pathlib import Path
from typing import Any, Dict, Union

import yaml

from app.core.errors import InvalidInputError
from app.models.configuration import FleetConfiguration
from app.models.planning import Plan
from app.models.search import MatrixPolicySpec
from app.models.topology import Topology

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
TOPOLOGY_SECTIONS = ("ports", "routes", "vessels", "orders", "meta")

PathLike = Union[str, Path]


def topology_to_document(t: Topology) -> Dict[str, Any]:
    data = t.model_dump(mode="json")
    return {
        "schema_version": SCHEMA_VERSION,
        "meta": {
            "name": data["name"],
            "horizon": data["horizon"],
            "empty_return_delay": data["empty_return_delay"],
        },
        "ports": data["ports"],
        "routes": data["routes"],
        "vessels": data["vessels"],
        "orders": data["order_model"],
    }


def topology_from_document(document: Dict[str, Any]) -> Topology:
    """
    Build a Topology from a parsed document.

    Args:
        document: Mapping with the schema_version 1 sections

    Returns:
        The parsed topology (not yet semantically validated)

    Raises:
        InvalidInputError: If the schema version or a section is missing
        pydantic.ValidationError: If a field has the wrong type
    """
    if not isinstance(document, dict):
        raise InvalidInputError("topology document must be a mapping")
    version = document.get("schema_version")
    if version != SCHEMA_VERSION:
        raise InvalidInputError(f"schema_version: expected {SCHEMA_VERSION}, got {version!r}")
    missing = [section for section in TOPOLOGY_SECTIONS if section not in document]
    if missing:
        raise InvalidInputError(f"{missing[0]}: section missing from topology document")

    meta = document["meta"] or {}
    return Topology.model_validate({
        "name": meta.get("name", "topology"),
        "horizon": meta.get("horizon"),
        "empty_return_delay": meta.get("empty_return_delay", 2),
        "ports": document["ports"] or [],
        "routes": document["routes"] or [],
        "vessels": document["vessels"] or [],
        "order_model": document["orders"] or {},
    })


def dump_topology(t: Topology) -> str:
    return yaml.safe_dump(topology_to_document(t), sort_keys=False)


def parse_topology(text: str) -> Topology:
    return topology_from_document(yaml.safe_load(text))


def load_topology(path: PathLike) -> Topology:
    logger.info(f"Loading topology from {path}")
    return parse_topology(Path(path).read_text(encoding="utf-8"))


def save_topology(t: Topology, path: PathLike) -> None:
    Path(path).write_text(dump_topology(t), encoding="utf-8")


def dump_configuration(p: FleetConfiguration) -> str:
    return yaml.safe_dump(p.model_dump(mode="json"), sort_keys=False)


def parse_configuration(text: str) -> FleetConfiguration:
    document = yaml.safe_load(text)
    if isinstance(document, list):
        document = {"assignments": document}
    return FleetConfiguration.model_validate(document)


def load_configuration(path: PathLike) -> FleetConfiguration:
    return parse_configuration(Path(path).read_text(encoding="utf-8"))


def save_configuration(p: FleetConfiguration, path: PathLike) -> None:
    Path(path).write_text(dump_configuration(p), encoding="utf-8")


def save_plan(plan: Plan, path: PathLike) -> None:
    Path(path).write_text(yaml.safe_dump(plan.model_dump(mode="json"), sort_keys=False), encoding="utf-8")


def load_plan(path: PathLike) -> Plan:
    return Plan.model_validate(yaml.safe_load(Path(path).read_text(encoding="utf-8")))


def save_matrix_policy(spec: MatrixPolicySpec, path: PathLike) -> None:
    Path(path).write_text(yaml.safe_dump(spec.model_dump(mode="json"), sort_keys=False), encoding="utf-8")


def load_matrix_policy(path: PathLike) -> MatrixPolicySpec:
    return MatrixPolicySpec.model_validate(yaml.safe_load(Path(path).read_text(encoding="utf-8")))
