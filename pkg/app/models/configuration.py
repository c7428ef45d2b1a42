from typing import Dict, Tuple

from pydantic import BaseModel, ConfigDict


class Assignment(BaseModel):
    """One (vessel, route, start-port) triple"""
    model_config = ConfigDict(frozen=True)

    vessel: str
    route: str
    start_port: str

    def as_triple(self) -> Tuple[str, str, str]:
        return (self.vessel, self.route, self.start_port)


class FleetConfiguration(BaseModel):
    """Fleet deployment p: one assignment per vessel"""
    model_config = ConfigDict(frozen=True)

    assignments: Tuple[Assignment, ...]

    def by_vessel(self) -> Dict[str, Assignment]:
        return {assignment.vessel: assignment for assignment in self.assignments}

    def key(self) -> Tuple[Tuple[str, str, str], ...]:
        """Canonical hashable form, independent of assignment order"""
        return tuple(sorted(assignment.as_triple() for assignment in self.assignments))

    def vessels_on(self, route_id: str) -> Tuple[str, ...]:
        return tuple(a.vessel for a in self.assignments if a.route == route_id)

    @classmethod
    def from_triples(cls, triples) -> "FleetConfiguration":
        return cls(assignments=tuple(
            Assignment(vessel=vessel, route=route, start_port=port) for vessel, route, port in triples
        ))
