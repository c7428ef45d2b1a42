from enum import StrEnum
from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field, computed_field

from app.models.configuration import FleetConfiguration
from app.models.search import AlgorithmSpec


class ConfigureMethod(StrEnum):
    """Enum for configure-step search methods"""
    RL_CONFIGURATOR = "rl-configurator"
    LSNET = "lsnet"
    RANDOMCONF_BEST = "randomconf-best"


class ExperimentKind(StrEnum):
    """Enum for the rows of a comparison table"""
    CC = "cc"
    GA_JOINT = "ga-joint"
    LS_NET = "ls-net"
    RANDOMCONF = "randomconf"


class ExperimentSpec(BaseModel):
    """One comparison row"""
    model_config = ConfigDict(frozen=True)

    kind: ExperimentKind
    cheap: Optional[AlgorithmSpec] = None
    star: Optional[AlgorithmSpec] = None
    method: ConfigureMethod = ConfigureMethod.RL_CONFIGURATOR
    budget: Optional[int] = Field(default=None, ge=1)
    name: Optional[str] = None

    @property
    def label(self) -> str:
        if self.name:
            return self.name
        star = self.star.label if self.star else "OR(I)"
        if self.kind == ExperimentKind.CC:
            cheap = self.cheap.label if self.cheap else "Heur"
            return f"CC-{cheap}-{star}"
        if self.kind == ExperimentKind.GA_JOINT:
            return "GA joint"
        if self.kind == ExperimentKind.LS_NET:
            return f"LS-NET-{star}"
        return f"RandomConf-{star}"


class Provenance(BaseModel):
    pipeline_seeds: List[int]
    eval_seeds: List[List[int]]
    configure_method: str
    budget: int
    walltime_s: float = 0.0


class CCResult(BaseModel):
    """Outcome of one pipeline row: configuration, conquer algorithm and fulfillment CI"""
    label: str
    configuration: FleetConfiguration
    configurations: List[FleetConfiguration] = []
    star: Optional[AlgorithmSpec] = None
    per_seed: List[float]
    mean: float
    ci95: float
    provenance: Provenance

    @computed_field
    @property
    def seeds(self) -> int:
        return len(self.per_seed)


class CompareReport(BaseModel):
    results: List[CCResult]
    best_index: int
    text: str
