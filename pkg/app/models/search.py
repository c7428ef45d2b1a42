from enum import StrEnum
from typing import List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.models.configuration import FleetConfiguration


class AlgorithmTag(StrEnum):
    """Enum for policy-producing algorithms"""
    RAND = "rand"
    HEUR = "heur"
    OR = "or"
    ORI = "ori"
    NULL = "null"


ALGORITHM_LABELS = {
    AlgorithmTag.RAND: "Rand",
    AlgorithmTag.HEUR: "Heur",
    AlgorithmTag.OR: "OR",
    AlgorithmTag.ORI: "OR(I)",
    AlgorithmTag.NULL: "Null",
}


class AlgorithmSpec(BaseModel):
    """An algorithm choice plus its parameters; None falls back to the settings"""
    model_config = ConfigDict(frozen=True)

    tag: AlgorithmTag
    noise_level: Optional[float] = Field(default=None, ge=0.0, lt=1.0)
    window: Optional[int] = Field(default=None, ge=1)
    plan_horizon: Optional[int] = Field(default=None, ge=1)
    heuristic_threshold: Optional[float] = Field(default=None, ge=0.0)

    @property
    def label(self) -> str:
        return ALGORITHM_LABELS[self.tag]

    @model_validator(mode="after")
    def validate_window(self) -> "AlgorithmSpec":
        if self.window is not None and self.plan_horizon is not None and self.window > self.plan_horizon:
            raise ValueError(f"window {self.window} exceeds plan_horizon {self.plan_horizon}")
        return self


class GAParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    population: int = Field(default=20, ge=2)
    generations: int = Field(default=50, ge=0)
    tournament: int = Field(default=3, ge=1)
    crossover_rate: float = Field(default=0.9, ge=0.0, le=1.0)
    mutation_rate: float = Field(default=0.1, ge=0.0, le=1.0)
    elitism: int = Field(default=2, ge=0)
    seed: int = 0

    @model_validator(mode="after")
    def validate_elitism(self) -> "GAParams":
        if self.elitism > self.population:
            raise ValueError(f"elitism {self.elitism} exceeds population {self.population}")
        return self


class GenerationStats(BaseModel):
    generation: int
    best: float
    mean: float


class MatrixPolicySpec(BaseModel):
    """
    Action matrix of the joint GA genome.

    Row i belongs to vessel_ids[i]; cell j is that vessel's j-th action as a
    fraction in [-1, 1] of the feasible range (positive loads, negative discharges).
    """
    model_config = ConfigDict(frozen=True)

    vessel_ids: Tuple[str, ...]
    matrix: Tuple[Tuple[float, ...], ...]
    configuration: Optional[FleetConfiguration] = None

    @model_validator(mode="after")
    def validate_shape(self) -> "MatrixPolicySpec":
        if len(self.matrix) != len(self.vessel_ids):
            raise ValueError(f"matrix has {len(self.matrix)} rows for {len(self.vessel_ids)} vessels")
        for row in self.matrix:
            if any(not -1.0 <= cell <= 1.0 for cell in row):
                raise ValueError("matrix cells must lie in [-1, 1]")
        return self


class SearchResult(BaseModel):
    best_configuration: FleetConfiguration
    best_fitness: float
    history: List[GenerationStats] = []
    evaluations: int = 0
    cache_hits: int = 0
    matrix_policy: Optional[MatrixPolicySpec] = None
