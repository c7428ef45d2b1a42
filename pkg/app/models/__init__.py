"""
Models package initialization.
Import order follows the dependencies between model files.
"""

# Import the public models to make them available when importing from app.models
from app.models.topology import Port, Route, VesselSpec, OrderPair, OrderModel, SailDays, Topology
from app.models.configuration import Assignment, FleetConfiguration
from app.models.validation import Severity, ValidationIssue, ValidationReport
from app.models.simulation import Observation, DecisionPoint, EpisodeEnd, RepositionAction, EpisodeMetrics, TraceRow
from app.models.planning import Forecast, PlanMove, Plan
from app.models.search import AlgorithmTag, AlgorithmSpec, GAParams, MatrixPolicySpec, SearchResult
from app.models.experiment import ConfigureMethod, ExperimentKind, ExperimentSpec, CCResult, CompareReport
from app.models.configurator import TrainIteration, TrainReport, ConfiguratorCheckpoint, ConfState
