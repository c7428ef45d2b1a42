"""Exception types raised by the ECR engine."""


class InvalidInputError(ValueError):
    """A topology, configuration or parameter set failed validation."""


class EcrError(RuntimeError):
    """Base class for engine failures."""


class SimulationError(EcrError):
    """The simulator state would violate one of its invariants."""


class StaleDecisionError(SimulationError):
    """An action was submitted for a decision point that is not pending."""


class InfeasibleFlowError(EcrError):
    """The flow network cannot route all of its supply to the sink."""


class TrainingDivergedError(EcrError):
    """Configurator training produced a non-finite mean reward."""
