"""Exception types shared across the package."""


class StepwiseError(Exception):
    """Base class for all package errors."""


class InvalidConfig(StepwiseError, ValueError):
    """A driver or study configuration violates its invariants."""


class SingularSystem(StepwiseError, ArithmeticError):
    """Elimination hit an effectively zero pivot."""


class InvalidStep(StepwiseError, ValueError):
    """A switched-capacitor step was requested with non-physical parameters."""


class SimulationError(StepwiseError, RuntimeError):
    """The simulator produced an internally inconsistent result."""


class NotConverged(StepwiseError, RuntimeError):
    """Cycle iteration hit ``max_cycles`` before reaching steady state.

    The partial :class:`~stepwise_driver.simulator.SteadyStateResult` is kept
    on ``result`` so callers can still inspect or report it.
    """

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class AllCandidatesInvalid(StepwiseError, RuntimeError):
    """Every point of an optimization grid failed to evaluate."""
