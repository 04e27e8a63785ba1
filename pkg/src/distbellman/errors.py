"""Exception types raised across the package."""


class DistBellmanError(Exception):
    """Base class for all package errors."""


class FormatError(DistBellmanError):
    """Malformed MDP, policy or reward-law input."""


class PolicyIncomplete(DistBellmanError):
    pass


class NotStochastic(DistBellmanError):
    pass


class WeightSumInvalid(DistBellmanError):
    pass


class LengthMismatch(DistBellmanError):
    pass


class GridMissing(DistBellmanError):
    pass


class NoFixedPoint(DistBellmanError):
    """The log-moment criterion fails on an essential state."""

    def __init__(self, message, offending_states=()):
        super().__init__(message)
        self.offending_states = list(offending_states)


class NotConverged(DistBellmanError):
    """Iteration budget exhausted before the gap tolerance was met.

    Carries the last iterate and its report so callers can still inspect them.
    """

    def __init__(self, message, result=None, report=None):
        super().__init__(message)
        self.result = result
        self.report = report


class UndefinedMean(DistBellmanError):
    pass


class InsufficientTailSamples(DistBellmanError):
    pass


class IncompatibleTailIndex(DistBellmanError):
    def __init__(self, message, state=None):
        super().__init__(message)
        self.state = state


class NoHeavyState(DistBellmanError):
    pass
