"""Exception types shared across the package."""


class DagoptError(Exception):
    """Base class for all package-specific errors."""


# network
class DisconnectedTopology(DagoptError):
    pass


class SpectralViolation(DagoptError):
    pass


class InfeasibleDegree(DagoptError):
    pass


# problems
class InfeasibleSpec(DagoptError):
    pass


class InfeasibleBudget(DagoptError):
    pass


class PointTooCloseToBoundary(DagoptError):
    pass


class NoConvergence(DagoptError):
    """Oracle hit max_iters; the (flagged) result is attached as .solution."""

    def __init__(self, message, solution=None):
        super().__init__(message)
        self.solution = solution


# engine
class DimensionMismatch(DagoptError):
    pass


class NonFiniteState(DagoptError):
    """Raised only when callers opt into strict mode; normally the run is
    flagged divergent and continues to completion of the log."""


# privacy
class DenominatorNonpositive(DagoptError):
    pass


class InvalidW(DagoptError):
    pass


class RegimeViolation(DagoptError):
    pass


# harness
class ConfigError(DagoptError):
    pass
