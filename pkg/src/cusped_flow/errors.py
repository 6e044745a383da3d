"""Exception hierarchy shared by all modules."""


class CuspedFlowError(Exception):
    pass


# hyp_geometry
class DegenerateChord(CuspedFlowError):
    pass


class BaseMismatch(CuspedFlowError):
    pass


class InvalidTriangle(CuspedFlowError):
    pass


class NonTermination(CuspedFlowError):
    pass


# metric_engine
class OutsideChart(CuspedFlowError):
    pass


class StepUnderflow(CuspedFlowError):
    pass


class NoConvergence(CuspedFlowError):
    """Raised by the chord solver; carries the best iterate found."""

    def __init__(self, message, best=None, residual=None):
        super().__init__(message)
        self.best = best
        self.residual = residual


class CuspObstruction(CuspedFlowError):
    pass


# concatenation
class EndpointMismatch(CuspedFlowError):
    pass


class CuspMismatch(CuspedFlowError):
    pass


# shadowing
class ProjectionFailure(CuspedFlowError):
    pass


class DomainError(CuspedFlowError):
    pass


# dense_limit
class AngleBudgetInfeasible(CuspedFlowError):
    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class NotCauchy(CuspedFlowError):
    def __init__(self, message, gaps=None):
        super().__init__(message)
        self.gaps = gaps


# spectrum
class InsufficientData(CuspedFlowError):
    pass


# cli
class ConfigError(CuspedFlowError):
    pass


class ManifestMismatch(CuspedFlowError):
    pass
