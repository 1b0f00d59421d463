"""Exception hierarchy shared by all modules."""

from __future__ import annotations


class RobRegretError(Exception):
    """Base class for every error raised by this package."""


class DimensionMismatch(RobRegretError, ValueError):
    pass


class SingularAtFrequency(RobRegretError, ArithmeticError):
    """``e^{j theta} I - A`` is singular: a pole sits on the unit circle."""


class UnstableSystem(RobRegretError):
    pass


class UnstableClosedLoop(UnstableSystem):
    pass


class IllPosedInterconnection(RobRegretError):
    pass


class NonConvergedTail(RobRegretError):
    pass


class NoStabilizingSolution(RobRegretError):
    pass


class SingularClosedLoop(RobRegretError):
    pass


class AssumptionViolated(RobRegretError):
    """A standing assumption of a construction fails; the message names it."""


class StabilizabilityViolated(AssumptionViolated):
    pass


class FactorizationDiverged(RobRegretError):
    pass


class NoninvertibleFactor(RobRegretError):
    pass


class NominalInfeasible(RobRegretError):
    pass


class UpperBoundInfeasible(RobRegretError):
    pass


class DiagnosticsError(RobRegretError):
    """A computed quantity violates a property that must hold by theory."""


class VertexError(RobRegretError):
    """Wraps a failure at one sample of the uncertainty set."""

    def __init__(self, vertex, cause: Exception):
        self.vertex = vertex
        self.cause = cause
        super().__init__(f"at uncertainty vertex {vertex}: {type(cause).__name__}: {cause}")


class ConfigParseError(RobRegretError, ValueError):
    def __init__(self, message: str, field: str | None = None, line: int | None = None):
        self.field = field
        self.line = line
        where = []
        if field is not None:
            where.append(f"field '{field}'")
        if line is not None:
            where.append(f"line {line}")
        prefix = f"[{', '.join(where)}] " if where else ""
        super().__init__(prefix + message)
