"""Exception types shared across the package."""


class FieldPlanError(Exception):
    """Base class for all errors raised by this package."""


class MapParseError(FieldPlanError):
    """Raised when a map file cannot be parsed; message names the offending
    byte offset or line."""


class ConstraintError(FieldPlanError):
    """Raised when a parameter violates its domain constraint."""


class AssumptionViolation(FieldPlanError):
    """Raised when a goal cell falls inside the buffer or an obstacle."""


class OutOfBoundsError(FieldPlanError):
    """Raised when a queried position lies outside the workspace."""
