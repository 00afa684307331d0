"""Exception types shared across the toolkit."""


class DclinkError(Exception):
    """Base class for all toolkit errors."""


class AlgebraicLoop(DclinkError):
    """Feedback interconnection 1 + g*h is identically zero."""


class PoleOnGrid(DclinkError):
    """Frequency-response evaluation hit a pole of the system."""


class ImproperSystem(DclinkError):
    """Numerator degree exceeds denominator degree."""


class Unstable(DclinkError):
    """Operation requires a stable system."""


class OrderTooLarge(DclinkError):
    """Requested reduced order exceeds the state dimension."""


class ClosureMismatch(DclinkError):
    """Closed inner loop deviates from the designed shaped plant."""


class UnstableLoop(DclinkError):
    """Outer-loop interconnection has closed-loop poles in the RHP."""


class ShareSumViolation(DclinkError):
    """Sharing coefficients do not sum to one."""


class VoltageNearZero(DclinkError):
    """DC-link voltage too small for duty-cycle division."""


class NumericalBlowup(DclinkError):
    """Simulation state diverged or became non-finite."""


class ConfigError(DclinkError):
    """Invalid simulation configuration."""


class WindowTooShort(DclinkError):
    """Metrics window does not cover a full load-square period."""


class ParseError(DclinkError):
    """Scenario file could not be parsed."""


class ValidationError(DclinkError):
    """Scenario contents violate a model invariant."""
