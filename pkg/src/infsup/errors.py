"""Exception hierarchy for the certification toolkit."""


class InfSupError(Exception):
    """Base class for all errors raised by :mod:`infsup`."""


class SingularMatrix(InfSupError):
    pass


class NotPositiveDefinite(InfSupError):
    pass


class IndefiniteRhs(NotPositiveDefinite):
    """Right-hand matrix of a symmetric pencil failed its Cholesky test."""


class ConvergenceFailure(InfSupError):
    pass


class DegenerateVector(InfSupError):
    """A vector has (numerically) zero norm where a nonzero one is required."""


class ControlPointDegenerate(InfSupError):
    """beta(mubar) is not positive or the natural-norm gram is not SPD."""


class EmptySample(InfSupError):
    pass


class CycleDetected(InfSupError):
    """The simplex iteration cap was exceeded (anti-cycling failed)."""


class LpInfeasible(InfSupError):
    """An LP that must be feasible by construction reported infeasibility."""


class NegativeRadicand(InfSupError):
    """The Q-hat upper-bound radicand is negative beyond roundoff."""


class NonpositiveUpperBound(InfSupError):
    pass


class NoProgress(InfSupError):
    """A subdomain covered no new train points."""


class RoundCapExceeded(InfSupError):
    """cNNSCM hit ``max_rounds`` without meeting the global tolerance.

    The registry and report of the unfinished run are attached so callers
    can still write artifacts.
    """

    def __init__(self, message, registry=None, report=None):
        super().__init__(message)
        self.registry = registry
        self.report = report


class TooLarge(InfSupError):
    """Oracle input exceeds its combinatorial guard."""


class ConfigError(InfSupError):
    """Invalid run configuration; ``field`` names the offending key."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field
