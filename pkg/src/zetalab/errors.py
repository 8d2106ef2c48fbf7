"""Exception taxonomy shared by all modules.

Exit-code mapping used by the CLI: DomainError and its subclasses map to 2,
BudgetError/PrecisionError to 3, GeometryError and its subclasses to 4.
"""


class ZetalabError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(ZetalabError):
    """Invalid argument or violated precondition."""


class ConditioningError(DomainError):
    """Design matrix too ill-conditioned (samples clustered or collinear)."""


class ConventionError(DomainError):
    """Operation requires a different curve normalization convention."""


class CoverageError(DomainError):
    """Supplied table (zeros, curve) does not cover the requested range."""


class RangeError(DomainError):
    """Requested target lies outside the attained range."""

    def __init__(self, msg, attained=None):
        super().__init__(msg)
        self.attained = attained  # (min, max) actually reachable


class PrecisionError(ZetalabError):
    """Requested accuracy is not reachable with the given configuration."""

    def __init__(self, msg, achievable=None):
        super().__init__(msg)
        self.achievable = achievable


class BudgetError(ZetalabError):
    """Evaluation budget exhausted; carries the partial result if any."""

    def __init__(self, msg, partial=None, evaluations=None):
        super().__init__(msg)
        self.partial = partial
        self.evaluations = evaluations


class GeometryError(ZetalabError):
    """Expected geometric feature (sign change, crossing) not found."""

    def __init__(self, msg, samples=None):
        super().__init__(msg)
        self.samples = samples  # diagnostic (t, value) pairs


class NoBracketError(GeometryError):
    """Bracketing scan found no sign change; carries the scanned range."""

    def __init__(self, msg, scanned_range=None):
        super().__init__(msg, samples=None)
        self.scanned_range = scanned_range  # (min slope, max slope) seen


class MissedZeroError(GeometryError):
    """Zero count disagrees with the counting main term beyond the slack."""
