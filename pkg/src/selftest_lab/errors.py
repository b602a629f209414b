"""Exception types shared across the package."""


class LabError(Exception):
    """Base class for all structured errors raised by this package."""


class DimensionMismatch(LabError):
    """Operator, state, or subsystem dimensions are inconsistent."""


class NotHermitian(LabError):
    """An operation requiring a Hermitian input received a non-Hermitian one."""


class InvalidState(LabError):
    """A vector or density operator fails the state invariants."""


class InvalidPovm(LabError):
    """A measurement family fails positivity or completeness."""


class InvalidStrategy(LabError):
    """A strategy fails validation beyond tolerance."""


class PureStateRequired(LabError):
    """The operation is defined for pure strategies only."""


class FullRankRequired(LabError):
    """The operation is defined for full-Schmidt-rank strategies only."""


class WitnessMismatch(LabError):
    """A dilation witness does not match the strategies structurally."""


class DegenerateTopEigenvalue(LabError):
    """The top eigenvalue has multiplicity > 1, so the overlap bound does not apply."""


class ParseError(LabError):
    """An input file is unreadable, malformed, or violates the schema."""
