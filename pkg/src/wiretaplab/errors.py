"""Exception types shared across the package."""


class WiretapLabError(Exception):
    """Base class for all package errors."""


class InvalidOperator(WiretapLabError):
    """Matrix input is not a well-formed operator (non-finite, wrong rank, ...)."""


class NotPositive(WiretapLabError):
    """An operator required to be positive semidefinite is not, beyond tolerance."""


class ShapeError(WiretapLabError):
    """Dimensions do not match or do not factor as required."""


class FormatError(WiretapLabError):
    """A file could not be parsed; the message carries line/field context."""


class ValidationError(WiretapLabError):
    """Parsed data violates a structural invariant; the message names it."""


class DomainError(WiretapLabError):
    """A numeric argument lies outside the operation's domain."""


class NoFiniteValue(WiretapLabError):
    """No finite answer exists on the searched range.

    Carries the scanned grid and tail values in ``gammas`` / ``tails``.
    """

    def __init__(self, message, gammas=None, tails=None):
        super().__init__(message)
        self.gammas = gammas
        self.tails = tails


class DegenerateEpsilon(WiretapLabError):
    """The instance's smoothing mass is numerically zero and no floor was chosen."""


class EmptyBand(WiretapLabError):
    """A requested dyadic eigenvalue band contains no eigenvalues."""


class ExpurgationFailed(WiretapLabError):
    """No sampled codebook met the selection thresholds.

    Carries the per-trial statistics in ``report``.
    """

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class PreconditionError(WiretapLabError):
    """A stated precondition fails on the given inputs; the message reports it."""


class TooLarge(WiretapLabError):
    """The requested computation exceeds the configured size guard."""
