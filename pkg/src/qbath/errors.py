"""Exception hierarchy shared by the library and the CLI.

The CLI maps :class:`DomainError` to exit code 3 and :class:`ResourceError`
to exit code 4.
"""


class QBathError(Exception):
    """Base class for all library errors."""


class DomainError(QBathError, ValueError):
    """An argument lies outside the domain where the quantity is defined."""

    def __init__(self, message, value=None):
        super().__init__(message)
        self.value = value


class OutOfScopeError(DomainError):
    """Negative inverse temperature, or an energy above the a priori mean."""


class UnreachableError(DomainError):
    """An energy that no finite non-negative beta produces."""


class InvalidProbeError(DomainError):
    """A completeness probe at or below the ground energy."""


class IncommensurateError(DomainError):
    """Atom energies do not sit on a common lattice."""


class WrongLawError(DomainError):
    """The estimator does not apply to the supplied energy law."""


class ResourceError(QBathError):
    """The requested computation exceeds a fixed work or stability bound."""
