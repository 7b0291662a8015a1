"""Exception hierarchy.

``DomainError`` covers invalid inputs (CLI exit code 2); the numerical
errors map to exit code 3.
"""


class SpectralError(Exception):
    """Base class for every error raised by this package."""


class DomainError(SpectralError, ValueError):
    """An argument lies outside the domain of an operation."""


class NumericalError(SpectralError):
    """A computation could not be carried out reliably in floating point."""


class ConvergenceError(NumericalError):
    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class PoleError(NumericalError):
    def __init__(self, message, atom=None):
        super().__init__(message)
        self.atom = atom


class SingularDecouplingError(NumericalError):
    """The boundary replacement ``x = (1 + conj(a)) / (1 + a)`` is undefined."""


class UnboundedPreimageError(NumericalError):
    """A unitary with eigenvalue 1 has no bounded inverse Cayley transform."""


class AmbiguousMatchError(NumericalError):
    """Atom matching is ambiguous at the requested tolerance."""
