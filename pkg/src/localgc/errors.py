"""Exception hierarchy shared by all modules."""


class LocalGCError(Exception):
    """Base class for every error raised by the package."""


class DomainError(LocalGCError, ValueError):
    """An argument lies outside the domain of the operation."""


class DimensionError(LocalGCError, ValueError):
    """Array shapes or model dimensions are incompatible."""


class SingularMatrix(LocalGCError, ArithmeticError):
    """A matrix that must be inverted is numerically singular."""


class NotPSD(LocalGCError, ArithmeticError):
    """A matrix expected to be positive semidefinite has a negative eigenvalue."""


class NonHermitianResidual(LocalGCError, ArithmeticError):
    """The causality residual matrix lost Hermitian symmetry beyond float noise."""


class NotConverged(LocalGCError, RuntimeError):
    """The optimizer stopped without meeting its convergence criteria."""

    def __init__(self, message, fit=None):
        super().__init__(message)
        self.fit = fit


class ZeroGradient(LocalGCError, ArithmeticError):
    """The GC gradient vanishes, so the Wald statistic is undefined."""


class ParseError(LocalGCError, ValueError):
    """A CSV cell could not be parsed as a finite float."""

    def __init__(self, message, row=None, col=None):
        super().__init__(message)
        self.row = row
        self.col = col


class RaggedRows(LocalGCError, ValueError):
    """CSV rows have differing numbers of fields."""


class EmptyFile(LocalGCError, ValueError):
    """The CSV file contains no observations."""
