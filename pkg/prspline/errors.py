"""Exceptions raised by the spline library."""


class SplineError(ValueError):
    """Base class for all library errors."""


class DomainError(SplineError):
    """An argument lies outside the domain of the operation."""


class DimensionError(SplineError):
    """Array shapes do not agree."""


class NumericalError(SplineError):
    """A linear system could not be solved or no candidate fit was usable."""
