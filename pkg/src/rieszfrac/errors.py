"""Exception and warning types shared across the package."""


class RieszFracError(Exception):
    """Base class for package errors."""


class DomainError(RieszFracError, ValueError):
    """Input lies outside the mathematical domain of an operation."""


class SingularConfigurationError(RieszFracError):
    """Two interacting points coincide, so the inverse-power kernel is infinite."""


class ResourceBudgetError(RieszFracError):
    """An enumeration or search would exceed the configured budget."""


class HypothesisError(RieszFracError):
    """The input does not satisfy a structural hypothesis the operation needs."""


class ClassificationError(RieszFracError):
    """A point could not be attributed to any cell of the subdivision."""


class UsageError(RieszFracError):
    """Malformed command line arguments or experiment configuration."""


class DegenerateFractalWarning(UserWarning):
    """Construction succeeded but the system is degenerate (single map, overlap, ...)."""


class SeparationWarning(UserWarning):
    """A positive separation could not be certified at the requested depth."""
