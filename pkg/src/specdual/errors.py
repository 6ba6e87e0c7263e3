"""Exception hierarchy shared by all specdual modules."""


class SpecDualError(Exception):
    """Base class for all errors raised by specdual."""


class ParameterError(SpecDualError):
    """Invalid user-supplied parameter (sizes, counts, ranges)."""


class StructuralError(SpecDualError):
    """Malformed data structure (shape/grid mismatch)."""


class DomainError(SpecDualError):
    """Mathematical precondition violated (non-PD matrix, infeasible point)."""


class NumericalConsistencyError(SpecDualError):
    """A result that should be real/symmetric/nonnegative drifted past tolerance."""


class DataError(SpecDualError):
    """A data-dependent failure (e.g. non-positive correlogram)."""


class FactorizationError(SpecDualError):
    """Spectral factorization did not reproduce its input accurately enough."""


class ConfigError(SpecDualError):
    """Invalid CLI configuration file."""


class NegativeClampWarning(UserWarning):
    """A divergence evaluated to a tiny negative value and was clamped to zero."""
