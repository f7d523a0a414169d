"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain where a formula is defined."""


class InsufficientDataError(ValueError):
    """Too few states/bonds to evaluate a statistic."""


class DimensionError(ValueError):
    """Vectors of different dimension were mixed."""


class ConfigError(ValueError):
    """Invalid experiment configuration."""


class DivergenceError(FloatingPointError):
    """A learner produced a non-finite value."""


class DataFormatError(ValueError):
    """An input data file (e.g. a trajectory CSV) could not be parsed."""
