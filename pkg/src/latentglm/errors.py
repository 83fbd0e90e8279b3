"""Exception types raised across the package."""

import numpy as np


class DomainError(ValueError):
    """An argument lies outside the domain of a family, process or function."""


class UnsupportedError(NotImplementedError):
    """A family/latent combination or operation that has no defined method."""


class ConvergenceError(RuntimeError):
    """An iterative routine stopped before meeting its tolerance.

    ``partial`` carries the last iterate (or partial integral value).
    """

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class RankDeficiencyError(np.linalg.LinAlgError):
    """Design or weighted design matrix without full column rank."""


class DataError(ValueError):
    """Observed values outside the support of the chosen family."""

    def __init__(self, message, indices=()):
        super().__init__(message)
        self.indices = list(indices)


class SchemaError(ValueError):
    """Input file is missing a required column."""


class ParseError(ValueError):
    """Malformed row in an input file."""

    def __init__(self, message, line=None):
        super().__init__(message)
        self.line = line


class ConfigError(ValueError):
    """Invalid pipeline configuration."""
