"""Exception types shared across the package."""


class CellresError(Exception):
    """Base class for all errors raised by cellres operations."""


class CatalogueError(CellresError):
    """Unknown catalogue entry name."""


class ValidationError(CellresError):
    """Invalid argument outside an operation's documented range."""


class ConditioningError(CellresError):
    """A linear system is too ill-conditioned to trust."""


class NumericalIntegrityError(CellresError):
    """A computed quantity violates a structural guarantee (e.g. positivity)."""


class ConvergenceConditionError(CellresError):
    """The geometric-series expansion is outside its convergence region."""


class NonConvergenceError(CellresError):
    """Iterative solver hit the iteration cap before reaching tolerance."""

    def __init__(self, message: str, residual_history=None):
        super().__init__(message)
        self.residual_history = list(residual_history or [])


class CoverageError(CellresError):
    """Stored curve samples do not cover the requested averaging window."""


class InsufficientDataError(CellresError):
    """Too few usable samples for a fit."""


class ConfigError(CellresError):
    """Malformed configuration file or unknown configuration key."""
