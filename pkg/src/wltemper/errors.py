"""Exception hierarchy shared across the package."""


class WlTemperError(Exception):
    """Base class for every error raised by this package."""


class ConstructionError(WlTemperError, ValueError):
    """A model, grid, schedule or config was built with invalid arguments."""


class DomainError(WlTemperError, ValueError):
    """An argument lies outside the domain of the operation."""


class EvaluationError(WlTemperError, ArithmeticError):
    """A model evaluated to a non-finite value where none is allowed."""


class DataFormatError(WlTemperError, ValueError):
    """A data or artifact file does not follow its schema."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class DegenerateWindowError(WlTemperError, ValueError):
    """Energy probing found no spread, so no energy window can be formed."""


class StallError(WlTemperError, RuntimeError):
    """Wang-Landau stage exceeded its step cap without a flat histogram."""

    def __init__(self, message, stalled_bins=(), never_visited=()):
        super().__init__(message)
        self.stalled_bins = list(stalled_bins)
        self.never_visited = list(never_visited)


class EmptySelectionError(WlTemperError, ValueError):
    """No energy bin passed the probability threshold."""


class GridMismatchError(WlTemperError, ValueError):
    """Two objects that must share an energy grid or binning do not."""


class ConfigError(WlTemperError, ValueError):
    """A run configuration is invalid or references missing files."""
