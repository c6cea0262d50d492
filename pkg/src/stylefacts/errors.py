"""Exception hierarchy shared by every analysis stage."""


class StylefactsError(Exception):
    """Base class for all library errors."""


class DomainError(StylefactsError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class InsufficientDataError(StylefactsError, ValueError):
    """Too few observations for the requested statistic."""


class DegenerateSeriesError(StylefactsError, ValueError):
    """The series has zero variance, so standardized moments are undefined."""


class EstimationError(StylefactsError, RuntimeError):
    """Optimisation failed to produce a usable estimate.

    Attributes
    ----------
    diagnostics : dict
        Per-start information collected before giving up.
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class IngestError(StylefactsError):
    """Input file could not be turned into a valid price series."""

    def __init__(self, message, row=None):
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)
        self.row = row
