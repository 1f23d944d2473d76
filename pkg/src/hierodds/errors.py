"""Exception types shared across the package.

All errors raised by hierodds derive from :class:`HieroddsError` so callers
(and the CLI) can catch one base class. The concrete classes also inherit
``ValueError`` to stay friendly to generic handling.
"""


class HieroddsError(Exception):
    """Base class for all errors raised by this package."""


class StructureError(HieroddsError, ValueError):
    """A hierarchy or level container violates its structural contract."""


class ParameterError(HieroddsError, ValueError):
    """An argument is outside its documented domain."""


class DataError(HieroddsError, ValueError):
    """Input data (series, files, forecasts) is unusable."""


class UndefinedOddsError(DataError):
    """Odds are undefined: no smoothing and every other sibling is zero.

    Carries the offending series id and time index when known.
    """

    def __init__(self, message: str, series_id: str | None = None, t: int | None = None):
        super().__init__(message)
        self.series_id = series_id
        self.t = t


class UndefinedScoreError(DataError):
    """A score could not be computed because every point was excluded."""

    def __init__(self, message: str, n_excluded: int = 0):
        super().__init__(message)
        self.n_excluded = n_excluded
