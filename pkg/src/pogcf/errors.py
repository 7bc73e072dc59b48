"""Exception hierarchy for pogcf.

Every error raised by the library derives from PogcfError so callers
(and the CLI) can catch one base class.
"""


class PogcfError(Exception):
    """Base class for all pogcf errors."""


# behavior order ------------------------------------------------------------

class EmptyOrderError(PogcfError):
    """The level declaration contains no levels."""


class EmptyLevelError(PogcfError):
    """A level in the declaration contains no behavior names."""


class DuplicateBehaviorError(PogcfError):
    """A behavior name appears in more than one level (or twice in one)."""


class UnknownBehaviorError(PogcfError):
    """A combination references a behavior not present in the order."""


class EmptyUniverseError(PogcfError):
    """The combination universe passed to rank construction is empty."""


# graph building ------------------------------------------------------------

class IndexOutOfRangeError(PogcfError):
    """A user or item index falls outside the declared index space."""


class DuplicateBehaviorLogError(PogcfError):
    """Two interaction logs carry the same behavior name."""


class UnrankedCombinationError(PogcfError):
    """An observed behavior combination has no entry in the rank table."""


class AllFilteredError(PogcfError):
    """Min-interaction filtering removed every user or every item."""


class SnapshotFormatError(PogcfError):
    """A binary snapshot file has a bad magic value or version."""


# model ----------------------------------------------------------------------

class InvalidDimensionError(PogcfError):
    """Embedding table dimensions are not positive."""


class DimensionMismatchError(PogcfError):
    """Embeddings and graph (or checkpoint and dataset) disagree on shape."""


class NonFiniteValueError(PogcfError):
    """Propagation produced NaN or Inf entries."""


# training -------------------------------------------------------------------

class EmptyGraphError(PogcfError):
    """The training graph has no edges."""


class NoNegativeAvailableError(PogcfError):
    """A user has interacted with every item; no negative can be drawn."""


class NonFiniteLossError(PogcfError):
    """The loss evaluated to NaN or Inf."""


class DivergedError(PogcfError):
    """Training loss became non-finite; carries the last finite embeddings."""

    def __init__(self, message, last_model=None):
        super().__init__(message)
        self.last_model = last_model


# evaluation -----------------------------------------------------------------

class InvalidFractionError(PogcfError):
    """Holdout fraction outside (0, 1)."""


class MissingTimestampsError(PogcfError):
    """Temporal split requested but a log has no timestamps."""


# cli / io --------------------------------------------------------------------

class ParseError(PogcfError):
    """A dataset TSV line could not be parsed; carries the line number."""

    def __init__(self, path, line_no, message):
        super().__init__(f"{path}:{line_no}: {message}")
        self.path = path
        self.line_no = line_no


class ConfigError(PogcfError):
    """A run configuration value is missing or invalid."""


class GridTooLargeError(PogcfError):
    """A sweep grid exceeds the configured cell cap."""


class UnknownUserError(PogcfError):
    """A recommendation was requested for a user index outside the dataset."""
