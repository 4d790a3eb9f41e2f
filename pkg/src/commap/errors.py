"""Exception hierarchy shared across the pipeline.

Exit-code mapping used by the CLI: UsageError -> 1, DataError -> 2,
NumericalError -> 3.
"""


class CommapError(Exception):
    """Base class for all commap errors."""


class UsageError(CommapError):
    """Invalid command-line usage or configuration."""


class DataError(CommapError):
    """Input data is missing, malformed or empty beyond recovery."""


class MissingArtifactError(DataError):
    """A pipeline stage requires an artifact an earlier stage did not write."""


class NumericalError(CommapError):
    """A numerical procedure failed (non-finite values, degenerate denominator)."""
