"""Exception types shared across the package."""


class StreamPartError(Exception):
    """Base class for all package errors."""


class ConfigError(StreamPartError, ValueError):
    """Invalid parameters or configuration."""


class InputDataError(StreamPartError):
    """Input files that cannot be decoded."""


class EdgeFormatError(InputDataError):
    pass


class UnknownNodeError(InputDataError, KeyError):
    """A node id that is missing from a degree table or home map."""

    def __str__(self):
        return Exception.__str__(self)


class CorruptArtifactError(InputDataError):
    """On-disk partition artifact disagrees with its manifest."""


class InvariantError(StreamPartError, AssertionError):
    """An internal consistency check failed."""
