"""Exception types shared by all modules."""


class ReliaplaceError(Exception):
    """Base class for errors raised by this package."""


class ResolutionError(ReliaplaceError, KeyError):
    """An identifier (atom, node, SRNG event, link) does not resolve."""

    def __str__(self):
        return Exception.__str__(self)


class SizeError(ReliaplaceError, ValueError):
    """Instance exceeds the size an exhaustive method is willing to handle."""


class SchemaError(ReliaplaceError, ValueError):
    """A document does not match its schema.

    ``path`` is a JSONPath-like pointer to the offending field, e.g.
    ``$.nodes[2].availability``.
    """

    def __init__(self, path, message):
        self.path = path
        self.message = message
        super().__init__(f"{path}: {message}")


class SoundnessError(ReliaplaceError, AssertionError):
    """A solver returned an accepted result that fails re-verification."""
