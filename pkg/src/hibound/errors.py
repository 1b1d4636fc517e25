"""Exception hierarchy shared across the package."""


class HiboundError(Exception):
    """Base class for all library errors."""


class FieldError(HiboundError):
    """Invalid grid data: bad dimensions, counts, or non-finite values."""


class DegenerateBoundError(HiboundError):
    """Error bound resolves to zero or is otherwise unusable."""


class ArchiveError(HiboundError):
    """Malformed, truncated, or corrupt archive bytes."""


class StageError(ArchiveError):
    """A lossless stage record failed to decode."""
