"""Exception types shared across the package."""


class BookalignError(Exception):
    """Base class for all errors raised by this package."""


class CorpusError(BookalignError):
    """Raised for unreadable or malformed corpus inputs."""


class PairRejected(BookalignError):
    """A book/summary pair failed an admission threshold.

    ``reason`` is one of ``"book_too_short"`` or ``"summary_too_short"``.
    """

    def __init__(self, reason, message):
        super().__init__(message)
        self.reason = reason


class InferenceError(BookalignError):
    """Raised when HMM inference encounters an impossible or invalid lattice."""


class LexiconError(BookalignError):
    """Raised for malformed thesaurus files."""


class ConfigError(BookalignError):
    """Raised for invalid run configuration."""
