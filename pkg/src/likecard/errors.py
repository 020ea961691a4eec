"""Exception types shared across the package.

Kept in one place so modules can raise each other's error categories
without import cycles.
"""

from __future__ import annotations


class LikecardError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(LikecardError, ValueError):
    """Invalid build or query parameters."""


class DatasetError(LikecardError, ValueError):
    """A dataset or catalog does not satisfy a precondition."""


class InfeasibleError(LikecardError, ValueError):
    """The requested empty-answer probability cannot be met."""


class GenerationError(LikecardError, RuntimeError):
    """Workload generation exhausted its sampling budget."""


class TrieError(LikecardError, ValueError):
    """Base for compact trie construction failures."""


class TrieBucketRangeError(TrieError):
    """A bucket id does not fit the 4-bit offset field: tree threshold too low."""


class TrieSizeError(TrieError):
    """Node count exceeds the 16-bit index space: tree too large."""


class LongQueryError(LikecardError, ValueError):
    """Query body exceeds the indexed length and no chain model is available."""


class ModelFormatError(LikecardError, ValueError):
    """Base for model deserialization failures."""


class BadMagicError(ModelFormatError):
    """The file does not start with the model magic."""


class UnsupportedVersionError(ModelFormatError):
    """The file declares a format version this build cannot read."""


class TruncatedModelError(ModelFormatError):
    """The file ends before the declared structures are complete."""


class ChecksumError(ModelFormatError):
    """The trailing checksum does not match the file contents."""
