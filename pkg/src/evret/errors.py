"""Exception types shared across the package.

Every error raised by library code derives from EvretError so callers
(CLI, HTTP layer) can map failures to exit codes / status codes in one place.
"""


class EvretError(Exception):
    """Base class for all library errors."""


# --- embedding / matrix construction ---

class ZeroRowError(EvretError):
    """A row marked as a real token has (near-)zero norm and cannot be normalized."""


class TooLongError(EvretError):
    """Token sequence exceeds the configured pad length."""


class EmptySequenceError(EvretError):
    """An operation received an empty token sequence."""


class DimMismatchError(EvretError):
    """Embedding dimensions of two operands disagree."""


class EmptyMaskError(EvretError):
    """A TokenMatrix with no real (masked-true) rows was passed to a scorer."""


# --- encoding ---

class EmptyItemError(EvretError):
    """A corpus item carries neither text nor visual vectors."""


# --- training ---

class BatchTooSmallError(EvretError):
    """Batch too small for the requested loss mode."""


class NonFiniteError(EvretError):
    """A score matrix or parameter update contained NaN/Inf."""


class InsufficientDataError(EvretError):
    """Not enough training pairs to form a single batch."""


# --- index / persistence ---

class DuplicateIdError(EvretError):
    """Two items share the same identifier."""


class BadMagicError(EvretError):
    """File does not start with the expected magic bytes."""


class VersionMismatchError(EvretError):
    """File format version is not supported."""


class CorruptLengthError(EvretError):
    """File is truncated or carries trailing/inconsistent payload lengths."""


# --- corpus ---

class CorpusParseError(EvretError):
    """A corpus line failed to parse; carries the 1-based line number."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class MissingModalitiesError(EvretError):
    """Item has neither text nor visual vectors; carries the item id."""

    def __init__(self, item_id: str):
        super().__init__(f"item {item_id!r} has neither text nor visual_vecs")
        self.item_id = item_id


# --- evaluation ---

class DuplicateInRankingError(EvretError):
    """A ranking contains the same document id twice."""


class EmptyRelevantError(EvretError):
    """Recall is undefined for an empty relevant set."""


class MissingArtifactsError(EvretError):
    """Evaluation was asked to run without the encoders/index it needs."""
