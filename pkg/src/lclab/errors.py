"""Exception hierarchy for lclab.

Parse/ingest failures each get their own class so callers can tell a bad
file apart from a bad configuration without string-matching messages.
"""


class LclabError(Exception):
    """Base class for all lclab errors."""


class DimensionError(LclabError, ValueError):
    """Operand shapes are incompatible."""


class ConfigurationError(LclabError, ValueError):
    """Invalid configuration or spec parameters."""


class ContextLengthError(LclabError, ValueError):
    """Input sequence exceeds the model's maximum context."""


class CheckpointError(LclabError, ValueError):
    """Base class for checkpoint file problems."""


class BadMagicError(CheckpointError):
    """File does not start with the expected magic bytes."""


class VersionError(CheckpointError):
    """Unsupported checkpoint format version."""


class TruncatedFileError(CheckpointError):
    """File ends before the declared data does."""


class LayoutError(CheckpointError):
    """Tensor directory is inconsistent (shapes, offsets, duplicates)."""


class IngestionError(LclabError, ValueError):
    """Token file contains ids outside the model vocabulary."""


class InputError(LclabError, ValueError):
    """Numeric input violates a precondition (non-finite, unnormalized)."""


class EmptyEvaluationError(LclabError, RuntimeError):
    """Every evaluation sample was skipped; nothing to aggregate."""


class InvariantError(LclabError, RuntimeError):
    """An internal consistency check failed."""
