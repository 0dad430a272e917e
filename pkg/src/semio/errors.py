"""Exception hierarchy shared by all pipeline stages."""


class SemioError(Exception):
    """Base class for every error raised by this package."""


class CatalogError(SemioError):
    """Invalid feature catalog: duplicate ids, bad counts, unknown styles."""


class FeatureNotFoundError(CatalogError):
    """Requested feature_id is not in the catalog."""


class ValidationError(SemioError):
    """Manifest or record failed schema/invariant validation."""


class ParameterError(SemioError):
    """Caller passed parameters outside an operation's precondition."""


class MediaError(SemioError):
    """Media file unreadable, malformed, or failed an integrity check."""


class ChecksumError(MediaError):
    """Sidecar body does not match its checksum header."""


class EnhancementError(SemioError):
    """A signal-enhancement step could not produce a usable output."""


class BackendError(SemioError):
    """A model backend failed after exhausting retries."""


class TransientBackendError(BackendError):
    """Retryable backend failure (timeout, 5xx, connection reset)."""


class ProtocolError(BackendError):
    """Backend replied, but the reply violates the wire contract."""


class AggregationError(SemioError):
    """Video-level aggregation called on an empty or mixed detection set."""


class EvaluationError(SemioError):
    """Metric computation or cross-validation precondition failed."""


class CalibrationError(EvaluationError):
    """Threshold calibration impossible (e.g. no positive labels)."""


class LeakageError(EvaluationError):
    """A patient appears on both sides of the same train/test split."""


class ComparisonError(EvaluationError):
    """Prompt-style comparison over mismatched scopes."""


class SummaryError(SemioError):
    """Faithfulness summary requested over an empty record set."""


class GenerationError(SemioError):
    """Fixture spec cannot be rendered (e.g. joints out of frame)."""


class PipelineError(SemioError):
    """A pipeline stage is missing inputs or left work incomplete."""


class ConfigError(SemioError):
    """Run configuration unusable: bad paths, bad values, bad backend ids."""
