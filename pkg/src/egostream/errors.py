"""Exception hierarchy shared by every egostream module."""


class EgostreamError(Exception):
    """Base class for all errors raised by this package."""


class IoError(EgostreamError):
    """Underlying file could not be read or written."""


class MalformedManifest(EgostreamError):
    """Manifest document is missing fields or violates an invariant."""


class FormatMismatch(EgostreamError):
    """Stream file header disagrees with the manifest or the format spec."""


class TruncatedStream(EgostreamError):
    """Stream file ended in the middle of a record."""


class NonFiniteValue(EgostreamError):
    """A feature or logit component is NaN or infinite."""


class MalformedAnnotation(EgostreamError):
    """Annotation row violates a segment invariant."""


class DimensionMismatch(EgostreamError):
    """Vector dimensions do not match the stream's declared D or C."""


class NoPrediction(EgostreamError):
    """An empty aggregator was asked for an output."""


class InvalidConfig(EgostreamError):
    """A configuration document or parameter set failed validation."""


class AnnotationMissing(EgostreamError):
    """A protocol run needs labeled segments but the dataset has none."""
