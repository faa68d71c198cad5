"""Exception hierarchy shared across the toolkit."""


class ToolkitError(Exception):
    """Base class for every error raised by this package."""


class InvalidArgumentError(ToolkitError):
    """An argument violates a documented precondition."""


class FrameCountMismatchError(ToolkitError):
    """A mask sequence does not have one entry per video frame."""


class DimensionMismatchError(ToolkitError):
    """Two masks (or a mask and its video) disagree on height/width."""


class EmptyListError(ToolkitError):
    """An operation requiring at least one element got an empty input."""


class RleError(ToolkitError):
    """Base class for run-length codec failures."""


class BadRunSumError(RleError):
    """Run lengths do not sum to height*width (or a run is negative)."""


class BadCompressedCharError(RleError):
    """A compressed counts string contains a character outside the codec alphabet."""


class MissingFileError(ToolkitError):
    """A required dataset file is absent."""


class SchemaError(ToolkitError):
    """A dataset file parses but violates the expected layout."""


class UnknownAnnotationIdError(ToolkitError):
    """An expression references an annotation id with no mask sequence."""


class UnknownVideoOrExpressionError(ToolkitError):
    """A (video, expression) pair is not present in the dataset."""


class SubsetCountMismatchError(ToolkitError):
    """Number of subset predictions differs from the sampling plan."""


class MissingSubsetError(ToolkitError):
    """A subset required by the plan has no prediction."""


class ProcessSpawnError(ToolkitError):
    """An external segmenter process could not be started."""


class ProtocolError(ToolkitError):
    """An external segmenter broke the wire protocol."""


class AdapterTimeoutError(ToolkitError):
    """An external segmenter did not answer within the deadline."""


class MissingPredictionError(ToolkitError):
    """Evaluation or packing found no prediction for an expected pair."""
