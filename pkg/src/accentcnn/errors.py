"""Exception taxonomy for the pipeline.

Every failure mode the library can report has a named class here so the CLI
can emit a stable, greppable error code (the class name) without string
matching on messages.
"""


class PipelineError(Exception):
    """Base class for all errors raised by this package."""

    @property
    def code(self) -> str:
        return type(self).__name__


# WAV / audio decoding
class MalformedHeader(PipelineError):
    pass


class UnsupportedEncoding(PipelineError):
    pass


class ClipTooShort(PipelineError):
    pass


# Numeric kernels
class LengthNotPowerOfTwo(PipelineError):
    pass


class ShapeMismatch(PipelineError):
    pass


class NonFiniteGradient(PipelineError):
    pass


# Model / classification
class LabelOutOfRange(PipelineError):
    pass


class EmptySegmentList(PipelineError):
    pass


# Parameter and store files
class IoFailure(PipelineError):
    pass


class FormatVersionMismatch(PipelineError):
    pass


class ConfigMismatch(PipelineError):
    pass


# Manifest / corpus handling
class MissingFile(PipelineError):
    pass


class BadHeader(PipelineError):
    pass


class UnknownLabel(PipelineError):
    pass


class DuplicatePath(PipelineError):
    pass


class TooFewSpeakers(PipelineError):
    pass


class EmptyStore(PipelineError):
    pass


# Metrics
class IndexOutOfRange(PipelineError):
    pass


class EmptyMatrix(PipelineError):
    pass


class EmptyColumn(PipelineError):
    pass
