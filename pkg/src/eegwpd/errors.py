"""Exception hierarchy shared across the toolkit.

Everything data-related derives from EegwpdError so callers (and the CLI)
can distinguish bad input from genuine bugs.
"""


class EegwpdError(Exception):
    """Base class for all data and format errors raised by this package."""


# signal ingestion
class MalformedHeader(EegwpdError):
    pass


class TruncatedData(EegwpdError):
    pass


class NonFiniteSample(EegwpdError):
    pass


class RaggedRows(EegwpdError):
    pass


class NonNumericCell(EegwpdError):
    pass


class DurationTooShort(EegwpdError):
    pass


# preprocessing
class MissingChannel(EegwpdError):
    def __init__(self, channel: str):
        super().__init__(f"required channel {channel!r} not present")
        self.channel = channel


class UpsamplingRequested(EegwpdError):
    pass


class RecordingTooShort(EegwpdError):
    pass


# wavelet
class SignalTooShort(EegwpdError):
    pass


class LengthMismatch(EegwpdError):
    pass


# features
class EmptyInput(EegwpdError):
    pass


class WrongLength(EegwpdError):
    pass


class TooFewSegments(EegwpdError):
    pass


# gbdt
class EmptyMatrix(EegwpdError):
    pass


class SingleClassData(EegwpdError):
    pass


class ShapeMismatch(EegwpdError):
    pass


class InvalidFractions(EegwpdError):
    pass


class CorruptModelFile(EegwpdError):
    pass


class UnsupportedVersion(EegwpdError):
    pass


# evaluation
class UndefinedMetric(EegwpdError):
    pass
