"""Exception types raised by the toolkit.

Every error carries a short ``code`` string; the batch harness writes it into
the ``error`` column so failures are greppable without parsing messages.
"""


class EvalError(ValueError):
    code = "error"

    def __str__(self):
        msg = super().__str__()
        return f"{self.code}: {msg}" if msg else self.code


class MalformedContainerError(EvalError):
    code = "malformed-container"


class UnsupportedEncodingError(EvalError):
    code = "unsupported-encoding"


class MultichannelAudioError(EvalError):
    code = "multichannel-audio"


class InvalidBandError(EvalError):
    code = "invalid-band"


class OrderTooLargeError(EvalError):
    code = "order-too-large"


class LagOutOfRangeError(EvalError):
    code = "lag-out-of-range"


class OrderMismatchError(EvalError):
    code = "order-mismatch"


class EmptyOverlapError(EvalError):
    code = "empty-overlap"


class SampleRateMismatchError(EvalError):
    code = "sample-rate-mismatch"


class DimensionMismatchError(EvalError):
    code = "dimension-mismatch"


class EmptySourceError(EvalError):
    code = "empty-source"


class ProbabilityRangeError(EvalError):
    code = "out-of-range-probability"


class MalformedMatrixError(EvalError):
    code = "malformed-matrix"


class TooFewRowsError(EvalError):
    code = "too-few-rows"


class ConfigError(EvalError):
    code = "invalid-config"


class ManifestError(EvalError):
    """Manifest-level failure; aborts a batch run.

    ``line`` is the 1-based line number when the failure is tied to one line.
    """

    code = "manifest-error"

    def __init__(self, message, line=None, code=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
        if code is not None:
            self.code = code
