"""Exception types raised by boostesr."""


class BoostEsrError(Exception):
    """Base class for every error raised by this package."""


class InvalidParameterError(BoostEsrError, ValueError):
    pass


class InvalidDegradationError(BoostEsrError, ValueError):
    pass


class DiscontinuousConductionError(BoostEsrError):
    """Inductor current reached zero; only continuous conduction is modeled."""


class ConvergenceError(BoostEsrError):
    pass


class FrameParseError(BoostEsrError, ValueError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class SegmentationError(BoostEsrError):
    pass


class InsufficientResolutionError(SegmentationError):
    pass


class MalformedFrameError(SegmentationError):
    pass


class EstimationError(BoostEsrError):
    pass


class NoLoadError(EstimationError):
    pass


class CalibrationError(EstimationError):
    pass


class BatchError(EstimationError):
    def __init__(self, message, failed_indices=()):
        self.failed_indices = list(failed_indices)
        super().__init__(message)


class RegressionError(BoostEsrError, ValueError):
    pass


class NotCalibratedError(BoostEsrError):
    pass
