"""Exception types raised across the calibration pipeline."""


class CalibError(Exception):
    """Base class for every error raised by vpcalib."""


class DegenerateInput(CalibError, ValueError):
    pass


class AmbiguousEigenspace(UserWarning):
    """Top two eigenvalues coincide; the returned eigenvector is one deterministic pick."""


class NoRealFocal(CalibError):
    """Two vanishing points admit no real focal length. Recoverable: skip the hypothesis."""


class ImageTooSmall(CalibError, ValueError):
    pass


class ParseError(CalibError, ValueError):
    def __init__(self, message, lineno=None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


class InsufficientLines(CalibError):
    pass


class SamplingExhausted(CalibError):
    pass


class AllScoresZero(CalibError):
    pass


class EmptySelection(CalibError):
    pass


class ShapeMismatch(CalibError, ValueError):
    pass


class NoLabeledCandidates(CalibError):
    pass


class NoHorizontals(CalibError):
    pass


class InsufficientHypotheses(CalibError):
    pass


class NoHypotheses(CalibError):
    pass


class EmptyLineMap(CalibError):
    pass


class HorizonParallelToBorder(CalibError):
    pass


class DegenerateScene(CalibError):
    pass


class EmptyInput(CalibError, ValueError):
    pass


class MissingGroundTruth(CalibError):
    pass
