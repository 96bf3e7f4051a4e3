"""Exception types raised across the package."""


class DDSenseError(ValueError):
    """Base class for all input/contract violations."""


class NonHermitianInput(DDSenseError):
    pass


class DimensionTooLarge(DDSenseError):
    pass


class DimensionMismatch(DDSenseError):
    pass


class NotUnitary(DDSenseError):
    pass


class NotUnitaryTarget(NotUnitary):
    pass


class InvalidDensityMatrix(DDSenseError):
    pass


class UnnormalizedChannel(DDSenseError):
    pass


class UnphysicalChannel(DDSenseError):
    pass


class EmptySequence(DDSenseError):
    pass


class DegenerateOperation(DDSenseError):
    """F_QS is too small for the sensitivity relation to be meaningful."""


class IncompleteRecordSet(DDSenseError):
    pass


class DuplicateRecord(DDSenseError):
    pass


class ZeroTrace(DDSenseError):
    pass


class NoImprovement(DDSenseError):
    """The optimizer could not find any improving step from the initial pulse."""

    def __init__(self, msg, seq=None, history=None):
        super().__init__(msg)
        self.seq = seq
        self.history = history


class SlopeTooSmall(DDSenseError):
    """Signal response to the field is buried in shot noise."""


class FitDidNotConverge(DDSenseError):
    def __init__(self, msg, data=None):
        super().__init__(msg)
        self.data = data


class ConfigError(DDSenseError):
    pass
