"""Exception hierarchy shared by every bellkit module."""


class BellkitError(ValueError):
    """Base class for all bellkit errors."""


class DimensionMismatch(BellkitError):
    pass


class NotUnitary(BellkitError):
    pass


class NotDthRoot(BellkitError):
    pass


class NotBinaryObservable(BellkitError):
    pass


class NotDValuedObservable(BellkitError):
    pass


class InvalidState(BellkitError):
    pass


class InvalidMeasurement(BellkitError):
    pass


class ScenarioMismatch(BellkitError):
    pass


class SignalingDetected(BellkitError):
    pass


class NonHermitianValue(BellkitError):
    pass


class TooLarge(BellkitError):
    pass


class OutOfRange(BellkitError):
    pass


class NotSelfAdjoint(BellkitError):
    pass


class NotMaximal(BellkitError):
    pass


class SupportMismatch(BellkitError):
    pass


class NoConvergence(BellkitError):
    pass


class UnknownCommand(BellkitError):
    pass


class InvalidParameter(BellkitError):
    """A CLI/config parameter violates a precondition.

    ``field`` names the offending parameter and ``constraint`` states the rule.
    """

    def __init__(self, field, constraint):
        self.field = field
        self.constraint = constraint
        super().__init__(f"invalid parameter {field!r}: {constraint}")
