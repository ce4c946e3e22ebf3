"""Exception types raised across the simulator."""


class MRBotError(Exception):
    """Base class for every error raised by mrbotsim."""


class InvalidValue(MRBotError, ValueError):
    pass


class InvalidKnots(InvalidValue):
    pass


class InsufficientData(InvalidValue):
    pass


class OutOfDomain(InvalidValue):
    pass


class DegenerateTangent(InvalidValue):
    pass


class InvalidStep(InvalidValue):
    pass


class InvalidPath(InvalidValue):
    pass


class InvalidVessel(InvalidValue):
    pass


class InvalidMoment(InvalidValue):
    pass


class InvalidRiseTime(InvalidValue):
    pass


class InvalidSeries(InvalidValue):
    pass


class ImpossibleGeometry(InvalidValue):
    pass


class ConfigError(MRBotError):
    """Scenario configuration could not be loaded or failed validation."""


class NumericalDivergence(MRBotError, ArithmeticError):
    """Non-finite state during integration.

    ``telemetry`` holds the records produced before the failing step so
    callers can still flush them to disk.
    """

    def __init__(self, message, telemetry=None, step=None):
        super().__init__(message)
        self.telemetry = telemetry
        self.step = step


class BatchError(MRBotError):
    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class WriteError(MRBotError, OSError):
    pass


class PlotError(MRBotError):
    pass
