"""Exception types raised across the package."""


class GoursatError(Exception):
    """Base class for all errors raised by conegoursat."""


# conformal
class OnLightCone(GoursatError):
    pass


class OutOfDomain(GoursatError):
    pass


class NonPositiveOmega(GoursatError):
    pass


# nonlinearity
class ExponentUnderflow(GoursatError):
    pass


class EmptySpec(GoursatError):
    pass


class BadAlpha(GoursatError):
    pass


class BadOrder(GoursatError):
    pass


class DegenerateDirection(GoursatError):
    pass


class BadTarget(GoursatError):
    pass


# initial data
class IncompatibleData(GoursatError):
    pass


class BadWidth(GoursatError):
    pass


class UnboundedWeightedData(GoursatError):
    pass


# norms
class NonNegativeX(GoursatError):
    pass


class InsufficientSmoothness(GoursatError):
    pass


# solver
class NonFiniteValue(GoursatError):
    pass


class RhoFloor(GoursatError):
    pass


class ODEStepFailure(GoursatError):
    pass


class SolveFailure(GoursatError):
    """A Picard run that stopped without converging; ``report`` holds the history."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class NonContracting(SolveFailure):
    pass


class Diverged(SolveFailure):
    pass


class GateRefused(GoursatError):
    pass


class TooFewIterations(GoursatError):
    pass


# physical
class InsufficientRange(GoursatError):
    pass


class AllBelowFloor(GoursatError):
    pass


# configuration
class ConfigError(GoursatError):
    pass


class ParseError(ConfigError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class RangeError(ConfigError):
    def __init__(self, key, message):
        super().__init__(f"{key}: {message}")
        self.key = key
