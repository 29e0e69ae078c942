"""Exception types raised across the package."""


class ParameterError(ValueError):
    """A numeric parameter lies outside its admissible domain."""


class DimensionError(ValueError):
    """Array sizes are inconsistent with each other or too small."""


class DegenerateSignalError(ValueError):
    """The input signal carries no scale information (e.g. all zeros)."""


class InitializationError(RuntimeError):
    """A sampler or solver could not be started from the given state."""


class EmptyChainError(ValueError):
    """No retained samples are available for an estimate."""


class DivergenceError(RuntimeError):
    """An iterative solver produced a non-finite objective.

    The objective history up to the failure is kept on ``trace``.
    """

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = list(trace) if trace is not None else []
