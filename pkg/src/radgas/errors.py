"""Exception types shared across the solver and diagnostics."""


class ConfigError(ValueError):
    """Invalid configuration, scenario, or grid parameters."""


class PositivityError(RuntimeError):
    """A substep drove the specific volume or temperature below its floor."""


class ConvergenceError(RuntimeError):
    """The implicit heat solve failed to converge within the iteration cap."""


class BlowUpError(RuntimeError):
    """A step could not be completed even after repeated timestep halving."""


class SingularMatrixError(RuntimeError):
    """Tridiagonal elimination hit a vanishing pivot."""


class WindowOutOfDomain(ValueError):
    """A probe window does not fit inside the truncated domain."""


class InsufficientHistory(ValueError):
    """A time-series diagnostic needs more sampled states than supplied."""
