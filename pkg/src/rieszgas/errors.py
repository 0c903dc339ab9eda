"""Exception hierarchy shared by all modules.

Each class carries the process exit code used by the command-line harness.
"""


class RieszError(Exception):
    exit_code = 3


class DomainError(RieszError, ValueError):
    """An argument lies outside the domain of a function or model."""

    exit_code = 2


class SingularityError(RieszError, ArithmeticError):
    """Evaluation at (or numerically at) a kernel singularity."""


class QuadratureError(RieszError):
    pass


class CalibrationError(RieszError):
    pass


class UnresolvedSingularityError(RieszError):
    """A sampled test-function carries too much spectral energy near Nyquist."""


class ResolutionError(RieszError):
    pass


class MismatchError(RieszError):
    """Two independent computation paths disagree beyond tolerance."""


class DegenerateSeriesError(RieszError):
    pass


class InsufficientESSError(RieszError):
    pass


class ConvergenceError(RieszError):
    pass


class StepRejectionError(RieszError):
    """MALA acceptance collapsed during adaptation."""


class ViolationError(RieszError):
    """A runtime-checked inequality failed."""

    exit_code = 1


class ConfigError(RieszError):
    exit_code = 2
