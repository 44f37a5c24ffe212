"""Exception hierarchy shared by every stage of the simulation."""


class OptolatticeError(Exception):
    """Base class for all package errors."""


class InvalidParameterError(OptolatticeError, ValueError):
    """A parameter is outside its physical domain or a config key is unknown."""


class UnavailableParameterError(OptolatticeError):
    """A derived quantity needs an input that was not supplied."""


class NumericalError(OptolatticeError, RuntimeError):
    """Base class for numerical failures (exit code 3 on the CLI)."""


class IntegrationError(NumericalError):
    """The adaptive integrator could not advance.

    ``tau`` holds the time at which integration stopped.
    """

    def __init__(self, message, tau=None):
        super().__init__(message if tau is None else f"{message} (at tau={tau:.17g})")
        self.tau = tau


class CutoffError(NumericalError):
    """Requested filling cannot be reached with the Fock-space cutoff."""


class RangeError(NumericalError):
    """A lattice depth fell outside the tabulated Hubbard curve."""

    def __init__(self, message, tau=None):
        super().__init__(message if tau is None else f"{message} (at tau={tau:.17g})")
        self.tau = tau


class StageError(OptolatticeError):
    """Wraps an error raised inside a pipeline stage, tagging the stage name."""

    def __init__(self, stage, error):
        super().__init__(f"[{stage}] {error}")
        self.stage = stage
        self.error = error
