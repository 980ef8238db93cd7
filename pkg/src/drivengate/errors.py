"""Exception hierarchy shared by the library and the command-line driver."""


class DrivenGateError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(DrivenGateError, ValueError):
    """Malformed or incomplete experiment configuration."""


class ConstraintError(DrivenGateError, ValueError):
    """Physical parameters violate a commensurability or validity constraint."""


class NumericalGuardError(DrivenGateError, RuntimeError):
    """A numerical accuracy guard (truncation, time step, tolerance) tripped."""


class TruncationError(NumericalGuardError):
    """Fock-space truncation loses more probability than allowed."""


class TimeStepError(NumericalGuardError):
    """Propagation step too coarse for the noise correlation time."""
