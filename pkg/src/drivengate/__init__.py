"""Simulation of driven single-sideband two-qubit gates for trapped ions."""

from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("artifact")
except PackageNotFoundError:
    __version__ = "0+unknown"

from .analysis import BellTarget, bell_fidelity, bell_state, product_state
from .errors import (
    ConfigError,
    ConstraintError,
    DrivenGateError,
    NumericalGuardError,
    TimeStepError,
    TruncationError,
)
from .params import GateParams, TrapSpec, resolve_double_drive, resolve_single_drive
from .qcore import HilbertLayout, State

__all__ = [
    "BellTarget",
    "ConfigError",
    "ConstraintError",
    "DrivenGateError",
    "GateParams",
    "HilbertLayout",
    "NumericalGuardError",
    "State",
    "TimeStepError",
    "TrapSpec",
    "TruncationError",
    "bell_fidelity",
    "bell_state",
    "product_state",
    "resolve_double_drive",
    "resolve_single_drive",
]
