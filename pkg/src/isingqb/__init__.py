"""Time-optimal entangling gates on a controlled three-qubit Ising chain."""

from isingqb.errors import ConvergenceError, IndeterminateError, InfeasibleError
from isingqb.model import ControlConstants, Frame, GateKind, ModelParams, target

__all__ = [
    "ConvergenceError",
    "ControlConstants",
    "Frame",
    "GateKind",
    "IndeterminateError",
    "InfeasibleError",
    "ModelParams",
    "target",
]
