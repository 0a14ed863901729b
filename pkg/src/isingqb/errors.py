"""Exception types shared across the solvers."""

from __future__ import annotations


class InfeasibleError(ValueError):
    """No admissible control exists for the requested inputs.

    ``f_max`` carries the largest fidelity the feasibility bound allows, when
    one is known.
    """

    def __init__(self, message: str, f_max: float | None = None):
        super().__init__(message)
        self.f_max = f_max


class IndeterminateError(ArithmeticError):
    """A quantity is undefined at the given point (e.g. 0/0 at perfect matching)."""


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, best_residual: float, best_x=None):
        super().__init__(f"{message} (best residual {best_residual:.3e})")
        self.best_residual = best_residual
        self.best_x = best_x
