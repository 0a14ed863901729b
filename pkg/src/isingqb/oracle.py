"""Numeric time-ordered propagator, independent of the closed form.

Each step is the exponential of a Hermitian matrix, so the result is unitary
by construction. Two schemes are available:

* ``midpoint-exponential``: ``exp(-i h H(t + h/2))``, order 2.
* ``fourth-order-commutator-corrected``: two Gauss-Legendre samples plus the
  leading commutator correction, order 4.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from isingqb.operators import DIM, expm_hermitian, is_hermitian

HamiltonianFn = Callable[[np.ndarray], np.ndarray]


class Scheme(str, enum.Enum):
    MIDPOINT = "midpoint-exponential"
    MAGNUS4 = "fourth-order-commutator-corrected"

    @property
    def order(self) -> int:
        return 2 if self is Scheme.MIDPOINT else 4


@dataclass(frozen=True)
class IntegrationSpec:
    steps: int = 4096
    scheme: Scheme = Scheme.MIDPOINT
    tolerance: float = 1e-12  # Hermiticity tolerance for each sample

    def __post_init__(self):
        if int(self.steps) != self.steps or self.steps < 16:
            raise ValueError("steps must be an integer >= 16")
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        object.__setattr__(self, "scheme", Scheme(self.scheme))


def _sample(hamiltonian: HamiltonianFn, times: np.ndarray, atol: float) -> np.ndarray:
    try:
        hs = np.asarray(hamiltonian(times), dtype=complex)
    except (TypeError, ValueError):
        hs = None
    if hs is None or hs.shape != (len(times), DIM, DIM):
        hs = np.stack([np.asarray(hamiltonian(t), dtype=complex) for t in times])
    if not is_hermitian(hs, atol=atol):
        raise ValueError("Hamiltonian sample is not Hermitian")
    return hs


def _ordered_product(steps: np.ndarray) -> np.ndarray:
    """``steps[n-1] @ ... @ steps[0]`` by pairwise reduction."""
    while len(steps) > 1:
        if len(steps) % 2:
            steps = np.concatenate([steps, np.eye(DIM, dtype=complex)[None]])
        steps = steps[1::2] @ steps[0::2]
    return steps[0]


def propagate(hamiltonian: HamiltonianFn, tau_final: float, spec: IntegrationSpec = IntegrationSpec()) -> np.ndarray:
    """Time-ordered propagator ``U(tau_final)`` with ``U(0) = 1``.

    ``hamiltonian`` is called with a 1-D array of times and should return an
    array of shape ``(n, 8, 8)``; scalar-only callables also work, one
    sample at a time.
    """
    if not tau_final >= 0:
        raise ValueError("tau_final must be non-negative")
    if tau_final == 0:
        return np.eye(DIM, dtype=complex)
    n = int(spec.steps)
    h = tau_final / n
    starts = np.arange(n) * h
    if spec.scheme is Scheme.MIDPOINT:
        hs = _sample(hamiltonian, starts + 0.5 * h, spec.tolerance)
        gen = h * hs
    else:
        off = math.sqrt(3.0) / 6.0
        h1 = _sample(hamiltonian, starts + (0.5 - off) * h, spec.tolerance)
        h2 = _sample(hamiltonian, starts + (0.5 + off) * h, spec.tolerance)
        comm = h2 @ h1 - h1 @ h2
        gen = h * (0.5 * (h1 + h2) - 1j * (math.sqrt(3.0) / 12.0) * h * comm)
    return _ordered_product(expm_hermitian(gen))


def richardson_propagate(hamiltonian: HamiltonianFn, tau_final: float, spec: IntegrationSpec = IntegrationSpec()) -> np.ndarray:
    """Step-halving extrapolation of :func:`propagate`.

    Combines the runs at ``spec.steps`` and ``spec.steps // 2`` to cancel the
    leading error term of the scheme. The result is unitary to the size of
    the next error term, not exactly.
    """
    coarse = IntegrationSpec(steps=spec.steps // 2, scheme=spec.scheme, tolerance=spec.tolerance)
    u_fine = propagate(hamiltonian, tau_final, spec)
    u_coarse = propagate(hamiltonian, tau_final, coarse)
    w = 2.0**spec.scheme.order
    return (w * u_fine - u_coarse) / (w - 1.0)


def convergence_order(
    hamiltonian: HamiltonianFn,
    tau_final: float,
    scheme: Scheme = Scheme.MIDPOINT,
    base_steps: int = 256,
    floor: float = 1e-12,
) -> float:
    """Empirical order from runs at ``n``, ``2n`` and ``4n`` steps.

    Returns ``nan`` when successive differences are at round-off level (for
    example a constant field, which every scheme integrates exactly).
    """
    us = [propagate(hamiltonian, tau_final, IntegrationSpec(steps=base_steps * 2**k, scheme=scheme)) for k in range(3)]
    d1 = np.max(np.abs(us[0] - us[1]))
    d2 = np.max(np.abs(us[1] - us[2]))
    if d2 < floor or d1 < floor:
        return float("nan")
    return float(np.log2(d1 / d2))
