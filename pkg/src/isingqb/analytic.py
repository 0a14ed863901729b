"""Closed-form time-optimal propagator.

In the frame co-rotating with the field, the Hamiltonian is constant and
block diagonal in the (q1 q3) basis. Each block is a qubit-2 Hamiltonian
``B0 sigma_x + beta_i sigma_z`` with ``beta_i = Bz + d_i - Omega/2``. Here
``d = (1+K, 1-K, -(1-K), -(1+K))`` is the sigma_z^2 coupling seen by each
(q1 q3) basis state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from isingqb.errors import InfeasibleError
from isingqb.model import ControlConstants, Frame, ModelParams, TargetGate
from isingqb.operators import PAULI, embed_qubit2_blocks, walsh_hadamard_on_qubit3

_SMALL_OMEGA = 1e-8


def coupling_offsets(K: float) -> np.ndarray:
    return np.array([1.0 + K, 1.0 - K, -(1.0 - K), -(1.0 + K)])


@dataclass(frozen=True)
class SpectralConstants:
    """Field angle ``phi``, reduced fields ``b_i`` and block frequencies ``omega_i``.

    ``omega_K * b_i`` is the longitudinal field felt by qubit 2 in block ``i``
    of the rotating frame, and ``omega_i = omega_K sqrt(cos^2 phi + b_i^2)``.
    """

    phi: float
    b: np.ndarray
    omega: np.ndarray
    omega_K: float
    K: float
    Omega: float

    @property
    def beta(self) -> np.ndarray:
        return self.omega_K * self.b


@dataclass(frozen=True)
class TrigProfile:
    s: np.ndarray  # sin(omega_i tau) / omega_i
    c: np.ndarray  # cos(omega_i tau)


def spectral_constants(p: ModelParams, c: ControlConstants) -> SpectralConstants:
    omega_K = c.omega_K
    if p.omega_hat is not None:
        p.require_feasible()
    if not omega_K > 0:
        raise InfeasibleError("spectral constants need a non-zero field (omega_K > 0)")
    phi = c.phi
    b = math.sin(phi) + (coupling_offsets(p.K) - c.Omega / 2) / omega_K
    omega = omega_K * np.sqrt(math.cos(phi) ** 2 + b**2)
    return SpectralConstants(phi=phi, b=b, omega=omega, omega_K=omega_K, K=p.K, Omega=c.Omega)


def _sin_over(omega, tau):
    omega = np.asarray(omega, dtype=float)
    tau = np.asarray(tau, dtype=float)
    small = np.abs(omega) < _SMALL_OMEGA
    safe = np.where(small, 1.0, omega)
    series = tau * (1.0 - (omega * tau) ** 2 / 6.0)
    return np.where(small, series, np.sin(omega * tau) / safe)


def trig_profile(spec: SpectralConstants, tau: float) -> TrigProfile:
    return TrigProfile(s=_sin_over(spec.omega, tau), c=np.cos(spec.omega * tau))


def _block_coefficients(tau, K, B0, Bz, Omega, theta0=0.0):
    """Return ``a, bx, by, bz`` with shape (..., 4) for ``U = a - i b . sigma^2``.

    Broadcasts over every argument. ``a`` and ``bz`` are the diagonal
    operators of the closed form; ``bx, by`` carry the transverse part.
    """
    tau = np.asarray(tau, dtype=float)[..., None]
    B0 = np.asarray(B0, dtype=float)[..., None]
    Omega = np.asarray(Omega, dtype=float)[..., None]
    theta0 = np.asarray(theta0, dtype=float)[..., None]
    K = np.asarray(K, dtype=float)
    d = np.stack([1.0 + K, 1.0 - K, K - 1.0, -1.0 - K], axis=-1)
    beta = np.asarray(Bz, dtype=float)[..., None] + d - Omega / 2
    omega = np.sqrt(B0**2 + beta**2)
    s = _sin_over(omega, tau)
    cc = np.cos(omega * tau)
    half = Omega * tau / 2
    a = np.cos(half) * cc - np.sin(half) * beta * s
    bz = np.sin(half) * cc + np.cos(half) * beta * s
    bx = B0 * s * np.cos(half + theta0)
    by = B0 * s * np.sin(half + theta0)
    return a, bx, by, bz


def propagator_closed_form(tau: float, p: ModelParams, c: ControlConstants) -> np.ndarray:
    """``U_opt(tau) = exp(-i theta(tau)/2 sz2) exp(-i Ht tau) exp(i theta0/2 sz2)``.

    Assembled block by block as ``a - i b . sigma^2`` in the (q1 q3) basis.
    """
    if p.omega_hat is not None:
        p.require_feasible()
    a, bx, by, bz = _block_coefficients(tau, p.K, c.B0, c.Bz, c.Omega, c.theta0)
    blocks = (
        a[:, None, None] * PAULI["I"]
        - 1j * (bx[:, None, None] * PAULI["x"] + by[:, None, None] * PAULI["y"] + bz[:, None, None] * PAULI["z"])
    )
    return embed_qubit2_blocks(blocks)


def propagator_rotated(tau: float, p: ModelParams, c: ControlConstants) -> np.ndarray:
    v = walsh_hadamard_on_qubit3()
    return v @ propagator_closed_form(tau, p, c) @ v


def propagator(tau: float, p: ModelParams, c: ControlConstants, frame: Frame) -> np.ndarray:
    if Frame(frame) is Frame.ROTATED:
        return propagator_rotated(tau, p, c)
    return propagator_closed_form(tau, p, c)


def diagonal_overlap(tau, K, B0, Bz, Omega, signs) -> np.ndarray:
    """``Tr[U_opt(tau)^dagger D] / 2`` for a (q1 q3) sign pattern ``D``.

    The trace over qubit 2 keeps only the real coefficient ``a``, so the
    result is real and independent of ``theta0``. Fully vectorised; used by
    the grid scans.
    """
    a, _, _, _ = _block_coefficients(tau, K, B0, Bz, Omega)
    return a @ np.asarray(signs, dtype=float)


def overlap_fidelity(tau, K, B0, Bz, Omega, gate: TargetGate) -> np.ndarray:
    """Fidelity of ``U_opt(tau)`` against ``gate`` in its diagonal frame."""
    return np.abs(diagonal_overlap(tau, K, B0, Bz, Omega, gate.signs)) / 4.0
