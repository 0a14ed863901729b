"""Controlled three-qubit Ising chain: parameters, control law, Hamiltonian, targets.

All quantities are dimensionless, rescaled by the coupling ``J12``: time
``tau = J12 t``, fields ``B/J12``, energy ``omega/J12`` and ``K = J23/J12``.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass

import numpy as np

from isingqb.errors import InfeasibleError
from isingqb.operators import embed_diagonal13, expm_hermitian, pauli_product, walsh_hadamard_on_qubit3


class GateKind(str, enum.Enum):
    US13 = "us13"
    CNOT13 = "cnot13"


class Frame(str, enum.Enum):
    COMPUTATIONAL = "computational"
    ROTATED = "rotated-qubit3"


@dataclass(frozen=True)
class ModelParams:
    """Coupling ratio ``K`` and rescaled energy ``omega_hat``.

    ``omega_hat`` may be left unset when the energy is an output of a solver
    rather than an input. ``J12_hz`` is only used for unit conversion.
    """

    K: float
    omega_hat: float | None = None
    J12_hz: float | None = None

    def __post_init__(self):
        if not math.isfinite(self.K):
            raise ValueError("K must be finite")
        if self.K < 0:
            warnings.warn(
                "negative coupling ratio K is experimental", RuntimeWarning, stacklevel=3
            )
        if self.J12_hz is not None and not self.J12_hz > 0:
            raise ValueError("J12_hz must be positive")

    @property
    def omega_K_sq(self) -> float:
        """Squared field norm allowed by the energy, ``omega_hat^2 - (1 + K^2)``."""
        if self.omega_hat is None:
            raise ValueError("ModelParams has no energy (omega_hat) set")
        return self.omega_hat**2 - (1.0 + self.K**2)

    @property
    def feasible(self) -> bool:
        return self.omega_hat is not None and self.omega_K_sq > 0

    def require_feasible(self) -> None:
        if self.omega_K_sq <= 0:
            raise InfeasibleError(
                f"energy too small: omega_K^2 = {self.omega_K_sq:.6g} <= 0 "
                f"(need omega_hat^2 > 1 + K^2 = {1 + self.K**2:.6g})"
            )

    @classmethod
    def for_constants(cls, K: float, c: ControlConstants, J12_hz: float | None = None):
        """Parameters whose energy matches the field norm of ``c``."""
        return cls(K=K, omega_hat=math.sqrt(c.omega_K_sq + 1.0 + K**2), J12_hz=J12_hz)


@dataclass(frozen=True)
class ControlConstants:
    """Integrals of motion of the optimal field plus the duration.

    The field is ``(B0 cos theta, B0 sin theta, Bz)`` with
    ``theta(tau) = Omega tau + theta0``. ``B0 >= 0`` by convention; a sign
    is absorbed into ``theta0``.
    """

    B0: float
    Bz: float
    Omega: float
    tau_star: float
    theta0: float = 0.0

    def __post_init__(self):
        for name in ("B0", "Bz", "Omega", "tau_star", "theta0"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite")
            object.__setattr__(self, name, value)
        if self.B0 < 0:
            raise ValueError("B0 must be non-negative (absorb the sign into theta0)")
        if not self.tau_star > 0:
            raise ValueError("tau_star must be positive")

    @property
    def omega_K_sq(self) -> float:
        return self.B0**2 + self.Bz**2

    @property
    def omega_K(self) -> float:
        return math.sqrt(self.omega_K_sq)

    @property
    def phi(self) -> float:
        """Field angle with ``B0 = omega_K cos phi`` and ``Bz = omega_K sin phi``."""
        return math.atan2(self.Bz, self.B0)

    def theta(self, tau):
        return self.Omega * np.asarray(tau) + self.theta0

    def mirrored(self) -> ControlConstants:
        """Constants of the mirror branch (Bz, Omega, theta0 negated).

        Conjugation by sigma_x on all three qubits maps the control law onto
        this branch, which reverses the (q1 q3) index order.
        """
        return ControlConstants(
            B0=self.B0, Bz=-self.Bz, Omega=-self.Omega, tau_star=self.tau_star,
            theta0=-self.theta0,
        )

    def as_dict(self) -> dict:
        return {
            "B0": self.B0, "Bz": self.Bz, "Omega": self.Omega,
            "theta0": self.theta0, "tau_star": self.tau_star,
        }


@dataclass(frozen=True)
class TargetGate:
    kind: GateKind
    matrix: np.ndarray
    diagonal_form: np.ndarray
    frame: Frame

    @property
    def signs(self) -> np.ndarray:
        """The (q1 q3) diagonal with its global phase removed; entries are +-1."""
        d = self.diagonal_form
        return np.real(d / d[1])


SIGMA_Z1_Z2 = pauli_product("z", "z", "I")
SIGMA_Z2_Z3 = pauli_product("I", "z", "z")
SIGMA_Z2_X3 = pauli_product("I", "z", "x")
SIGMA2 = (pauli_product("I", "x", "I"), pauli_product("I", "y", "I"), pauli_product("I", "z", "I"))


def control_field(tau, c: ControlConstants) -> np.ndarray:
    """Optimal field ``(B0 cos theta, B0 sin theta, Bz)``; shape (3,) or (n, 3)."""
    theta = c.theta(tau)
    bz = np.broadcast_to(c.Bz, np.shape(theta))
    return np.stack([c.B0 * np.cos(theta), c.B0 * np.sin(theta), bz], axis=-1)


def hamiltonian(tau, p: ModelParams, c: ControlConstants, frame: Frame = Frame.COMPUTATIONAL) -> np.ndarray:
    """Rescaled Hamiltonian ``H(tau)``; vectorised over ``tau``.

    The rotated frame replaces the ``sigma_z^2 sigma_z^3`` coupling by
    ``sigma_z^2 sigma_x^3``, which equals ``V3 H V3``.
    """
    if p.omega_hat is not None:
        p.require_feasible()
        if abs(c.omega_K_sq - p.omega_K_sq) > 1e-9 * max(1.0, p.omega_K_sq):
            raise ValueError(
                f"field norm^2 {c.omega_K_sq:.12g} does not match the energy "
                f"omega_K^2 {p.omega_K_sq:.12g}"
            )
    coupling23 = SIGMA_Z2_X3 if Frame(frame) is Frame.ROTATED else SIGMA_Z2_Z3
    b = control_field(tau, c)
    static = SIGMA_Z1_Z2 + p.K * coupling23
    return (
        static
        + b[..., 0, None, None] * SIGMA2[0]
        + b[..., 1, None, None] * SIGMA2[1]
        + b[..., 2, None, None] * SIGMA2[2]
    )


_US13_GENERATOR = pauli_product("z", "I", "z") + pauli_product("z", "I", "I") + pauli_product("I", "I", "z")
_CNOT13_GENERATOR = (
    np.eye(8) + pauli_product("z", "I", "x") - pauli_product("z", "I", "I") - pauli_product("I", "I", "x")
)


def target(kind, frame: Frame | None = None) -> TargetGate:
    """Target gate with its (q1 q3) diagonal form.

    ``US13`` is diagonal in the computational frame,
    ``exp(i pi/4) Diag(-1, 1, 1, 1)``. ``CNOT13`` is diagonal after
    conjugation by ``V3``, where it reads ``Diag(1, 1, 1, -1)``.
    """
    kind = GateKind(kind)
    if kind is GateKind.US13:
        natural = Frame.COMPUTATIONAL
        matrix = expm_hermitian(np.pi / 4 * _US13_GENERATOR)
        diag = np.exp(1j * np.pi / 4) * np.array([-1, 1, 1, 1], dtype=complex)
    else:
        natural = Frame.ROTATED
        matrix = expm_hermitian(np.pi / 4 * _CNOT13_GENERATOR)
        diag = np.array([1, 1, 1, -1], dtype=complex)
    if frame is not None and Frame(frame) is not natural:
        raise ValueError(f"{kind.value} is diagonal only in the {natural.value} frame")
    return TargetGate(kind=kind, matrix=matrix, diagonal_form=diag, frame=natural)


def diagonal_frame_matrix(gate: TargetGate) -> np.ndarray:
    """The gate as an 8x8 operator in the frame where it is diagonal."""
    return embed_diagonal13(gate.diagonal_form)


def to_frame(op: np.ndarray, frame: Frame) -> np.ndarray:
    """Conjugate by ``V3`` when ``frame`` is the rotated one."""
    if Frame(frame) is Frame.ROTATED:
        v = walsh_hadamard_on_qubit3()
        return v @ op @ v
    return op
