"""Final-time boundary conditions and the perfect-matching (f = 1) solver.

For a target that is diagonal in the (q1 q3) basis with sign pattern ``u``,
the final-time conditions reduce to four scalar functions of the block
phases ``omega_i tau``:

    M = sum u c,   N = omega_K sum u b s,   P = sum u s,
    R = sum u r s, Q = sum u d s,

with ``r_i = cos^2 phi + (b_i / 2)(b_i - b_{5-i} + 2 sin phi)`` and ``d`` the
coupling offsets. A time-optimal control satisfies ``Omega tau = 2 m pi``,
``|M| = 4 f``, ``P = R`` and ``Q = Omega P / 2``.

At ``f = 1`` every ``omega_i tau`` is a multiple of pi. Solving the four
quantisation conditions for ``(tau, beta, B0, K)`` gives closed forms in the
integers ``n_i``; :func:`solve_perfect` enumerates them.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from isingqb.analytic import (
    SpectralConstants,
    TrigProfile,
    coupling_offsets,
    overlap_fidelity,
    propagator,
    spectral_constants,
    trig_profile,
)
from isingqb.errors import IndeterminateError, InfeasibleError
from isingqb.model import (
    ControlConstants,
    GateKind,
    ModelParams,
    TargetGate,
    control_field,
    hamiltonian,
    target,
)
from isingqb.operators import fidelity
from isingqb.oracle import IntegrationSpec, richardson_propagate

RESIDUAL_TOL = 1e-8
_MATCH_TOL = 1e-9


def _as_gate(t) -> TargetGate:
    return t if isinstance(t, TargetGate) else target(t)


@dataclass(frozen=True)
class IntegerProfile:
    """Quantum numbers ``omega_i tau = pi n_i`` and ``Omega tau = 2 pi m``.

    The parity rule depends on the target. For US13 the index-1 integer has
    the opposite parity to the other three. For CNOT13 the index-4 integer
    does.
    """

    n: tuple[int, int, int, int]
    m: int
    target_kind: GateKind = GateKind.US13

    def __post_init__(self):
        n = tuple(int(v) for v in self.n)
        if len(n) != 4 or any(v <= 0 for v in n):
            raise ValueError("n must hold four positive integers")
        if int(self.m) == 0:
            raise ValueError("m must be non-zero (m = 0 forces tau = 0 or Omega = 0)")
        kind = GateKind(self.target_kind)
        if not parity_ok(n, kind):
            raise ValueError(f"profile {n} violates the {kind.value} parity rule")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "m", int(self.m))
        object.__setattr__(self, "target_kind", kind)

    @property
    def f_minus(self) -> int:
        n1, n2, n3, n4 = (v * v for v in self.n)
        return (n1 + n4) - (n2 + n3)

    @property
    def f_plus(self) -> int:
        n1, n2, n3, n4 = (v * v for v in self.n)
        return (n1 + n4) + (n2 + n3)

    @property
    def g_plus(self) -> int:
        n1, n2, n3, n4 = (v * v for v in self.n)
        return (n1 - n4) + (n2 - n3)

    @property
    def g_minus(self) -> int:
        n1, n2, n3, n4 = (v * v for v in self.n)
        return (n1 - n4) - (n2 - n3)


def parity_ok(n, kind: GateKind) -> bool:
    odd_one = 0 if GateKind(kind) is GateKind.US13 else 3
    # n2 is never the odd one out, so it fixes the common parity
    return all(((v - n[1]) % 2 == 1) == (i == odd_one) for i, v in enumerate(n))


@dataclass(frozen=True)
class BoundaryFunctions:
    M: float
    N: float
    P: float
    Q: float
    R: float

    def as_dict(self) -> dict:
        return {"M": self.M, "N": self.N, "P": self.P, "Q": self.Q, "R": self.R}


def boundary_functions(spec: SpectralConstants, trig: TrigProfile, target_kind) -> BoundaryFunctions:
    u = _as_gate(target_kind).signs
    b = spec.b
    sphi = math.sin(spec.phi)
    r = math.cos(spec.phi) ** 2 + 0.5 * b * (b - b[::-1] + 2.0 * sphi)
    d = coupling_offsets(spec.K)
    return BoundaryFunctions(
        M=float(u @ trig.c),
        N=float(spec.omega_K * (u @ (b * trig.s))),
        P=float(u @ trig.s),
        Q=float(u @ (d * trig.s)),
        R=float(u @ (r * trig.s)),
    )


def evaluate_boundary(c: ControlConstants, p: ModelParams, target_kind) -> BoundaryFunctions:
    spec = spectral_constants(p, c)
    return boundary_functions(spec, trig_profile(spec, c.tau_star), target_kind)


def _phase_defect(x: float) -> float:
    """Distance from ``x`` to the nearest multiple of 2 pi."""
    return abs(math.remainder(x, 2.0 * math.pi))


def final_boundary_residuals(c: ControlConstants, p: ModelParams, target_kind, f: float = 1.0) -> np.ndarray:
    """``(Omega tau mod 2 pi, |M| - 4 f, P - R, Q - Omega P / 2)`` at ``tau_star``."""
    bf = evaluate_boundary(c, p, target_kind)
    return np.array([
        _phase_defect(c.Omega * c.tau_star),
        abs(bf.M) - 4.0 * f,
        bf.P - bf.R,
        bf.Q - 0.5 * c.Omega * bf.P,
    ])


def lambda_multiplier(boundary: BoundaryFunctions, f: float, omega_K: float, atol: float = 1e-12) -> float:
    """Final-time Lagrange multiplier ``sign(M) / (4 f omega_K^2 R)``."""
    if not f > 0:
        raise ValueError("fidelity must be positive")
    if abs(boundary.R) <= atol:
        raise IndeterminateError("multiplier indeterminate at perfect matching (R = 0)")
    return math.copysign(1.0, boundary.M) / (4.0 * f * omega_K**2 * boundary.R)


@dataclass(frozen=True)
class PerfectSolution:
    profile: IntegerProfile
    constants: ControlConstants
    omega_K_sq: float
    f_minus: int
    f_plus: int
    g_plus: int
    g_minus: int
    feasible: bool
    lambda_multiplier: float | None = None  # indeterminate (R = 0) at f = 1
    K: float = 1.0

    @property
    def params(self) -> ModelParams:
        return ModelParams.for_constants(self.K, self.constants)


def closed_form_bz_sq(profile: IntegerProfile, K: float, m_flipped: int) -> float:
    """Longitudinal field squared in the closed form quoted for this problem.

    That form uses the opposite orientation for ``m``; pass
    ``m_flipped = -m * sign(g_plus)`` to compare with :func:`perfect_constants`.
    """
    fm, gp, gm = profile.f_minus, profile.g_plus, profile.g_minus
    return 8 * K / fm * (m_flipped - math.sqrt(gp * gm / (8 * fm))) ** 2


def closed_form_b0_sq(profile: IntegerProfile, K: float) -> float:
    fm, fp, gp, gm = profile.f_minus, profile.f_plus, profile.g_plus, profile.g_minus
    df, dg = fp - fm, gp - gm
    return K / fm * (2 * df - dg**2 * fm / (gp * gm) - gp * gm / fm)


def closed_form_omega_k_sq(profile: IntegerProfile, K: float, m_flipped: int) -> float:
    fm, fp, gp, gm = profile.f_minus, profile.f_plus, profile.g_plus, profile.g_minus
    return 2 * K / fm * (fp + 4 * m_flipped * (m_flipped - math.sqrt(gp * gm / (2 * fm)))) - (1 + K**2)


def perfect_constants(profile: IntegerProfile, K: float) -> ControlConstants | None:
    """Invert the quantisation conditions for ``profile`` at coupling ratio ``K``.

    Returns ``None`` when the profile admits no real, positive-energy control
    at this ``K`` (wrong sign of ``f_-``, coupling-ratio mismatch, or
    ``B0^2 < 0``).
    """
    fm = profile.f_minus
    if fm == 0 or K == 0 or (fm > 0) != (K > 0):
        return None
    n_sq = [float(v * v) for v in profile.n]
    tau2 = math.pi**2 * fm / (8.0 * K)
    tau = math.sqrt(tau2)
    scale = math.pi**2 / (4.0 * tau2)
    a = n_sq[0] - n_sq[3]
    b = n_sq[1] - n_sq[2]
    # 4 beta (1 + K) = scale a and 4 beta (1 - K) = scale b must hold together
    if abs(1.0 + K) >= abs(1.0 - K):
        beta = scale * a / (1.0 + K)
    else:
        beta = scale * b / (1.0 - K)
    if abs(beta * (1.0 + K) - scale * a) > _MATCH_TOL * max(1.0, abs(scale * a)):
        return None
    if abs(beta * (1.0 - K) - scale * b) > _MATCH_TOL * max(1.0, abs(scale * b)):
        return None
    b0_sq = scale * sum(n_sq) - beta**2 - (1.0 + K**2)
    if b0_sq < -_MATCH_TOL:
        return None
    m = profile.m
    bz = beta + m * math.pi / tau
    b0 = math.sqrt(max(b0_sq, 0.0))
    if not b0**2 + bz**2 > 0:
        return None
    return ControlConstants(B0=b0, Bz=bz, Omega=2.0 * m * math.pi / tau, tau_star=tau)


def enumerate_profiles(target_kind, n_max: int, m_max: int):
    kind = GateKind(target_kind)
    for n in itertools.product(range(1, n_max + 1), repeat=4):
        if not parity_ok(n, kind):
            continue
        for m in range(-m_max, m_max + 1):
            if m != 0:
                yield IntegerProfile(n, m, kind)


def matrix_fidelity(c: ControlConstants, p: ModelParams, target_kind) -> float:
    """Fidelity of the closed-form propagator from the full 8x8 trace."""
    gate = _as_gate(target_kind)
    return fidelity(propagator(c.tau_star, p, c, gate.frame), gate.matrix)


def solve_perfect(p: ModelParams, target_kind, n_max: int = 6, m_max: int = 3) -> list[PerfectSolution]:
    """All f = 1 controls within the integer bounds, fastest first.

    Ties in ``tau_star`` are broken by smaller ``|m|`` and then smaller
    ``|Bz|``. Every candidate is confirmed against the 8x8 trace fidelity.
    Raises :class:`InfeasibleError` when nothing qualifies.
    """
    if n_max < 2 or m_max < 1:
        raise ValueError("need n_max >= 2 and m_max >= 1")
    kind = GateKind(target_kind)
    gate = target(kind)
    K = p.K
    found = []
    for prof in enumerate_profiles(kind, n_max, m_max):
        c = perfect_constants(prof, K)
        if c is None:
            continue
        params = ModelParams.for_constants(K, c)
        if abs(matrix_fidelity(c, params, gate) - 1.0) > 1e-10:
            continue
        found.append(PerfectSolution(
            profile=prof, constants=c, omega_K_sq=c.omega_K_sq,
            f_minus=prof.f_minus, f_plus=prof.f_plus,
            g_plus=prof.g_plus, g_minus=prof.g_minus,
            feasible=True, lambda_multiplier=None, K=K,
        ))
    if not found:
        from isingqb.perturbative import max_fidelity

        fmax = max_fidelity(K - 1.0)
        raise InfeasibleError(
            f"no exact (f = 1) solution for K = {K:g} with n_i <= {n_max}, |m| <= {m_max}; "
            f"perturbative bound gives f_max = {fmax:.6g}",
            f_max=fmax,
        )
    found.sort(key=lambda s: (round(s.constants.tau_star, 12), abs(s.profile.m), abs(s.constants.Bz)))
    return found


@dataclass
class SolveReport:
    constants: ControlConstants
    K: float
    target_kind: GateKind
    fidelity_target: float
    analytic_fidelity: float
    overlap_fidelity: float
    numeric_fidelity: float
    numeric_deviation: float
    boundary_residuals: np.ndarray
    energy_residual: float
    conserved_field_residuals: tuple[float, float]
    tolerance: float = RESIDUAL_TOL
    failures: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    def as_dict(self) -> dict:
        names = ("omega_tau_mod_2pi", "abs_M_minus_4f", "P_minus_R", "Q_minus_half_Omega_P")
        return {
            "K": self.K,
            "target": self.target_kind.value,
            "constants": self.constants.as_dict(),
            "fidelity_target": self.fidelity_target,
            "analytic_fidelity": self.analytic_fidelity,
            "overlap_fidelity": self.overlap_fidelity,
            "numeric_fidelity": self.numeric_fidelity,
            "numeric_deviation": self.numeric_deviation,
            "boundary_residuals": dict(zip(names, map(float, self.boundary_residuals))),
            "energy_residual": self.energy_residual,
            "conserved_field_residuals": {
                "Bz": self.conserved_field_residuals[0],
                "transverse_norm": self.conserved_field_residuals[1],
            },
            "tolerance": self.tolerance,
            "passed": self.passed,
            "failures": list(self.failures),
        }


def verify_constants(
    c: ControlConstants,
    K: float,
    target_kind,
    f: float = 1.0,
    steps: int = 4096,
    tol: float = RESIDUAL_TOL,
    check_boundary: bool = True,
) -> SolveReport:
    """Certify a control against the closed form and the numeric oracle.

    The energy is taken from the field norm of ``c``. Failures are collected
    by name; nothing is raised for a merely poor control.
    """
    gate = target(target_kind)
    p = ModelParams.for_constants(K, c)
    u_closed = propagator(c.tau_star, p, c, gate.frame)
    f_closed = fidelity(u_closed, gate.matrix)
    f_overlap = float(overlap_fidelity(c.tau_star, K, c.B0, c.Bz, c.Omega, gate))

    def h(t):
        return hamiltonian(t, p, c, gate.frame)

    u_num = richardson_propagate(h, c.tau_star, IntegrationSpec(steps=steps))
    f_num = abs(np.vdot(u_num, gate.matrix)) / 8.0
    dev = float(np.max(np.abs(u_num - u_closed)))

    taus = np.linspace(0.0, c.tau_star, 257)
    hs = h(taus)
    tr_h2 = np.einsum("nij,nji->n", hs, hs).real
    energy = float(np.max(np.abs(tr_h2 - 8.0 * p.omega_hat**2)))
    fld = control_field(taus, c)
    bz_res = float(np.max(np.abs(fld[:, 2] - c.Bz)))
    tr_res = float(np.max(np.abs(fld[:, 0] ** 2 + fld[:, 1] ** 2 - c.B0**2)))
    resid = final_boundary_residuals(c, p, gate, f)

    failures = []
    if abs(f_closed - f) > tol:
        failures.append("analytic_fidelity")
    if abs(f_num - f_closed) > tol:
        failures.append("numeric_fidelity")
    if dev > tol:
        failures.append("numeric_deviation")
    if check_boundary:
        names = ("omega_tau_mod_2pi", "abs_M_minus_4f", "P_minus_R", "Q_minus_half_Omega_P")
        failures += [n for n, r in zip(names, resid) if abs(r) > tol]
    if energy > tol * max(1.0, p.omega_hat**2):
        failures.append("energy")
    if max(bz_res, tr_res) > tol:
        failures.append("conserved_field")
    return SolveReport(
        constants=c, K=K, target_kind=gate.kind, fidelity_target=f,
        analytic_fidelity=f_closed, overlap_fidelity=f_overlap,
        numeric_fidelity=float(f_num), numeric_deviation=dev,
        boundary_residuals=resid, energy_residual=energy,
        conserved_field_residuals=(bz_res, tr_res), tolerance=tol, failures=failures,
    )


def verify_solution(solution: PerfectSolution, target_kind=None, steps: int = 4096) -> SolveReport:
    kind = solution.profile.target_kind if target_kind is None else GateKind(target_kind)
    return verify_constants(solution.constants, solution.K, kind, 1.0, steps=steps)
