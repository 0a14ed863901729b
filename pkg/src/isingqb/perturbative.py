"""Almost-perfect matching for coupling ratios near one.

Write ``K = 1 + dK`` and ``f = 1 - eps^2 / 8``, and let the block phases miss
their multiples of pi by small defects ``omega_i tau = pi n_i + sigma_i``. To
first order the defects are fixed in closed form. They then shift the f = 1
constants of the ``n = (2, 1, 1, 1)`` profile linearly in

    dK_eps = dK + (1 + 2 sqrt(6) / m) sigma_1 / (3 pi).

The field components come from linearising the phase conditions directly.
The exact nonlinear boundary-value problem, solved by
:func:`root_solve_exact`, is the reference they are measured against.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import root

from isingqb.boundary import IntegerProfile, final_boundary_residuals
from isingqb.errors import ConvergenceError, InfeasibleError
from isingqb.model import ControlConstants, GateKind, ModelParams, target

SQRT6 = math.sqrt(6.0)
SQRT83 = math.sqrt(8.0 / 3.0)
TAU0 = math.pi * math.sqrt(3.0 / 8.0)
EXPANSION_LIMIT = 0.3

US13_PROFILE = IntegerProfile((2, 1, 1, 1), 1, GateKind.US13)
CNOT13_PROFILE = IntegerProfile((1, 1, 1, 2), -1, GateKind.CNOT13)


def max_fidelity(delta_K: float) -> float:
    """Largest fidelity for which the first-order solution is real."""
    return 1.0 - (3.0 * math.pi * abs(delta_K) / 16.0) ** 2


def delta_K_bound(fidelity: float) -> float:
    return 16.0 / (3.0 * math.pi) * math.sqrt(1.0 - fidelity)


def fidelity_at_bound_fraction(delta_K: float, fraction: float) -> float:
    """Fidelity at which ``|delta_K|`` sits at ``fraction`` of the allowed bound."""
    if not 0 < fraction <= 1:
        raise ValueError("fraction must lie in (0, 1]")
    return 1.0 - (1.0 - max_fidelity(delta_K)) / fraction**2


@dataclass(frozen=True)
class PerturbationInputs:
    delta_K: float
    fidelity: float

    def __post_init__(self):
        if not 0 < self.fidelity <= 1:
            raise ValueError("fidelity must lie in (0, 1]")
        if not math.isfinite(self.delta_K):
            raise ValueError("delta_K must be finite")

    @classmethod
    def from_K(cls, K: float, fidelity: float) -> PerturbationInputs:
        return cls(delta_K=K - 1.0, fidelity=fidelity)

    @property
    def K(self) -> float:
        return 1.0 + self.delta_K

    @property
    def epsilon(self) -> float:
        return math.sqrt(8.0 * (1.0 - self.fidelity))

    @property
    def discriminant(self) -> float:
        """``eps^2 - (9 pi^2 / 32) dK^2``; negative means infeasible."""
        return self.epsilon**2 - 9.0 * math.pi**2 / 32.0 * self.delta_K**2

    @property
    def f_max(self) -> float:
        return max_fidelity(self.delta_K)

    def require_feasible(self) -> None:
        if self.discriminant < 0:
            raise InfeasibleError(
                f"|dK| = {abs(self.delta_K):.6g} exceeds the bound "
                f"{delta_K_bound(self.fidelity):.6g} for f = {self.fidelity:.6g}; "
                f"max achievable fidelity is {self.f_max:.6g}",
                f_max=self.f_max,
            )


@dataclass(frozen=True)
class SigmaVector:
    sigma: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.sigma, dtype=float)
        if s.shape != (4,):
            raise ValueError("sigma needs four entries")
        object.__setattr__(self, "sigma", s)

    @property
    def norm_sq(self) -> float:
        return float(self.sigma @ self.sigma)

    @property
    def within_expansion(self) -> bool:
        return bool(np.all(np.abs(self.sigma) < EXPANSION_LIMIT))

    def reversed(self) -> SigmaVector:
        return SigmaVector(self.sigma[::-1].copy())


def solve_sigmas(inp: PerturbationInputs, m: int = 1, sign_sigma1: int = 1) -> SigmaVector:
    """First-order phase defects for the US13 profile ``(2, 1, 1, 1)``."""
    if m == 0:
        raise ValueError("m must be non-zero")
    if sign_sigma1 not in (1, -1):
        raise ValueError("sign_sigma1 must be +1 or -1")
    inp.require_feasible()
    k = 1.0 + SQRT6 / m
    s1 = sign_sigma1 * math.sqrt(2.0 * inp.discriminant / (k**2 + 6.5))
    shift = 0.75 * math.pi * inp.delta_K
    return SigmaVector(np.array([s1, 0.5 * (k * s1 - shift), 0.5 * (k * s1 + shift), -1.5 * s1]))


def sigma_constraint_residuals(sigma: SigmaVector, delta_K: float, profile: IntegerProfile = US13_PROFILE) -> np.ndarray:
    """Residuals of the linearised defect equations.

    Returns the coupling-ratio condition ``n2 (s2 - s3) + (pi/4)(n1^2 - n4^2) dK``
    followed by the two linearised boundary conditions. All three are
    evaluated at the zeroth-order constants of ``profile``.
    """
    n = np.array(profile.n, dtype=float)
    s = sigma.sigma
    beta = profile.g_minus / profile.f_minus
    omega = 2.0 * profile.m * math.sqrt(8.0 / profile.f_minus)
    ratio = n[1] * (s[1] - s[2]) + math.pi / 4.0 * (n[0] ** 2 - n[3] ** 2) * delta_K
    first = (beta + 2.0) * s[0] / n[0] - (beta - 2.0) * s[3] / n[3]
    second = (s[0] / n[0] - s[3] / n[3]) - omega / 4.0 * np.sum(s / n)
    return np.array([ratio, first, second])


@dataclass(frozen=True)
class PerturbativeSolution:
    inputs: PerturbationInputs
    target_kind: GateKind
    constants: ControlConstants
    omega_K_sq: float
    sigma: SigmaVector
    delta_eps_K: float
    profile: IntegerProfile

    @property
    def m(self) -> int:
        return self.profile.m

    @property
    def f_max(self) -> float:
        return self.inputs.f_max


def uncorrected_field_components(inp: PerturbationInputs) -> tuple[float, float, float]:
    """``(Bz, B0, omega_K^2)`` from the uncorrected first-order expressions.

    Kept for comparison only. Their first-order coefficients do not follow
    from the phase conditions, so they miss the exact root at O(dK);
    :func:`optimal_constants` uses the linearised conditions instead.
    """
    inp.require_feasible()
    s1 = solve_sigmas(inp).sigma[0]
    half = 0.5 * s1  # equals sqrt(Delta / (27 + 4 sqrt 6)) on the default branch
    de = inp.delta_K + (1.0 + 2.0 * SQRT6) * s1 / (3.0 * math.pi)
    r2, r3 = math.sqrt(2.0), math.sqrt(3.0)
    bz = (1.0 + SQRT83) * (1.0 + (r2 + r3) / (2.0 * r2 + r3) * de)
    b0 = math.sqrt(5.0 / 3.0) * (1.0 + (inp.delta_K + 2.0 * (12.0 * SQRT6 + 31.0) / math.pi * half) / 5.0)
    wk2 = 16.0 / 3.0 * (1.0 + math.sqrt(3.0 / 8.0)) * (
        1.0 + (4.0 * r2 + 3.0 * r3) / (2.0 * (2.0 * r2 + r3))
        * (inp.delta_K + (SQRT6 + 29.0) / (15.0 * math.pi) * half)
    )
    return bz, b0, wk2


# d(Bz) and d(B0) per unit dK and per unit sigma_1, from linearising
# (omega_i tau)^2 = (pi n_i + sigma_i)^2 about the K = 1 solution
_BZ_DK = 0.5 + SQRT6 / 3.0
_BZ_S1 = (36.0 + 7.0 * SQRT6) / (9.0 * math.pi)
_B0_DK = math.sqrt(15.0) / 6.0
_B0_S1 = (42.0 * math.sqrt(10.0) - 8.0 * math.sqrt(15.0)) / (45.0 * math.pi)


def optimal_constants(inp: PerturbationInputs, target_kind=GateKind.US13, sign_sigma1: int = 1) -> PerturbativeSolution:
    """First-order time-optimal constants at ``K = 1 + dK`` and fidelity ``f``.

    The US13 branch is ``m = 1`` with ``sigma_1 >= 0``. CNOT13 uses the mirror
    image: ``Omega`` and ``Bz`` flip sign, ``m = -1``, and the defects come in
    reversed order.
    """
    kind = GateKind(target_kind)
    inp.require_feasible()
    sig = solve_sigmas(inp, 1, sign_sigma1)
    s1 = sig.sigma[0]
    dk = inp.delta_K
    de = dk + (1.0 + 2.0 * SQRT6) * s1 / (3.0 * math.pi)
    tau = TAU0 * (1.0 - de / 2.0)
    omega = 2.0 * SQRT83 * (1.0 + de / 2.0)
    bz = 1.0 + SQRT83 + _BZ_DK * dk + _BZ_S1 * s1
    b0 = math.sqrt(5.0 / 3.0) + _B0_DK * dk + _B0_S1 * s1
    c = ControlConstants(B0=abs(b0), Bz=bz, Omega=omega, tau_star=tau)
    profile = US13_PROFILE
    if kind is GateKind.CNOT13:
        c, sig, profile = c.mirrored(), sig.reversed(), CNOT13_PROFILE
    return PerturbativeSolution(
        inputs=inp, target_kind=kind, constants=c, omega_K_sq=c.omega_K_sq,
        sigma=sig, delta_eps_K=de, profile=profile,
    )


def _offsets_times_tau(K: float, tau: float, m: int) -> np.ndarray:
    d = np.array([1.0 + K, 1.0 - K, K - 1.0, -1.0 - K])
    return d * tau - m * math.pi


def transcendental_residuals(c: ControlConstants, p: ModelParams, profile: IntegerProfile, sigma: SigmaVector) -> np.ndarray:
    """``(omega_i tau)^2`` from the field minus ``(pi n_i + sigma_i)^2``.

    Uses ``Omega tau = 2 m pi`` from the profile, so a control that violates
    it shows up here too.
    """
    wt = c.omega_K * c.tau_star
    lin = _offsets_times_tau(p.K, c.tau_star, profile.m)
    rhs = math.pi * np.array(profile.n, dtype=float) + sigma.sigma
    return wt**2 + 2.0 * wt * math.sin(c.phi) * lin + lin**2 - rhs**2


def sigma_from_constants(c: ControlConstants, p: ModelParams, profile: IntegerProfile) -> SigmaVector:
    beta = c.Bz + np.array([1.0 + p.K, 1.0 - p.K, p.K - 1.0, -1.0 - p.K]) - c.Omega / 2.0
    omega = np.sqrt(c.B0**2 + beta**2)
    return SigmaVector(omega * c.tau_star - math.pi * np.array(profile.n, dtype=float))


def _constants(x, m: int) -> ControlConstants:
    tau, bz, b0 = x
    return ControlConstants(B0=abs(b0), Bz=bz, Omega=2.0 * m * math.pi / tau, tau_star=tau)


def _exact_system(x, K: float, f: float, profile: IntegerProfile) -> np.ndarray:
    if not x[0] > 0:
        return np.full(3, 1e3)
    c = _constants(x, profile.m)
    return final_boundary_residuals(c, ModelParams(K), target(profile.target_kind), f)[1:]


def root_solve_exact(
    p: ModelParams,
    profile: IntegerProfile,
    f: float,
    initial: ControlConstants,
    tol: float = 1e-10,
) -> ControlConstants:
    """Solve the final-time conditions exactly for ``(tau, Bz, B0)``.

    With ``Omega = 2 m pi / tau`` imposed, the unknowns must satisfy
    ``|M| = 4 f``, ``P = R`` and ``Q = Omega P / 2``. The transcendental
    residuals are checked against the defects implied by the result.
    Raises :class:`ConvergenceError` if the best residual exceeds ``tol``.
    """
    x0 = np.array([initial.tau_star, initial.Bz, initial.B0])
    best_x, best_res = x0, math.inf
    for method in ("hybr", "lm"):
        sol = root(_exact_system, x0, args=(p.K, f, profile), method=method, tol=1e-14)
        res = float(np.max(np.abs(_exact_system(sol.x, p.K, f, profile))))
        if res < best_res:
            best_x, best_res = sol.x, res
        if best_res <= tol:
            break
    if best_res > tol or not best_x[0] > 0:
        raise ConvergenceError("exact boundary-value solve did not converge", best_res, best_x)
    c = _constants(best_x, profile.m)
    sig = sigma_from_constants(c, p, profile)
    trans = float(np.max(np.abs(transcendental_residuals(c, p, profile, sig))))
    if trans > tol:
        raise ConvergenceError("transcendental system inconsistent at the root", trans, best_x)
    return c


@dataclass(frozen=True)
class Comparison:
    perturbative: PerturbativeSolution
    exact: ControlConstants
    exact_sigma: SigmaVector

    @property
    def tau_deviation(self) -> float:
        return self.perturbative.constants.tau_star - self.exact.tau_star

    @property
    def scaled_tau_deviation(self) -> float:
        """``|tau_pert - tau_exact| / (dK^2 + eps^2)``."""
        inp = self.perturbative.inputs
        return abs(self.tau_deviation) / (inp.delta_K**2 + inp.epsilon**2)

    def deviations(self) -> dict:
        pc, ec = self.perturbative.constants, self.exact
        return {
            "tau_star": pc.tau_star - ec.tau_star,
            "Omega": pc.Omega - ec.Omega,
            "Bz": pc.Bz - ec.Bz,
            "B0": pc.B0 - ec.B0,
            "omega_K_sq": self.perturbative.omega_K_sq - ec.omega_K_sq,
        }


def _sigma_distance(c: ControlConstants, p: ModelParams, pert: PerturbativeSolution) -> float:
    return float(np.max(np.abs(sigma_from_constants(c, p, pert.profile).sigma - pert.sigma.sigma)))


def solve_exact_branch(pert: PerturbativeSolution) -> ControlConstants:
    """Exact root on the branch the first-order solution approximates.

    Several roots can sit close together once ``eps`` is not small. Two
    candidates are computed: the direct solve from the first-order seed, and
    a continuation in ``dK`` at fixed ``f`` starting from ``K = 1``. The root
    whose defects lie closest to the first-order defects wins.
    """
    inp = pert.inputs
    p = ModelParams(inp.K)
    candidates = []
    first_error = None
    try:
        candidates.append(root_solve_exact(p, pert.profile, inp.fidelity, pert.constants))
    except ConvergenceError as exc:
        first_error = exc
    if inp.delta_K == 0 and candidates:
        return candidates[0]
    steps = max(1, math.ceil(abs(inp.delta_K) / 0.01))
    seed = optimal_constants(PerturbationInputs(0.0, inp.fidelity), pert.target_kind).constants
    try:
        for dk in np.linspace(0.0, inp.delta_K, steps + 1)[1:]:
            seed = root_solve_exact(ModelParams(1.0 + dk), pert.profile, inp.fidelity, seed)
        candidates.append(seed)
    except ConvergenceError:
        pass
    if not candidates:
        raise first_error
    return min(candidates, key=lambda c: _sigma_distance(c, p, pert))


def compare_with_exact(inp: PerturbationInputs, target_kind=GateKind.US13) -> Comparison:
    pert = optimal_constants(inp, target_kind)
    p = ModelParams(inp.K)
    exact = solve_exact_branch(pert)
    return Comparison(pert, exact, sigma_from_constants(exact, p, pert.profile))
