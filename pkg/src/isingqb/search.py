"""Brute-force minimum-time scan over the optimal control family.

The family is a constant ``Bz`` plus a transverse field of fixed amplitude
precessing at ``Omega``; the energy fixes ``B0^2 + Bz^2``. The scan therefore
runs over the field angle ``phi``, ``Omega``, the initial phase ``theta0`` and
the duration. It certifies minimality only within this family.

For targets that are diagonal in the (q1 q3) basis the fidelity does not
depend on ``theta0``. The coarse pass exploits this, and the winning cell is
re-checked with the 8x8 trace at every ``theta0`` on the grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from isingqb.analytic import overlap_fidelity, propagator
from isingqb.model import ControlConstants, ModelParams, TargetGate, target
from isingqb.operators import fidelity


@dataclass(frozen=True)
class SearchGrid:
    phi_steps: int = 32
    omega_steps: int = 32
    theta0_steps: int = 8
    tau_steps: int = 512
    tau_max: float = 2.5
    omega_range: tuple[float, float] = (-8.0, 8.0)
    fidelity_target: float = 1.0
    tolerance: float = 1e-4
    refine_starts: int = 4

    def __post_init__(self):
        if not self.tau_max > 0:
            raise ValueError("tau_max must be positive")
        for name in ("phi_steps", "omega_steps", "theta0_steps", "tau_steps"):
            if getattr(self, name) < 8:
                raise ValueError(f"{name} must be at least 8")
        if not 0 < self.fidelity_target <= 1:
            raise ValueError("fidelity_target must lie in (0, 1]")

    @property
    def taus(self) -> np.ndarray:
        return self.tau_max * np.arange(1, self.tau_steps + 1) / self.tau_steps

    @property
    def tau_cell(self) -> float:
        return self.tau_max / self.tau_steps

    @property
    def phis(self) -> np.ndarray:
        return 2 * np.pi * np.arange(self.phi_steps) / self.phi_steps

    @property
    def omegas(self) -> np.ndarray:
        return np.linspace(*self.omega_range, self.omega_steps)

    @property
    def theta0s(self) -> np.ndarray:
        return 2 * np.pi * np.arange(self.theta0_steps) / self.theta0_steps


@dataclass(frozen=True)
class ScanResult:
    hit: bool
    best_tau: float
    best_constants: ControlConstants
    best_fidelity: float
    taus: np.ndarray
    max_fidelity: np.ndarray  # refined maximum over (phi, Omega) at each tau
    theta0_spread: float  # max - min 8x8 fidelity over the theta0 grid at the winner


def _family_fidelity(tau, phi, omega, omega_K, K, gate):
    return overlap_fidelity(tau, K, omega_K * np.cos(phi), omega_K * np.sin(phi), omega, gate)


def _pattern_search(f, x, y, hx, hy, iters: int = 80):
    """Vectorised compass search over (x, y) with diagonal moves; maximises ``f``."""
    best = f(x, y)
    moves = [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)]
    for _ in range(iters):
        improved = np.zeros(best.shape, dtype=bool)
        for dx, dy in moves:
            xn, yn = x + dx * hx, y + dy * hy
            val = f(xn, yn)
            better = val > best
            x, y, best = np.where(better, xn, x), np.where(better, yn, y), np.where(better, val, best)
            improved |= better
        hx = np.where(improved, hx, 0.5 * hx)
        hy = np.where(improved, hy, 0.5 * hy)
    return x, y, best


def constants_from_angle(phi: float, omega: float, omega_K: float, tau: float, theta0: float = 0.0) -> ControlConstants:
    """Family member with ``B0 = omega_K cos phi``; a negative ``B0`` moves into ``theta0``."""
    b0 = omega_K * math.cos(phi)
    if b0 < 0:
        theta0 += math.pi
    return ControlConstants(B0=abs(b0), Bz=omega_K * math.sin(phi), Omega=omega, tau_star=tau, theta0=theta0)


def min_time_scan(p: ModelParams, target_kind, grid: SearchGrid = SearchGrid()) -> ScanResult:
    """Earliest grid duration at which some family member reaches the target.

    Returns the earliest ``tau`` on the grid with refined fidelity at least
    ``fidelity_target - tolerance``. If no duration qualifies, ``hit`` is
    false and the best fidelity found is reported at its ``tau``.
    """
    p.require_feasible()
    gate = target_kind if isinstance(target_kind, TargetGate) else target(target_kind)
    omega_K = math.sqrt(p.omega_K_sq)
    taus, phis, omegas = grid.taus, grid.phis, grid.omegas

    coarse = _family_fidelity(
        taus[None, None, :], phis[:, None, None], omegas[None, :, None], omega_K, p.K, gate
    )
    flat = coarse.reshape(-1, len(taus))
    k = min(grid.refine_starts, flat.shape[0])
    top = np.argsort(-flat, axis=0, kind="stable")[:k]  # (k, n_tau)
    phi0 = phis[top // len(omegas)]
    om0 = omegas[top % len(omegas)]
    tt = np.broadcast_to(taus, phi0.shape)

    def objective(x, y):
        return _family_fidelity(tt, x, y, omega_K, p.K, gate)

    hx = np.full(phi0.shape, 0.5 * (phis[1] - phis[0]))
    hy = np.full(phi0.shape, 0.5 * (omegas[1] - omegas[0]))
    phi_r, om_r, f_r = _pattern_search(objective, phi0, om0, hx, hy)
    best_start = np.argmax(f_r, axis=0)
    cols = np.arange(len(taus))
    fmax = f_r[best_start, cols]

    threshold = grid.fidelity_target - grid.tolerance
    hits = np.nonzero(fmax >= threshold)[0]
    hit = bool(hits.size)
    j = int(hits[0]) if hit else int(np.argmax(fmax))
    i = best_start[j]
    phi_b, om_b, tau_b = float(phi_r[i, j]), float(om_r[i, j]), float(taus[j])

    # theta0 only enters through the transverse phase; confirm with the 8x8 trace
    checks = []
    for th in grid.theta0s:
        c = constants_from_angle(phi_b, om_b, omega_K, tau_b, float(th))
        params = ModelParams.for_constants(p.K, c)
        checks.append(fidelity(propagator(tau_b, params, c, gate.frame), gate.matrix))
    return ScanResult(
        hit=hit,
        best_tau=tau_b,
        best_constants=constants_from_angle(phi_b, om_b, omega_K, tau_b),
        best_fidelity=float(fmax[j]),
        taus=taus,
        max_fidelity=fmax,
        theta0_spread=float(max(checks) - min(checks)),
    )


def fidelity_trace(p: ModelParams, c: ControlConstants, samples: int, target_kind) -> tuple[np.ndarray, np.ndarray]:
    """8x8 trace fidelity of the closed-form propagator on a uniform grid in ``[0, tau_star]``."""
    if samples < 2:
        raise ValueError("samples must be at least 2")
    gate = target_kind if isinstance(target_kind, TargetGate) else target(target_kind)
    taus = np.linspace(0.0, c.tau_star, samples)
    fids = np.array([fidelity(propagator(t, p, c, gate.frame), gate.matrix) for t in taus])
    return taus, fids
