import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from isingqb.analytic import (
    _sin_over,
    coupling_offsets,
    diagonal_overlap,
    overlap_fidelity,
    propagator_closed_form,
    propagator_rotated,
    spectral_constants,
    trig_profile,
)
from isingqb.errors import InfeasibleError
from isingqb.model import ControlConstants, ModelParams, SIGMA2, target
from isingqb.operators import (
    expm_hermitian,
    fidelity,
    pauli_product,
    unitarity_residual,
)

SQ83 = math.sqrt(8 / 3)
TAU_OPT = math.pi * math.sqrt(3 / 8)
US13_OPT = ControlConstants(B0=math.sqrt(5 / 3), Bz=1 - SQ83, Omega=-2 * SQ83, tau_star=TAU_OPT)
CNOT13_OPT = ControlConstants(B0=math.sqrt(5 / 3), Bz=SQ83 - 1, Omega=2 * SQ83, tau_star=TAU_OPT)


def params_for(c, K=1.0):
    return ModelParams.for_constants(K, c)


def test_b_for_static_field():
    c = ControlConstants(B0=1.5, Bz=0.0, Omega=0.0, tau_star=1.0)
    spec = spectral_constants(ModelParams(1.0), c)
    np.testing.assert_allclose(spec.b, [2 / 1.5, 0, 0, -2 / 1.5], atol=1e-15)


@settings(max_examples=50, deadline=None)
@given(st.floats(0.2, 2.0), st.floats(0.1, 3.0), st.floats(-3, 3), st.floats(-8, 8))
def test_b_differences(K, B0, Bz, Omega):
    c = ControlConstants(B0=B0, Bz=Bz, Omega=Omega, tau_star=1.0)
    spec = spectral_constants(ModelParams(K), c)
    assert spec.b[0] - spec.b[3] == pytest.approx(2 * (1 + K) / spec.omega_K)
    assert spec.b[1] - spec.b[2] == pytest.approx(2 * (1 - K) / spec.omega_K)
    tp = trig_profile(spec, 1.3)
    np.testing.assert_allclose((spec.omega * tp.s) ** 2 + tp.c**2, 1.0, atol=1e-12)


def test_zero_field_is_infeasible():
    c = ControlConstants(B0=0.0, Bz=0.0, Omega=1.0, tau_star=1.0)
    with pytest.raises(InfeasibleError):
        spectral_constants(ModelParams(1.0), c)


def test_sin_over_small_frequency():
    assert _sin_over(0.0, 2.0) == pytest.approx(2.0)
    assert _sin_over(1e-9, 2.0) == pytest.approx(2.0)
    assert _sin_over(1e-6, 2.0) == pytest.approx(math.sin(2e-6) / 1e-6, rel=1e-14)


def test_optimum_phases_are_multiples_of_pi():
    spec = spectral_constants(ModelParams(1.0), US13_OPT)
    np.testing.assert_allclose(np.sort(spec.omega * TAU_OPT / math.pi), [1, 1, 1, 2], atol=1e-12)
    np.testing.assert_allclose(spec.omega * TAU_OPT / math.pi, [2, 1, 1, 1], atol=1e-12)


def test_identity_at_zero():
    np.testing.assert_allclose(propagator_closed_form(0.0, ModelParams(0.7), US13_OPT), np.eye(8), atol=1e-15)
    np.testing.assert_allclose(propagator_rotated(0.0, ModelParams(0.7), US13_OPT), np.eye(8), atol=1e-15)


def test_static_field_matches_matrix_exponential():
    c = ControlConstants(B0=0.8, Bz=-0.4, Omega=0.0, tau_star=1.0)
    p = params_for(c, 1.3)
    h = (pauli_product("z", "z", "I") + 1.3 * pauli_product("I", "z", "z")
         + 0.8 * SIGMA2[0] - 0.4 * SIGMA2[2])
    np.testing.assert_allclose(propagator_closed_form(1.7, p, c), expm_hermitian(1.7 * h), atol=1e-12)


def test_rotating_frame_composition():
    c = ControlConstants(B0=1.1, Bz=0.3, Omega=2.2, tau_star=1.0, theta0=0.5)
    p = params_for(c, 0.9)
    tau = 1.4
    sz2 = SIGMA2[2]
    h_tilde = (pauli_product("z", "z", "I") + 0.9 * pauli_product("I", "z", "z")
               + 1.1 * SIGMA2[0] + (0.3 - 1.1) * sz2)
    lhs = expm_hermitian(-c.theta(tau) / 2 * sz2) @ propagator_closed_form(tau, p, c)
    rhs = expm_hermitian(h_tilde * tau) @ expm_hermitian(-c.theta0 / 2 * sz2)
    np.testing.assert_allclose(lhs, rhs, atol=1e-12)


def test_unitarity_over_random_draws():
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(100):
        c = ControlConstants(B0=rng.uniform(0, 3), Bz=rng.uniform(-3, 3), Omega=rng.uniform(-8, 8),
                             tau_star=1.0, theta0=rng.uniform(0, 2 * np.pi))
        p = ModelParams(rng.uniform(0.3, 1.7))
        worst = max(worst, unitarity_residual(propagator_closed_form(rng.uniform(0, 3), p, c)))
    assert worst <= 1e-10


def test_commutes_with_outer_z():
    c = ControlConstants(B0=0.9, Bz=0.2, Omega=-1.0, tau_star=1.0, theta0=1.0)
    u = propagator_closed_form(2.1, ModelParams(1.2), c)
    for op in (pauli_product("z", "I", "I"), pauli_product("I", "I", "z")):
        assert np.max(np.abs(u @ op - op @ u)) < 1e-14


def test_us13_reached_at_optimum():
    u = propagator_closed_form(TAU_OPT, params_for(US13_OPT), US13_OPT)
    assert fidelity(u, target("us13").matrix) == pytest.approx(1.0, abs=1e-10)


def test_cnot13_reached_in_rotated_frame():
    p = params_for(CNOT13_OPT)
    u = propagator_rotated(TAU_OPT, p, CNOT13_OPT)
    assert fidelity(u, target("cnot13").matrix) == pytest.approx(1.0, abs=1e-10)
    u0 = propagator_closed_form(TAU_OPT, p, CNOT13_OPT)
    np.testing.assert_allclose(np.sort_complex(np.linalg.eigvals(u)), np.sort_complex(np.linalg.eigvals(u0)), atol=1e-10)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.3, 1.7), st.floats(0.1, 3.0), st.floats(-3, 3), st.floats(-8, 8),
       st.floats(0.05, 2.5), st.floats(0, 6.28))
def test_overlap_equals_trace_fidelity(K, B0, Bz, Omega, tau, theta0):
    c = ControlConstants(B0=B0, Bz=Bz, Omega=Omega, tau_star=tau, theta0=theta0)
    p = ModelParams(K)
    for kind in ("us13", "cnot13"):
        g = target(kind)
        u = propagator_rotated(tau, p, c) if kind == "cnot13" else propagator_closed_form(tau, p, c)
        assert overlap_fidelity(tau, K, B0, Bz, Omega, g) == pytest.approx(fidelity(u, g.matrix), abs=1e-10)


def test_diagonal_overlap_broadcasts():
    taus = np.linspace(0.1, 2.0, 5)
    vals = diagonal_overlap(taus, 1.0, 1.2, 0.3, 2.0, [1, 1, 1, -1])
    assert vals.shape == (5,)
    assert vals[2] == pytest.approx(diagonal_overlap(taus[2], 1.0, 1.2, 0.3, 2.0, [1, 1, 1, -1]))


def test_coupling_offsets():
    np.testing.assert_allclose(coupling_offsets(0.5), [1.5, 0.5, -0.5, -1.5])
