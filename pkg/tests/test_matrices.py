import numpy as np
import pytest

from srhd import EosConfig, flux, prim_to_cons, thermo
from srhd.matrices import (
    char_speeds,
    dF_dV,
    dU_dV,
    eigensystem,
    eigensystem_conservative,
    flux_jacobian,
    max_signal_speed,
    quasilinear_matrix,
)
from conftest import random_primitive


def _fd_jacobian(f, V, rel=1e-7):
    """Central-difference Jacobian of f: R^4 -> R^4 at V."""
    J = np.empty((4, 4))
    for j in range(4):
        d = rel * max(abs(V[j]), 1e-3)
        Vp, Vm = V.copy(), V.copy()
        Vp[j] += d
        Vm[j] -= d
        J[:, j] = (f(Vp) - f(Vm)) / (2.0 * d)
    return J


def test_quasilinear_rest_state(eos53):
    V = np.array([1.0, 0.0, 0.0, 1.0])
    A = quasilinear_matrix(V, 0, eos53)
    rho, h = 1.0, 3.5
    cs2 = 10.0 / 21.0
    expected = np.zeros((4, 4))
    expected[0, 1] = rho
    expected[1, 3] = 1.0 / (rho * h)
    expected[3, 1] = rho * h * cs2
    np.testing.assert_allclose(A, expected, rtol=1e-14, atol=1e-16)

    B = quasilinear_matrix(V, 1, eos53)
    expected_B = np.zeros((4, 4))
    expected_B[0, 2] = rho
    expected_B[2, 3] = 1.0 / (rho * h)
    expected_B[3, 2] = rho * h * cs2
    np.testing.assert_allclose(B, expected_B, rtol=1e-14, atol=1e-16)


def test_axis_swap_identity(eos53):
    """B(rho,u,v,p) equals P A(rho,v,u,p) P with P the velocity swap."""
    rng = np.random.default_rng(3)
    V = random_primitive(rng, 50, wmax=5.0)
    P = np.eye(4)[[0, 2, 1, 3]]
    B = quasilinear_matrix(V, 1, eos53)
    A_sw = quasilinear_matrix(V[:, [0, 2, 1, 3]], 0, eos53)
    np.testing.assert_allclose(B, P @ A_sw @ P, rtol=1e-13, atol=1e-13)


def test_jacobians_against_finite_differences(eos53):
    rng = np.random.default_rng(11)
    Vs = random_primitive(rng, 20, wmax=3.0, p_lo=1e-2, p_hi=10.0, rho_lo=0.1, rho_hi=10.0)
    for V in Vs:
        M = dU_dV(V, eos53)
        M_fd = _fd_jacobian(lambda x: prim_to_cons(x, eos53), V)
        np.testing.assert_allclose(M, M_fd, rtol=2e-6, atol=2e-6 * np.abs(M).max())
        for axis in (0, 1):
            A = dF_dV(V, axis, eos53)
            A_fd = _fd_jacobian(lambda x: flux(x, axis, eos53), V)
            np.testing.assert_allclose(A, A_fd, rtol=2e-6, atol=2e-6 * np.abs(A).max())


def test_quasilinear_equals_jacobian_product(eos53):
    """A(V) = (dU/dV)^{-1} dF/dV ties the printed matrix to both Jacobians."""
    rng = np.random.default_rng(13)
    V = random_primitive(rng, 200, wmax=8.0)
    for axis in (0, 1):
        A = quasilinear_matrix(V, axis, eos53)
        M = dU_dV(V, eos53)
        Jf = dF_dV(V, axis, eos53)
        resid = M @ A - Jf
        scale = np.abs(Jf).max(axis=(-1, -2), keepdims=True)
        assert np.abs(resid / scale).max() < 1e-12


def test_flux_jacobian_consistency(eos53):
    rng = np.random.default_rng(17)
    V = random_primitive(rng, 100, wmax=5.0)
    for axis in (0, 1):
        Ju = flux_jacobian(V, axis, eos53)
        M = dU_dV(V, eos53)
        Jf = dF_dV(V, axis, eos53)
        resid = Ju @ M - Jf
        scale = np.abs(Jf).max(axis=(-1, -2), keepdims=True)
        assert np.abs(resid / scale).max() < 1e-10


def test_rest_state_eigenvalues(eos53):
    V = np.array([1.0, 0.0, 0.0, 1.0])
    lam, R, Rinv, Hcap = eigensystem(V, 0, eos53)
    cs = np.sqrt(10.0 / 21.0)
    np.testing.assert_allclose(lam, [-cs, 0.0, 0.0, cs], rtol=1e-14, atol=1e-15)
    assert Hcap == pytest.approx(1.0)
    np.testing.assert_allclose(R @ Rinv, np.eye(4), atol=1e-14)


@pytest.mark.parametrize("gamma", [5.0 / 3.0, 4.0 / 3.0, 1.4])
def test_eigendecomposition_residual(gamma):
    """A R = R diag(lambda) and R Rinv = I to 1e-12 over random states, both axes."""
    eos = EosConfig(gamma=gamma)
    rng = np.random.default_rng(29)
    V = random_primitive(rng, 1000)
    eye = np.eye(4)
    for axis in (0, 1):
        A = quasilinear_matrix(V, axis, eos)
        lam, R, Rinv, _ = eigensystem(V, axis, eos)
        resid = A @ R - R * lam[:, None, :]
        scale = np.abs(A).max(axis=(-1, -2), keepdims=True) * np.abs(R).max(
            axis=(-1, -2), keepdims=True
        )
        assert np.abs(resid / scale).max() < 1e-12
        inv_resid = R @ Rinv - eye
        assert np.abs(inv_resid).max() < 1e-12 * np.abs(R).max() * np.abs(Rinv).max()


def test_char_speeds_match_eigenvalues(eos53):
    rng = np.random.default_rng(31)
    V = random_primitive(rng, 100, wmax=9.0)
    for axis in (0, 1):
        lam, _, _, _ = eigensystem(V, axis, eos53)
        lam1, lam4 = char_speeds(V, axis, eos53)
        np.testing.assert_allclose(lam1, lam[:, 0], rtol=1e-14)
        np.testing.assert_allclose(lam4, lam[:, 3], rtol=1e-14)
        ms = max_signal_speed(V, axis, eos53)
        np.testing.assert_allclose(ms, np.abs(lam[:, [0, 3]]).max(axis=1), rtol=1e-14)
        assert np.all(np.abs(lam) < 1.0)  # causality


def test_eigenvalue_ordering_and_middle(eos53):
    rng = np.random.default_rng(37)
    V = random_primitive(rng, 200)
    lam, _, _, _ = eigensystem(V, 0, eos53)
    assert np.all(lam[:, 0] <= lam[:, 1] + 1e-15)
    assert np.all(lam[:, 2] <= lam[:, 3] + 1e-15)
    np.testing.assert_array_equal(lam[:, 1], V[:, 1])
    np.testing.assert_array_equal(lam[:, 2], V[:, 1])


def test_conservative_eigensystem(eos53):
    rng = np.random.default_rng(41)
    V = random_primitive(rng, 200, wmax=6.0, p_lo=1e-3, p_hi=1e2, rho_lo=1e-2, rho_hi=1e2)
    for axis in (0, 1):
        Ju = flux_jacobian(V, axis, eos53)
        lam, Rc, Lc = eigensystem_conservative(V, axis, eos53)
        resid = Ju @ Rc - Rc * lam[:, None, :]
        scale = np.abs(Ju).max(axis=(-1, -2), keepdims=True) * np.abs(Rc).max(
            axis=(-1, -2), keepdims=True
        )
        assert np.abs(resid / scale).max() < 1e-10
        inv_resid = Lc @ Rc - np.eye(4)
        cond = np.abs(Lc).max(axis=(-1, -2)) * np.abs(Rc).max(axis=(-1, -2))
        assert np.abs(inv_resid).max(axis=(-1, -2)).max() < 1e-12 * max(cond.max(), 1.0)
