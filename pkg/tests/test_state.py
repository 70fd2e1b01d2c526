import numpy as np
import pytest

from srhd import (
    AdmissibilityError,
    DomainError,
    EosConfig,
    admissibility_margin,
    cons_to_prim,
    flux,
    is_admissible,
    lorentz_factor,
    prim_to_cons,
    sound_speed,
    thermo,
)
from conftest import random_primitive


def test_eos_validation():
    assert EosConfig(gamma=1.4).gbar == pytest.approx(1.4 / 0.4)
    with pytest.raises(DomainError):
        EosConfig(gamma=1.0)
    with pytest.raises(DomainError):
        EosConfig(gamma=2.5)


def test_lorentz_factor_values():
    assert lorentz_factor(0.0) == 1.0
    # speed 0.4247 (oblique): W depends only on |v|
    s = 0.4247
    expected = 1.0 / np.sqrt(1.0 - s * s)
    np.testing.assert_allclose(
        lorentz_factor(s * np.sin(np.pi / 3), -s * np.cos(np.pi / 3)),
        expected,
        rtol=1e-15,
    )
    np.testing.assert_allclose(
        lorentz_factor(0.6, 0.6), 1.0 / np.sqrt(0.28), rtol=1e-15
    )
    with pytest.raises(DomainError):
        lorentz_factor(0.8, 0.6)  # |v| = 1


def test_thermo_rest_state(eos53):
    V = np.array([1.0, 0.0, 0.0, 1.0])
    W, h, e, cs, T = thermo(V, eos53)
    assert W == 1.0
    assert h == pytest.approx(3.5, rel=1e-15)  # 1 + e + p/rho with e = 1.5
    assert e == pytest.approx(1.5, rel=1e-15)
    assert cs == pytest.approx(np.sqrt(10.0 / 21.0), rel=1e-15)  # Gamma p/(rho h)
    assert T == pytest.approx(1.5, rel=1e-15)
    assert sound_speed(1.0, 1.0, eos53) == pytest.approx(cs)


def test_prim_to_cons_hand_values(eos53):
    # cold/hot left state (10, 0, 40/3): e = 2, h = 13/3, E = rho h - p = 30
    V = np.array([10.0, 0.0, 0.0, 40.0 / 3.0])
    U = prim_to_cons(V, eos53)
    np.testing.assert_allclose(U, [10.0, 0.0, 0.0, 30.0], rtol=1e-14, atol=0)

    # rest state (1, 0, 0, 1): E = 3.5 - 1 = 2.5
    U = prim_to_cons(np.array([1.0, 0.0, 0.0, 1.0]), eos53)
    np.testing.assert_allclose(U, [1.0, 0.0, 0.0, 2.5], rtol=1e-14, atol=0)

    # boosted state, against the raw defining formulas
    V = np.array([2.0, 0.3, -0.4, 5.0])
    W = 1.0 / np.sqrt(1.0 - 0.3**2 - 0.4**2)
    h = 1.0 + 5.0 / ((5.0 / 3.0 - 1.0) * 2.0) + 5.0 / 2.0
    U = prim_to_cons(V, eos53)
    np.testing.assert_allclose(U[0], 2.0 * W, rtol=1e-14)
    np.testing.assert_allclose(U[1], 2.0 * h * W * W * 0.3, rtol=1e-14)
    np.testing.assert_allclose(U[2], 2.0 * h * W * W * -0.4, rtol=1e-14)
    np.testing.assert_allclose(U[3], 2.0 * h * W * W - 5.0, rtol=1e-14)


def test_admissibility(eos53):
    U = np.array([1.0, 0.5, 0.0, 2.0])
    assert admissibility_margin(U) == pytest.approx(2.0 - np.sqrt(1.25))
    assert is_admissible(U)
    assert not is_admissible(np.array([1.0, 1.5, 0.0, 1.0]))  # E < |m| ... bound
    assert not is_admissible(np.array([-1.0, 0.0, 0.0, 1.0]))  # D <= 0
    ok = is_admissible(np.array([[1.0, 0.0, 0.0, 2.0], [1.0, 0.0, 0.0, 0.5]]))
    np.testing.assert_array_equal(ok, [True, False])


def test_flux_values(eos53):
    # at rest the only nonzero flux entry is the pressure in the momentum slot
    V = np.array([1.0, 0.0, 0.0, 1.0])
    np.testing.assert_allclose(flux(V, 0, eos53), [0.0, 1.0, 0.0, 0.0], atol=0)
    np.testing.assert_allclose(flux(V, 1, eos53), [0.0, 0.0, 1.0, 0.0], atol=0)

    # moving: F1 = (D u, m1 u + p, m2 u, m1); F2 analogous with v and m2
    V = np.array([2.0, 0.3, -0.4, 5.0])
    D, m1, m2, E = prim_to_cons(V, eos53)
    np.testing.assert_allclose(
        flux(V, 0, eos53), [D * 0.3, m1 * 0.3 + 5.0, m2 * 0.3, m1], rtol=1e-14
    )
    np.testing.assert_allclose(
        flux(V, 1, eos53), [D * -0.4, m1 * -0.4, m2 * -0.4 + 5.0, m2], rtol=1e-14
    )


def test_cons_to_prim_hand_values(eos53):
    V = cons_to_prim(np.array([10.0, 0.0, 0.0, 30.0]), eos53)
    np.testing.assert_allclose(V, [10.0, 0.0, 0.0, 40.0 / 3.0], rtol=1e-12, atol=0)
    V = cons_to_prim(np.array([1.0, 0.0, 0.0, 2.5]), eos53)
    np.testing.assert_allclose(V, [1.0, 0.0, 0.0, 1.0], rtol=1e-12, atol=0)


def test_cons_to_prim_rejects_inadmissible(eos53):
    with pytest.raises(AdmissibilityError):
        cons_to_prim(np.array([1.0, 1.5, 0.0, 1.0]), eos53)
    with pytest.raises(AdmissibilityError):
        cons_to_prim(np.array([0.0, 0.0, 0.0, 1.0]), eos53)


@pytest.mark.parametrize("gamma", [5.0 / 3.0, 4.0 / 3.0, 1.4])
def test_roundtrip_random_states(gamma):
    """V -> U -> V and U -> V -> U over a wide admissible sample.

    The pressure produced by the inverse map inherits the conditioning of the
    energy equation: a relative energy perturbation of machine size maps to a
    pressure error of order eps * E / (gbar - 1), which dwarfs 1e-11 * p for
    high-W low-p states.  The pressure check therefore uses the floor
    max(1e-11 * p, 64 * eps * E); the reconverted conservative state is held
    to a strict 1e-11 relative tolerance.
    """
    eos = EosConfig(gamma=gamma)
    rng = np.random.default_rng(42)
    V = random_primitive(rng, 1000)
    U = prim_to_cons(V, eos)
    V2 = cons_to_prim(U, eos)

    eps = np.finfo(float).eps
    p_tol = np.maximum(1e-11 * V[:, 3], 64.0 * eps * U[:, 3])
    assert np.all(np.abs(V2[:, 3] - V[:, 3]) <= p_tol)
    np.testing.assert_allclose(V2[:, 0], V[:, 0], rtol=1e-9)
    vel_err = np.abs(V2[:, 1:3] - V[:, 1:3]).max(axis=1)
    assert np.all(vel_err <= 1e-11 * np.maximum(1.0, np.abs(V[:, 1:3]).max(axis=1)))

    U2 = prim_to_cons(V2, eos)
    scale = np.abs(U).max(axis=1, keepdims=True)
    assert np.all(np.abs(U2 - U) <= 1e-11 * scale)


def test_cons_to_prim_extreme_states(eos53):
    # very low pressure at high Lorentz factor
    V = np.array([1.0, np.sqrt(1.0 - 1.0 / 100.0), 0.0, 1e-6])
    U = prim_to_cons(V, eos53)
    V2 = cons_to_prim(U, eos53)
    np.testing.assert_allclose(V2[0], V[0], rtol=1e-10)
    np.testing.assert_allclose(V2[1], V[1], rtol=1e-12)
    # pressure recovered to within the energy-conditioning floor
    assert abs(V2[3] - V[3]) <= 64 * np.finfo(float).eps * U[3]

    # very high pressure ratio
    V = np.array([1.0, 0.0, 0.0, 1e3])
    np.testing.assert_allclose(cons_to_prim(prim_to_cons(V, eos53), eos53), V, rtol=1e-11)


def test_cons_to_prim_batch_shapes(eos53):
    rng = np.random.default_rng(7)
    V = random_primitive(rng, 12).reshape(3, 4, 4)
    U = prim_to_cons(V, eos53)
    assert U.shape == (3, 4, 4)
    V2 = cons_to_prim(U, eos53)
    np.testing.assert_allclose(V2[..., 0], V[..., 0], rtol=1e-9)
