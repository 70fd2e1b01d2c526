"""Thermodynamic kernels along simple waves.

Across a rarefaction the entropy S = ln(p) - Gamma*ln(rho) and the tangential
momentum-like invariant V_t = h*W*v are constant, and the axial velocity obeys

    d(atanh u) = -/+ phi dp,     phi = sqrt(h^2 + V_t^2 (1-cs^2)) /
                                       (rho cs (h^2 + V_t^2))

(upper sign: slowest-family wave).  Parameterized by sound speed c along an
isentrope with fixed V_t, atanh(u) changes by the integral of

    g(c, V_t) = 2 h sqrt(h^2 + V_t^2 (1-c^2)) / ((h^2 + V_t^2)(Gamma-1-c^2))

with h(c) = (Gamma-1)/(Gamma-1-c^2) and rho proportional to
(c^2/(Gamma-1-c^2))^{1/(Gamma-1)}.  For V_t = 0 the integral has the closed
form G = (2/sqrt(Gamma-1)) atanh(c/sqrt(Gamma-1)).

Entropy and tangential perturbations feed back on the axial invariant with
coefficients K_S = g*c/(2*Gamma*h) and K_V = integral_0^c dg/dV_t dc'.

Everything here accepts complex sound speeds/pressures so that derivative
chains can be formed by complex-step differentiation.
"""

import numpy as np

from .state import RHO, VX, VY, PRE, DomainError, thermo

_GL_X, _GL_W = np.polynomial.legendre.leggauss(16)


def entropy(rho, p, eos):
    """S = ln p - Gamma ln rho (constant along smooth flow and rarefactions)."""
    return np.log(p) - eos.gamma * np.log(rho)


def vt_invariant(V, eos):
    """V_t = h W v, continuous across every wave except the contact."""
    V = np.asarray(V, dtype=float)
    W, h, _, _, _ = thermo(V, eos)
    return h * W * V[..., VY]


def phi(rho, cs, h, vt):
    """|d(atanh u)/dp| along a rarefaction curve with tangential invariant vt."""
    h2v = h * h + vt * vt
    return np.sqrt(h * h + vt * vt * (1.0 - cs * cs)) / (rho * cs * h2v)


def phi_of_state(V, eos):
    """phi evaluated from a primitive state (vt taken from the state itself)."""
    V = np.asarray(V, dtype=float)
    W, h, _, cs, _ = thermo(V, eos)
    return phi(V[..., RHO], cs, h, h * W * V[..., VY])


def enthalpy_of_c(c, gamma):
    """h = (Gamma-1)/(Gamma-1-c^2) on the sound-speed parameterization."""
    return (gamma - 1.0) / (gamma - 1.0 - c * c)


def density_of_c(c, rho_a, c_a, gamma):
    """Density along the isentrope through (rho_a, c_a), parameterized by c."""
    w = c * c / (gamma - 1.0 - c * c)
    w_a = c_a * c_a / (gamma - 1.0 - c_a * c_a)
    return rho_a * (w / w_a) ** (1.0 / (gamma - 1.0))


def g_kernel(c, vt, gamma):
    """d(atanh u)/dc along an isentrope at fixed tangential invariant vt."""
    h = enthalpy_of_c(c, gamma)
    num = np.sqrt(h * h + vt * vt * (1.0 - c * c))
    return 2.0 * h * num / ((h * h + vt * vt) * (gamma - 1.0 - c * c))


def dg_dvt(c, vt, gamma):
    """Partial derivative of g_kernel with respect to vt."""
    h = enthalpy_of_c(c, gamma)
    dn = h * h + vt * vt
    num = np.sqrt(h * h + vt * vt * (1.0 - c * c))
    return 2.0 * h / (gamma - 1.0 - c * c) * (
        vt * (1.0 - c * c) / num - 2.0 * vt * num / dn
    ) / dn


def _composite_gl(f, a, b, panels):
    """Composite 16-point Gauss-Legendre of f over [a, b] (complex-safe)."""
    a = np.asarray(a)
    b = np.asarray(b)
    total = 0.0
    for k in range(panels):
        lo = a + (b - a) * (k / panels)
        hi = a + (b - a) * ((k + 1) / panels)
        mid = 0.5 * (lo + hi)
        half = 0.5 * (hi - lo)
        x = mid[..., None] + half[..., None] * _GL_X
        total = total + half * np.sum(_GL_W * f(x), axis=-1)
    return total


def G_between(c_from, c_to, vt, gamma, panels=4):
    """Signed integral of g_kernel from c_from to c_to at fixed vt.

    For vt = 0 the closed form (2/sqrt(Gamma-1)) * [atanh(c/sqrt(Gamma-1))]
    is used; it stays exact arbitrarily close to the causal sound-speed
    limit, where the kernel's pole defeats fixed quadrature.
    """
    c_from, c_to, vt = np.broadcast_arrays(
        np.asarray(c_from), np.asarray(c_to), np.asarray(vt)
    )
    zero = vt == 0.0
    if np.all(zero):
        r = np.sqrt(gamma - 1.0)
        return (2.0 / r) * (np.arctanh(c_to / r) - np.arctanh(c_from / r))
    if not np.any(zero):
        return _composite_gl(
            lambda x: g_kernel(x, vt[..., None], gamma), c_from, c_to, panels
        )
    out = np.empty(np.shape(c_from), dtype=np.result_type(c_from, c_to, float))
    out[zero] = G_between(c_from[zero], c_to[zero], 0.0, gamma)
    out[~zero] = G_between(c_from[~zero], c_to[~zero], vt[~zero], gamma, panels)
    return out


def K_S(c, vt, gamma):
    """Entropy-response coefficient g*c/(2*Gamma*h) of the axial invariant."""
    h = enthalpy_of_c(c, gamma)
    return g_kernel(c, vt, gamma) * c / (2.0 * gamma * h)


def K_V(c, vt, gamma, panels=4):
    """Tangential-response coefficient: integral of dg/dvt from 0 to c."""
    c = np.asarray(c)
    vt = np.asarray(vt)
    return _composite_gl(
        lambda x: dg_dvt(x, vt[..., None], gamma), np.zeros_like(c), c, panels
    )


def K_of_state(V, eos):
    """(K_S, K_V, phi) evaluated at a primitive state."""
    V = np.asarray(V, dtype=float)
    W, h, _, cs, _ = thermo(V, eos)
    vt = h * W * V[..., VY]
    return (
        K_S(cs, vt, eos.gamma),
        K_V(cs, vt, eos.gamma),
        phi(V[..., RHO], cs, h, vt),
    )
