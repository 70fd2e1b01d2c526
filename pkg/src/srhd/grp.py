"""Analytical resolution of the generalized Riemann problem at a cell face.

Given the two limiting primitive states at a face, their spatial slopes, and
a source vector for the conservative system, resolve the wave fan and return
both the face state at t -> 0+ and its exact time derivative along the face.
The time derivative is what lifts a piecewise-linear finite-volume update
from second to higher order: the face flux can be advanced in time without
any extra Riemann solves.

The resolution splits into three regimes:

* identical data on both sides -- the smooth quasilinear system evaluated
  directly;
* a relative jump at rounding level (below ``jump_tol``) -- a linearized
  (acoustic) resolution around the mean state;
* a genuine jump -- the full nonlinear treatment: the exact Riemann solution
  fixes the wave pattern, then each outer wave contributes one linear
  relation between the material derivatives of pressure and normal velocity
  at the contact.  Rarefactions carry the relation through the fan by
  integrating characteristic compatibility kernels; shocks carry it by
  differentiating the jump conditions along the shock trajectory.

Everything is batched over leading axes; per-branch work runs on gathered
subsets.
"""

from __future__ import annotations

import functools

import numpy as np
from numpy.polynomial import chebyshev as _cheb
from typing import NamedTuple

from .matrices import char_speeds, dU_dV, eigensystem, quasilinear_matrix
from .riemann import solve_star
from .state import PRE, RHO, VX, VY, prim_to_cons, sound_speed, thermo
from .waves import (
    G_between,
    K_V,
    density_of_c,
    dg_dvt,
    enthalpy_of_c,
    g_kernel,
    phi,
)


class QuasiSourceTerms(NamedTuple):
    """Source vector in primitive and characteristic form."""

    C: np.ndarray   # source of the primitive quasilinear system (..., 4)
    B1: np.ndarray  # source along the slow acoustic characteristic
    B2: np.ndarray  # source along the fast acoustic characteristic
    B3: np.ndarray  # entropy production T dS/dt following the flow
    B4: np.ndarray  # drift of the tangential-velocity invariant h W v


class GrpCoefficients(NamedTuple):
    """One linear relation per outer wave: a*du/dt|_m + b*dp/dt|_m = d."""

    a_L: np.ndarray
    b_L: np.ndarray
    d_L: np.ndarray
    a_R: np.ndarray
    b_R: np.ndarray
    d_R: np.ndarray


class GrpResolution(NamedTuple):
    """Face state at t -> 0+ with its time derivative, plus shock speeds.

    ``s_L``/``s_R`` hold the outer wave speed where that wave is a shock and
    NaN otherwise (the adaptive-update shock sensor needs them).
    """

    V: np.ndarray
    U: np.ndarray
    dVdt: np.ndarray
    dUdt: np.ndarray
    s_L: np.ndarray
    s_R: np.ndarray


_MIRROR_V = np.array([1.0, -1.0, 1.0, 1.0])   # state under x -> -x
_MIRROR_D = np.array([-1.0, 1.0, -1.0, -1.0])  # slope under x -> -x


def _mirror_state(V):
    return V * _MIRROR_V


def _mirror_slope(dV):
    return dV * _MIRROR_D


def _bundle(V, eos):
    """Pointwise thermodynamic quantities reused across the formulas."""
    rho, u, v, p = V[..., RHO], V[..., VX], V[..., VY], V[..., PRE]
    W, h, _, cs, T = thermo(V, eos)
    u2, v2 = u * u, v * v
    cs2 = cs * cs
    return {
        "rho": rho, "u": u, "v": v, "p": p,
        "W": W, "W2": W * W, "h": h, "cs": cs, "cs2": cs2, "T": T,
        "u2": u2, "Q": 1.0 - (u2 + v2) * cs2, "Hcap": 1.0 - u2 - v2 * cs2,
        "vt": h * W * v,
    }


def source_to_primitive(h_vec, V, eos):
    """Convert a conservative-system source vector to primitive form.

    Solves dU/dV * C = h in closed form, so that smooth solutions obey
    dV/dt + A dV/dx = C.
    """
    V = np.asarray(V, dtype=float)
    h_vec = np.asarray(h_vec, dtype=float)
    b = _bundle(V, eos)
    g = eos.gamma
    h1, h2, h3, h4 = (h_vec[..., k] for k in range(4))
    u, v = b["u"], b["v"]
    rhw2 = b["rho"] * b["h"] * b["W2"]
    C4 = (
        h4 * (g - 1.0 + (u * u + v * v) * b["cs2"])
        - ((g - 1.0) / b["W"]) * h1
        - (b["cs2"] + g - 1.0) * (u * h2 + v * h3)
    ) / b["Q"]
    C2 = (h2 - u * h4 - u * C4) / rhw2
    C3 = (h3 - v * h4 - v * C4) / rhw2
    C1 = h1 / b["W"] - b["W2"] * b["rho"] * (u * C2 + v * C3)
    return np.stack([C1, C2, C3, C4], axis=-1)


def _entropy_drift(h_vec, V, eos):
    """B3 = T dS/dt following the flow, directly from the source vector."""
    b = _bundle(V, eos)
    h1, h2, h3, h4 = (h_vec[..., k] for k in range(4))
    return (h4 - b["u"] * h2 - b["v"] * h3 - (b["h"] / b["W"]) * h1) / b["rho"]


def _tangential_drift(h_vec, V, eos):
    """B4 = d(hWv)/dt following the flow, directly from the source vector."""
    b = _bundle(V, eos)
    h1, h3 = h_vec[..., 0], h_vec[..., 2]
    return -(b["h"] * b["v"] / b["rho"]) * h1 + h3 / (b["rho"] * b["W"])


def characteristic_sources(V, h_vec, eos):
    """Source terms of the characteristic form of the quasilinear system."""
    from .waves import K_of_state

    V = np.asarray(V, dtype=float)
    h_vec = np.broadcast_to(np.asarray(h_vec, dtype=float), V.shape)
    b = _bundle(V, eos)
    C = source_to_primitive(h_vec, V, eos)
    B3 = _entropy_drift(h_vec, V, eos)
    B4 = _tangential_drift(h_vec, V, eos)
    ks, kv, ph = K_of_state(V, eos)
    adv = C[..., VX] / (1.0 - b["u2"])
    rest = ph * C[..., PRE] + (ks / b["T"]) * B3 + kv * B4
    return QuasiSourceTerms(C, adv - rest, adv + rest, B3, B4)


def _ts_slope(V, dV, eos):
    """T dS/dx from primitive slopes."""
    b = _bundle(V, eos)
    return (dV[..., PRE] - b["h"] * b["cs2"] * dV[..., RHO]) / (
        (eos.gamma - 1.0) * b["rho"]
    )


def _vt_slope(V, dV, eos):
    """d(hWv)/dx from primitive slopes."""
    b = _bundle(V, eos)
    dh = eos.gbar * (dV[..., PRE] / b["rho"] - b["p"] * dV[..., RHO] / b["rho"] ** 2)
    return (
        b["W"] * b["v"] * dh
        + b["vt"] * b["W2"] * b["u"] * dV[..., VX]
        + b["h"] * b["W"] * (1.0 + b["W2"] * b["v"] ** 2) * dV[..., VY]
    )


def _smooth_derivative(V, dV, h_vec, eos):
    """Time derivative of a smooth solution: dV/dt = C - A dV/dx."""
    C = source_to_primitive(h_vec, V, eos)
    A = quasilinear_matrix(V, 0, eos)
    return C - np.einsum("...ij,...j->...i", A, dV)


# ---------------------------------------------------------------------------
# shock side: differentiate the jump conditions along the shock trajectory
# ---------------------------------------------------------------------------


def _shock_jump_gradient(V, s, eos):
    """Gradient of the shock-frame flux vector g(V; s).

    g = (rho W (u-s), rho h W^2 u (u-s) + p, rho h W^2 v (u-s),
         rho h W^2 (u-s) + s p); the jump conditions read g(V_b;s) = g(V_a;s).
    Returns (A, c) with A = dg/d(rho,u,v,p) and c = dg/ds.
    """
    b = _bundle(V, eos)
    rho, u, v, p = b["rho"], b["u"], b["v"], b["p"]
    W, W2, h = b["W"], b["W2"], b["h"]
    W4 = W2 * W2
    us = u - s
    gbar = eos.gbar
    zeros = np.zeros_like(rho)
    d_rho = np.stack([W * us, W2 * u * us, W2 * v * us, W2 * us], axis=-1)
    d_u = np.stack(
        [
            rho * W * (W2 * u * us + 1.0),
            rho * h * (2.0 * W4 * u * u * us + W2 * (2.0 * u - s)),
            rho * h * v * (2.0 * W4 * u * us + W2),
            rho * h * (2.0 * W4 * u * us + W2),
        ],
        axis=-1,
    )
    d_v = np.stack(
        [
            rho * W * W2 * v * us,
            2.0 * rho * h * W4 * u * v * us,
            rho * h * W2 * us * (1.0 + 2.0 * W2 * v * v),
            2.0 * rho * h * W4 * v * us,
        ],
        axis=-1,
    )
    d_p = np.stack(
        [
            zeros,
            gbar * W2 * u * us + 1.0,
            gbar * W2 * v * us,
            gbar * W2 * us + s,
        ],
        axis=-1,
    )
    A = np.stack([d_rho, d_u, d_v, d_p], axis=-1)  # (..., 4 rows, 4 cols)
    c = np.stack(
        [-rho * W, -rho * h * W2 * u, -rho * h * W2 * v, -rho * h * W2 + p],
        axis=-1,
    )
    return A, c


def _null_vector(x, y, z):
    """Vector orthogonal to three given 4-vectors (generalized cross product)."""
    M = np.stack([x, y, z], axis=-2)  # (..., 3, 4)
    keep = [[1, 2, 3], [0, 2, 3], [0, 1, 3], [0, 1, 2]]
    dets = [np.linalg.det(M[..., cols]) for cols in keep]
    w = np.stack([dets[0], -dets[1], dets[2], -dets[3]], axis=-1)
    norm = np.max(np.abs(w), axis=-1, keepdims=True)
    return w / np.maximum(norm, 1e-300)


def shock_relations(V_a, dV_a, V_b, s, h_vec, eos):
    """Relation a*du/dt|_m + b*dp/dt|_m = d carried across a right-facing shock.

    ``V_a`` is the smooth state ahead (right of) the shock with slope
    ``dV_a``; ``V_b`` the state behind it (the star side); ``s`` the shock
    speed.  A left-facing shock is handled by mirroring the inputs and
    negating the returned ``a``.
    """
    A_b, c_b = _shock_jump_gradient(V_b, s, eos)
    A_a, c_a = _shock_jump_gradient(V_a, s, eos)
    C_a = source_to_primitive(h_vec, V_a, eos)
    At_a = quasilinear_matrix(V_a, 0, eos)
    DsQ_a = C_a + s[..., None] * dV_a - np.einsum("...ij,...j->...i", At_a, dV_a)
    r = np.einsum("...ij,...j->...i", A_a, DsQ_a)
    cdiff = c_b - c_a
    y = _null_vector(A_b[..., 0], A_b[..., 2], cdiff)
    A_u = np.sum(y * A_b[..., 1], axis=-1)
    A_p = np.sum(y * A_b[..., 3], axis=-1)
    A_rhs = np.sum(y * r, axis=-1)

    b = _bundle(V_b, eos)
    C_b = source_to_primitive(h_vec, V_b, eos)
    u, u2 = b["u"], b["u2"]
    rhw2 = b["rho"] * b["h"] * b["W2"]
    hfac = b["Hcap"] / (b["rho"] * b["h"] * b["cs2"])
    f1 = (u - s) / (1.0 - u * s)
    A_us = u * C_b[..., VX] + hfac * C_b[..., PRE]
    A_ps = rhw2 * C_b[..., VX] + u * C_b[..., PRE]
    a_co = A_u + f1 * rhw2 * A_p
    b_co = A_p + f1 * hfac * A_u
    d_co = ((1.0 - u2) / (1.0 - u * s)) * A_rhs + f1 * (A_us * A_u + A_ps * A_p)
    return {
        "a": a_co, "b": b_co, "d": d_co,
        "A_b": A_b, "r": r, "cdiff": cdiff, "s": s,
        "V_a": V_a, "dV_a": dV_a, "V_b": V_b, "h_vec": h_vec,
    }


def _gradient_block_solve(V, udot, pdot, h_vec, eos):
    """Spatial slopes of u and p at a star state from the material derivatives.

    The normal-velocity/pressure rows of the quasilinear system close in
    (u, p); the 2x2 block has determinant (lam1-u)(lam4-u) =
    -cs^2 (1-u^2)/(W^2 Q), which only degenerates as cs -> 0.
    """
    b = _bundle(V, eos)
    C = source_to_primitive(h_vec, V, eos)
    u = b["u"]
    m = -u * b["cs2"] / (b["W2"] * b["Q"])
    a24 = b["Hcap"] / (b["rho"] * b["h"] * b["W2"] * b["Q"])
    a42 = b["rho"] * b["h"] * b["cs2"] / b["Q"]
    det = -b["cs2"] * (1.0 - b["u2"]) / (b["W2"] * b["Q"])
    floor = 1e-12 * (m * m + np.abs(a24 * a42))
    det = np.where(np.abs(det) >= floor, det, -np.maximum(np.abs(det), floor))
    ru = C[..., VX] - udot
    rp = C[..., PRE] - pdot
    dxu = (m * ru - a24 * rp) / det
    dxp = (-a42 * ru + m * rp) / det
    return dxu, dxp


def _shock_side_extras(side, dtu, dtp, udot, pdot, eos):
    """Density and tangential-velocity time derivatives behind a shock."""
    V_b, V_a, dV_a = side["V_b"], side["V_a"], side["dV_a"]
    s, h_vec = side["s"], side["h_vec"]
    A_b, r, cdiff = side["A_b"], side["r"], side["cdiff"]
    b = _bundle(V_b, eos)
    g = eos.gamma
    u = b["u"]

    dxu, dxp = _gradient_block_solve(V_b, udot, pdot, h_vec, eos)
    Dsu = udot + (s - u) * dxu
    Dsp = pdot + (s - u) * dxp
    rhs = r - A_b[..., 1] * Dsu[..., None] - A_b[..., 3] * Dsp[..., None]
    X = np.stack([A_b[..., 0], A_b[..., 2], cdiff], axis=-1)  # (..., 4, 3)
    XtX = np.einsum("...ki,...kj->...ij", X, X)
    Xtr = np.einsum("...ki,...k->...i", X, rhs)
    w = np.linalg.solve(XtX, Xtr[..., None])[..., 0]
    Dsrho = w[..., 0]

    B3_b = _entropy_drift(h_vec, V_b, eos)
    Drho = (pdot - (g - 1.0) * b["rho"] * B3_b) / (b["h"] * b["cs2"])
    dtrho = (s * Drho - u * Dsrho) / (s - u)

    B4_a = _tangential_drift(h_vec, V_a, eos)
    B4_b = _tangential_drift(h_vec, V_b, eos)
    u_a = V_a[..., VX]
    dxvt_a = _vt_slope(V_a, dV_a, eos)
    dxvt_b = (B4_a + (s - u_a) * dxvt_a - B4_b) / (s - u)
    dth = eos.gbar * (dtp / b["rho"] - b["p"] * dtrho / b["rho"] ** 2)
    dtv = (B4_b - u * dxvt_b - b["W"] * b["v"] * dth - b["vt"] * b["W2"] * u * dtu) / (
        b["h"] * b["W"] * (1.0 + b["W2"] * b["v"] ** 2)
    )
    return dtrho, dtv


# ---------------------------------------------------------------------------
# rarefaction side: characteristic compatibility integrals through the fan
# ---------------------------------------------------------------------------


@functools.lru_cache(maxsize=None)
def _cheb_ops(n):
    t = _cheb.chebpts2(n)
    vand = _cheb.chebvander(t, n - 1)
    return t, np.linalg.inv(vand)


def _cum_integral(t, vinv, Y):
    """Antiderivative of nodal values Y (n, K) in t, zero at t = -1."""
    c = vinv @ Y
    ci = _cheb.chebint(c, axis=0)
    vals = np.moveaxis(_cheb.chebval(t, ci), -1, 0)
    return vals - vals[:1]


def _nodal_derivative(t, vinv, Y):
    """dY/dt at the nodes from nodal values Y (n, K)."""
    c = vinv @ Y
    cd = _cheb.chebder(c, axis=0)
    return np.moveaxis(_cheb.chebval(t, cd), -1, 0)


def _fan_pass(V_a, dV_a, c_end, h_vec, eos, n):
    """One fixed-node integration of the fan kernels (native left fan)."""
    g = eos.gamma
    gm1 = g - 1.0
    t, vinv = _cheb_ops(n)
    a = _bundle(V_a, eos)
    rho_a, u_a, p_a, c_a, vt = a["rho"], a["u"], a["p"], a["cs"], a["vt"]

    half = 0.5 * (c_end - c_a)
    mid = 0.5 * (c_end + c_a)
    c_n = mid[None, :] + half[None, :] * t[:, None]  # (n, K)

    h_n = enthalpy_of_c(c_n, g)
    rho_n = density_of_c(c_n, rho_a[None], c_a[None], g)
    p_n = p_a[None] * (rho_n / rho_a[None]) ** g
    vt0 = vt == 0.0
    root = np.sqrt(gm1)
    gv = g_kernel(c_n, vt[None], g)
    atanh_u = np.arctanh(u_a)[None] - np.where(
        vt0[None],
        (2.0 / root) * (np.arctanh(c_n / root) - np.arctanh(c_a[None] / root)),
        _cum_integral(t, vinv, gv * half[None]),
    )
    u_n = np.tanh(atanh_u)
    W_n = np.sqrt((1.0 + (vt[None] / h_n) ** 2) / (1.0 - u_n * u_n))
    v_n = vt[None] / (h_n * W_n)
    V_n = np.stack([rho_n, u_n, v_n, p_n], axis=-1)

    beta, lam4 = char_speeds(V_n, 0, eos)
    dbeta = _nodal_derivative(t, vinv, beta)
    T_n = p_n / (gm1 * rho_n)
    phi_n = phi(rho_n, c_n, h_n, vt[None])
    ks_n = gv * c_n / (2.0 * g * h_n)
    if np.all(vt0):
        kv_n = np.zeros_like(c_n)
    else:
        kv_n = K_V(c_a, vt, g)[None] + _cum_integral(
            t, vinv, dg_dvt(c_n, vt[None], g) * half[None]
        )

    hv = np.broadcast_to(h_vec[None], V_n.shape)
    C_n = source_to_primitive(hv, V_n, eos)
    B3_n = _entropy_drift(hv, V_n, eos)
    B4_n = _tangential_drift(hv, V_n, eos)
    B2_n = (
        C_n[..., VX] / (1.0 - u_n * u_n)
        + phi_n * C_n[..., PRE]
        + (ks_n / T_n) * B3_n
        + kv_n * B4_n
    )

    E2 = _cum_integral(t, vinv, dbeta / (lam4 - beta))
    E1 = E2 + _cum_integral(t, vinv, dbeta / (beta - u_n))

    ts_a = _ts_slope(V_a, dV_a, eos)
    vtx_a = _vt_slope(V_a, dV_a, eos)
    du_head = beta[0] - u_n[0]
    G_S = B3_n[0] + du_head * ts_a
    G_V = B4_n[0] + du_head * vtx_a
    G_psi = (
        B2_n[0]
        + du_head * (ks_n[0] * ts_a / T_n[0] + kv_n[0] * vtx_a)
        + (beta[0] - lam4[0])
        * (dV_a[..., VX] / (1.0 - u_n[0] ** 2) + phi_n[0] * dV_a[..., PRE])
    )

    inner_S = _cum_integral(
        t, vinv, (B3_n / (u_n - beta)) * (T_n[:1] / T_n) * np.exp(E2 - E1) * dbeta
    )
    I_S = (T_n / T_n[:1]) * np.exp(E1) * (G_S[None] + inner_S)
    ts_n = (B3_n - I_S * np.exp(-E2)) / (u_n - beta)

    inner_V = _cum_integral(t, vinv, (B4_n / (u_n - beta)) * np.exp(E2 - E1) * dbeta)
    I_V = np.exp(E1) * (G_V[None] + inner_V)
    vtx_n = (B4_n - I_V * np.exp(-E2)) / (u_n - beta)

    core = B2_n + (lam4 - u_n) * (ks_n * ts_n / T_n + kv_n * vtx_n)
    I_psi = G_psi[None] + _cum_integral(
        t, vinv, (core / (lam4 - beta)) * np.exp(E2) * dbeta
    )

    den = lam4[-1] - beta[-1]
    d_co = (
        ((lam4[-1] - u_n[-1]) / den) * I_psi[-1] * np.exp(-E2[-1])
        + ((u_n[-1] - beta[-1]) / den) * core[-1]
        - (ks_n[-1] / T_n[-1]) * B3_n[-1]
        - kv_n[-1] * B4_n[-1]
    )
    return {
        "a": 1.0 / (1.0 - u_n[-1] ** 2),
        "b": phi_n[-1],
        "d": d_co,
        "V_end": V_n[-1],
        "TSx": ts_n[-1],
        "VTx": vtx_n[-1],
    }


def rarefaction_relations(
    V_a, dV_a, c_end, h_vec, eos, *, tol=1e-10, node_counts=(9, 17, 33, 65)
):
    """Relation a*du/dt|_m + b*dp/dt|_m = d carried across a left-facing fan.

    ``V_a`` is the head (left) state with slope ``dV_a``; ``c_end`` the sound
    speed at which to stop integrating (the fan tail, or the sonic point for
    a transonic fan).  Also returns the downstream entropy and
    tangential-invariant gradients needed for the density and
    tangential-velocity time derivatives.  Node counts double until the
    d-coefficient settles to ``tol``.
    """
    out = _fan_pass(V_a, dV_a, c_end, h_vec, eos, node_counts[0])
    active = np.arange(c_end.shape[-1])
    for n in node_counts[1:]:
        if active.size == 0:
            break
        ref = _fan_pass(V_a[active], dV_a[active], c_end[active], h_vec[active], eos, n)
        err = np.abs(ref["d"] - out["d"][active])
        for key, val in ref.items():
            out[key][active] = val
        active = active[err > tol * np.maximum(1.0, np.abs(ref["d"]))]
    return out


def _fan_side_extras(side, dtu, dtp, h_vec, eos):
    """Density and tangential-velocity time derivatives at a fan tail."""
    V = side["V_end"]
    b = _bundle(V, eos)
    g = eos.gamma
    u = b["u"]
    B3 = _entropy_drift(h_vec, V, eos)
    B4 = _tangential_drift(h_vec, V, eos)
    dtrho = (dtp - (g - 1.0) * b["rho"] * (B3 - u * side["TSx"])) / (b["h"] * b["cs2"])
    dth = eos.gbar * (dtp / b["rho"] - b["p"] * dtrho / b["rho"] ** 2)
    dtv = (B4 - u * side["VTx"] - b["W"] * b["v"] * dth - b["vt"] * b["W2"] * u * dtu) / (
        b["h"] * b["W"] * (1.0 + b["W2"] * b["v"] ** 2)
    )
    return dtrho, dtv


def density_tangential_derivatives(side, dtu, dtp, udot, pdot, eos):
    """Complete a star-side resolution with drho/dt and dv/dt.

    ``side`` is the dict returned by ``shock_relations`` or
    ``rarefaction_relations`` for the sampled side (in that side's own frame);
    the derivative arguments must be given in the same frame.
    """
    if "A_b" in side:
        return _shock_side_extras(side, dtu, dtp, udot, pdot, eos)
    return _fan_side_extras(side, dtu, dtp, side["h_vec"], eos)


# ---------------------------------------------------------------------------
# assembling time derivatives at the face
# ---------------------------------------------------------------------------


def solve_material_derivatives(coeffs, det_floor=1e-14):
    """Solve the 2x2 system formed by the two outer-wave relations."""
    nL = np.maximum(np.abs(coeffs.a_L), np.abs(coeffs.b_L))
    nR = np.maximum(np.abs(coeffs.a_R), np.abs(coeffs.b_R))
    nL = np.maximum(nL, 1e-300)
    nR = np.maximum(nR, 1e-300)
    a1, b1, d1 = coeffs.a_L / nL, coeffs.b_L / nL, coeffs.d_L / nL
    a2, b2, d2 = coeffs.a_R / nR, coeffs.b_R / nR, coeffs.d_R / nR
    det = a1 * b2 - b1 * a2
    det = np.where(np.abs(det) >= det_floor, det, np.where(det < 0, -det_floor, det_floor))
    udot = (d1 * b2 - b1 * d2) / det
    pdot = (a1 * d2 - d1 * a2) / det
    return udot, pdot


def time_derivatives_nonsonic(V_star, udot, pdot, h_vec, eos):
    """du/dt and dp/dt at the face from the material derivatives at the contact."""
    b = _bundle(V_star, eos)
    C = source_to_primitive(h_vec, V_star, eos)
    u = b["u"]
    hfac = b["Hcap"] / (b["rho"] * b["h"] * b["cs2"])
    rhw2 = b["rho"] * b["h"] * b["W2"]
    A_us = u * C[..., VX] + hfac * C[..., PRE]
    A_ps = rhw2 * C[..., VX] + u * C[..., PRE]
    one = 1.0 - b["u2"]
    dtu = (udot + u * hfac * pdot - u * A_us) / one
    dtp = (pdot + u * rhw2 * udot - u * A_ps) / one
    return dtu, dtp


def time_derivatives_sonic(V_sonic, d0, h_vec, eos):
    """du/dt and dp/dt when the face sits inside a left-facing fan."""
    b = _bundle(V_sonic, eos)
    C = source_to_primitive(h_vec, V_sonic, eos)
    _, lam4 = char_speeds(V_sonic, 0, eos)
    u = b["u"]
    ph = phi(b["rho"], b["cs"], b["h"], b["vt"])
    one = 1.0 - b["u2"]
    r4 = lam4 / (lam4 - u)
    r42 = (lam4 - 2.0 * u) / (lam4 - u)
    dtu = 0.5 * one * (r4 * (d0 - ph * C[..., PRE]) + r42 * C[..., VX] / one)
    dtp = (0.5 / ph) * (r4 * (d0 - C[..., VX] / one) + r42 * ph * C[..., PRE])
    return dtu, dtp


def acoustic_derivatives(V_L, V_R, dV_L, dV_R, h_vec, eos):
    """Linearized resolution for jumps at rounding level.

    Returns the face state (upwinded around the mean) and its time
    derivative; exact for equal-slope smooth data.
    """
    Vm = 0.5 * (V_L + V_R)
    b = _bundle(Vm, eos)
    C = source_to_primitive(h_vec, Vm, eos)
    B3 = _entropy_drift(h_vec, Vm, eos)
    B4 = _tangential_drift(h_vec, Vm, eos)
    lam1, lam4 = char_speeds(Vm, 0, eos)
    u = b["u"]
    Nu = b["Hcap"] / (b["rho"] * b["h"] * b["W2"] * b["Q"])
    Np = b["rho"] * b["h"] * b["cs2"] / b["Q"]
    dlam = lam4 - lam1
    mhalf = 0.5 * dlam
    C2, C4 = C[..., VX], C[..., PRE]
    dtu = (
        lam4 * (C2 - mhalf * dV_L[..., VX] - Nu * dV_L[..., PRE])
        - lam1 * (C2 + mhalf * dV_R[..., VX] - Nu * dV_R[..., PRE])
    ) / dlam
    dtp = (
        lam4 * (C4 - mhalf * dV_L[..., PRE] - Np * dV_L[..., VX])
        - lam1 * (C4 + mhalf * dV_R[..., PRE] - Np * dV_R[..., VX])
    ) / dlam

    wL = np.where(u > 0, 1.0, np.where(u < 0, 0.0, 0.5))[..., None]
    dV_X = wL * dV_L + (1.0 - wL) * dV_R
    dtrho = (
        dtp
        + u * (dV_X[..., PRE] - b["h"] * b["cs2"] * dV_X[..., RHO])
        - (eos.gamma - 1.0) * b["rho"] * B3
    ) / (b["h"] * b["cs2"])
    dxvt = _vt_slope(Vm, dV_X, eos)
    dth = eos.gbar * (dtp / b["rho"] - b["p"] * dtrho / b["rho"] ** 2)
    dtv = (B4 - u * dxvt - b["W"] * b["v"] * dth - b["vt"] * b["W2"] * u * dtu) / (
        b["h"] * b["W"] * (1.0 + b["W2"] * b["v"] ** 2)
    )

    lam, R, Rinv, _ = eigensystem(Vm, 0, eos)
    alpha = np.einsum("...ij,...j->...i", Rinv, V_R - V_L)
    V_rp = Vm - 0.5 * np.einsum("...ij,...j->...i", R, np.sign(lam) * alpha)
    return V_rp, np.stack([dtrho, dtu, dtv, dtp], axis=-1)


def _sonic_sound_speed(V_a, c_tail, eos, iters=60):
    """Sound speed at which the slow characteristic in a left fan vanishes."""
    a = _bundle(V_a, eos)
    g = eos.gamma
    rho_a, u_a, p_a, c_a, vt = a["rho"], a["u"], a["p"], a["cs"], a["vt"]
    at = np.arctanh(u_a)
    lo = np.minimum(c_tail, c_a)
    hi = np.maximum(c_tail, c_a)
    for _ in range(iters):
        c = 0.5 * (lo + hi)
        rho = density_of_c(c, rho_a, c_a, g)
        p = p_a * (rho / rho_a) ** g
        h = enthalpy_of_c(c, g)
        u = np.tanh(at + G_between(c, c_a, vt, g))
        W = np.sqrt((1.0 + (vt / h) ** 2) / (1.0 - u * u))
        v = vt / (h * W)
        V = np.stack([rho, u, v, p], axis=-1)
        lam1, _ = char_speeds(V, 0, eos)
        up = lam1 > 0.0  # slow speed falls with c: root lies at larger c
        lo = np.where(up, c, lo)
        hi = np.where(up, hi, c)
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# dispatcher
# ---------------------------------------------------------------------------


def _resolve_full(Vl, Vr, dVl, dVr, hv, eos, shock_tol):
    """Full nonlinear resolution on a flat batch with genuine jumps."""
    K = Vl.shape[0]
    fan = solve_star(Vl, Vr, eos)
    p_star, u_star = fan.p_star, fan.u_star
    shkL = p_star > Vl[:, PRE] * (1.0 + shock_tol)
    shkR = p_star > Vr[:, PRE] * (1.0 + shock_tol)

    V_rp = np.empty((K, 4))
    dVdt = np.empty((K, 4))
    s_L = np.where(shkL, fan.head_L, np.nan)
    s_R = np.where(shkR, fan.head_R, np.nan)

    in_L = fan.head_L > 0.0
    in_R = (fan.head_R < 0.0) & ~in_L
    mid = ~in_L & ~in_R
    son_L = mid & ~shkL & (fan.tail_L >= 0.0)
    son_R = mid & ~son_L & ~shkR & (fan.tail_R <= 0.0)
    star = mid & ~son_L & ~son_R

    for mask, V_side, dV_side in ((in_L, Vl, dVl), (in_R, Vr, dVr)):
        i = np.flatnonzero(mask)
        if i.size:
            V_rp[i] = V_side[i]
            dVdt[i] = _smooth_derivative(V_side[i], dV_side[i], hv[i], eos)

    i = np.flatnonzero(son_L)
    if i.size:
        c_tail = sound_speed(fan.rho_L[i], p_star[i], eos)
        c_son = _sonic_sound_speed(Vl[i], c_tail, eos)
        fs = rarefaction_relations(Vl[i], dVl[i], c_son, hv[i], eos)
        dtu, dtp = time_derivatives_sonic(fs["V_end"], fs["d"], hv[i], eos)
        dtrho, dtv = _fan_side_extras(fs, dtu, dtp, hv[i], eos)
        V_rp[i] = fs["V_end"]
        dVdt[i] = np.stack([dtrho, dtu, dtv, dtp], axis=-1)

    i = np.flatnonzero(son_R)
    if i.size:
        Vm, dVm, hm = _mirror_state(Vr[i]), _mirror_slope(dVr[i]), _mirror_state(hv[i])
        c_tail = sound_speed(fan.rho_R[i], p_star[i], eos)
        c_son = _sonic_sound_speed(Vm, c_tail, eos)
        fs = rarefaction_relations(Vm, dVm, c_son, hm, eos)
        dtu_m, dtp_m = time_derivatives_sonic(fs["V_end"], fs["d"], hm, eos)
        dtrho, dtv = _fan_side_extras(fs, dtu_m, dtp_m, hm, eos)
        V_rp[i] = _mirror_state(fs["V_end"])
        dVdt[i] = np.stack([dtrho, -dtu_m, dtv, dtp_m], axis=-1)

    i = np.flatnonzero(star)
    if i.size:
        Vl_i, Vr_i = Vl[i], Vr[i]
        dVl_i, dVr_i = dVl[i], dVr[i]
        hv_i = hv[i]
        VsL = fan.star_state("L")[i]
        VsR = fan.star_state("R")[i]
        ns = i.size
        aL = np.empty(ns); bL = np.empty(ns); dL = np.empty(ns)
        aR = np.empty(ns); bR = np.empty(ns); dR = np.empty(ns)

        lr = np.flatnonzero(~shkL[i])
        ls = np.flatnonzero(shkL[i])
        rs = np.flatnonzero(shkR[i])
        rr = np.flatnonzero(~shkR[i])

        fanL = shkLd = fanR = shkRd = None
        if lr.size:
            c_end = sound_speed(VsL[lr, RHO], VsL[lr, PRE], eos)
            fanL = rarefaction_relations(Vl_i[lr], dVl_i[lr], c_end, hv_i[lr], eos)
            aL[lr], bL[lr], dL[lr] = fanL["a"], fanL["b"], fanL["d"]
        if ls.size:
            shkLd = shock_relations(
                _mirror_state(Vl_i[ls]), _mirror_slope(dVl_i[ls]),
                _mirror_state(VsL[ls]), -fan.head_L[i][ls],
                _mirror_state(hv_i[ls]), eos,
            )
            aL[ls], bL[ls], dL[ls] = -shkLd["a"], shkLd["b"], shkLd["d"]
        if rs.size:
            shkRd = shock_relations(
                Vr_i[rs], dVr_i[rs], VsR[rs], fan.head_R[i][rs], hv_i[rs], eos
            )
            aR[rs], bR[rs], dR[rs] = shkRd["a"], shkRd["b"], shkRd["d"]
        if rr.size:
            c_end = sound_speed(VsR[rr, RHO], VsR[rr, PRE], eos)
            fanR = rarefaction_relations(
                _mirror_state(Vr_i[rr]), _mirror_slope(dVr_i[rr]), c_end,
                _mirror_state(hv_i[rr]), eos,
            )
            aR[rr], bR[rr], dR[rr] = -fanR["a"], fanR["b"], fanR["d"]

        udot, pdot = solve_material_derivatives(
            GrpCoefficients(aL, bL, dL, aR, bR, dR)
        )

        us = u_star[i]
        wL = np.where(us > 0, 1.0, np.where(us < 0, 0.0, 0.5))
        outL = np.zeros((ns, 4))
        outR = np.zeros((ns, 4))

        def gather(dct, keys, pos):
            return {k: dct[k][pos] for k in keys}

        fan_keys = ("V_end", "TSx", "VTx")
        shk_keys = ("V_b", "V_a", "dV_a", "s", "h_vec", "A_b", "r", "cdiff")

        iL = np.flatnonzero(wL > 0)
        if iL.size:
            dtu, dtp = time_derivatives_nonsonic(
                VsL[iL], udot[iL], pdot[iL], hv_i[iL], eos
            )
            dtrho = np.empty(iL.size)
            dtv = np.empty(iL.size)
            inv = np.full(ns, -1); inv[iL] = np.arange(iL.size)
            if lr.size:
                sel = lr[wL[lr] > 0]
                if sel.size:
                    p2 = inv[sel]
                    invf = np.full(ns, -1); invf[lr] = np.arange(lr.size)
                    sub = gather(fanL, fan_keys, invf[sel])
                    r_, v_ = _fan_side_extras(sub, dtu[p2], dtp[p2], hv_i[sel], eos)
                    dtrho[p2], dtv[p2] = r_, v_
            if ls.size:
                sel = ls[wL[ls] > 0]
                if sel.size:
                    p2 = inv[sel]
                    invf = np.full(ns, -1); invf[ls] = np.arange(ls.size)
                    sub = gather(shkLd, shk_keys, invf[sel])
                    r_, v_ = _shock_side_extras(
                        sub, -dtu[p2], dtp[p2], -udot[sel], pdot[sel], eos
                    )
                    dtrho[p2], dtv[p2] = r_, v_
            outL[iL] = np.stack([dtrho, dtu, dtv, dtp], axis=-1)

        iR = np.flatnonzero(wL < 1)
        if iR.size:
            dtu, dtp = time_derivatives_nonsonic(
                VsR[iR], udot[iR], pdot[iR], hv_i[iR], eos
            )
            dtrho = np.empty(iR.size)
            dtv = np.empty(iR.size)
            inv = np.full(ns, -1); inv[iR] = np.arange(iR.size)
            if rs.size:
                sel = rs[wL[rs] < 1]
                if sel.size:
                    p2 = inv[sel]
                    invf = np.full(ns, -1); invf[rs] = np.arange(rs.size)
                    sub = gather(shkRd, shk_keys, invf[sel])
                    r_, v_ = _shock_side_extras(
                        sub, dtu[p2], dtp[p2], udot[sel], pdot[sel], eos
                    )
                    dtrho[p2], dtv[p2] = r_, v_
            if rr.size:
                sel = rr[wL[rr] < 1]
                if sel.size:
                    p2 = inv[sel]
                    invf = np.full(ns, -1); invf[rr] = np.arange(rr.size)
                    sub = gather(fanR, fan_keys, invf[sel])
                    r_, v_ = _fan_side_extras(
                        sub, -dtu[p2], dtp[p2], _mirror_state(hv_i[sel]), eos
                    )
                    dtrho[p2], dtv[p2] = r_, v_
            outR[iR] = np.stack([dtrho, dtu, dtv, dtp], axis=-1)

        w = wL[:, None]
        dVdt[i] = w * outL + (1.0 - w) * outR
        V_rp[i] = w * VsL + (1.0 - w) * VsR

    return V_rp, dVdt, s_L, s_R


def resolve_grp(V_L, V_R, dV_L, dV_R, h_vec=None, eos=None, *,
                jump_tol=1e-8, shock_tol=1e-10):
    """Resolve the generalized Riemann problem at a batch of faces.

    Inputs are primitive states and slopes of shape (..., 4); ``h_vec`` is
    the source vector of the conservative system at each face (defaults to
    zero).  Returns a GrpResolution with the face state, its conservative
    form, both time derivatives, and the outer shock speeds (NaN where the
    outer wave is not a shock).
    """
    V_L = np.asarray(V_L, dtype=float)
    V_R = np.asarray(V_R, dtype=float)
    dV_L = np.asarray(dV_L, dtype=float)
    dV_R = np.asarray(dV_R, dtype=float)
    if h_vec is None:
        h_vec = np.zeros_like(V_L)
    h_vec = np.broadcast_to(np.asarray(h_vec, dtype=float), V_L.shape)

    shape = V_L.shape
    Vl = V_L.reshape(-1, 4)
    Vr = V_R.reshape(-1, 4)
    dVl = dV_L.reshape(-1, 4)
    dVr = dV_R.reshape(-1, 4)
    hv = h_vec.reshape(-1, 4)
    K = Vl.shape[0]

    V_rp = np.empty((K, 4))
    dVdt = np.empty((K, 4))
    s_L = np.full(K, np.nan)
    s_R = np.full(K, np.nan)

    equal = np.all((Vl == Vr) & (dVl == dVr), axis=-1)
    scale = np.maximum(np.abs(Vl), np.abs(Vr))
    jump = np.max(np.abs(Vl - Vr) / np.maximum(scale, 1e-100), axis=-1)
    acoustic = ~equal & (jump <= jump_tol)
    full = ~equal & ~acoustic

    i = np.flatnonzero(equal)
    if i.size:
        V_rp[i] = Vl[i]
        dVdt[i] = _smooth_derivative(Vl[i], dVl[i], hv[i], eos)

    i = np.flatnonzero(acoustic)
    if i.size:
        V_rp[i], dVdt[i] = acoustic_derivatives(
            Vl[i], Vr[i], dVl[i], dVr[i], hv[i], eos
        )

    i = np.flatnonzero(full)
    if i.size:
        V_rp[i], dVdt[i], s_L[i], s_R[i] = _resolve_full(
            Vl[i], Vr[i], dVl[i], dVr[i], hv[i], eos, shock_tol
        )

    V_rp = V_rp.reshape(shape)
    dVdt = dVdt.reshape(shape)
    U_rp = prim_to_cons(V_rp, eos)
    dUdt = np.einsum("...ij,...j->...i", dU_dV(V_rp, eos), dVdt)
    return GrpResolution(V_rp, U_rp, dVdt, dUdt, s_L.reshape(shape[:-1]),
                         s_R.reshape(shape[:-1]))
