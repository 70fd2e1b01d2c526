"""Exact Riemann solver for 1D relativistic flow with passive tangential velocity.

The two nonlinear waves are connected in the (p, u) plane: behind the left
(slowest-family) wave the axial velocity is a decreasing function u_L(p) of
the star pressure, behind the right wave an increasing u_R(p); the star state
solves u_L(p*) = u_R(p*).  Each branch is

  shock (p > p_ahead):      Taub adiabat + mass/momentum/energy jumps,
  rarefaction (p <= p_ahead): isentrope at constant tangential invariant
                              V_t = h W v, with d(atanh u) = -/+ phi dp.

h W v is continuous across shocks and rarefactions alike, so v only jumps at
the contact.  Newton derivatives: the shock chain by complex-step
differentiation, the rarefaction branch by the closed form -/+ phi (1-u^2).
"""

from typing import NamedTuple

import numpy as np

from .state import RHO, VX, VY, PRE, DomainError, sound_speed, thermo
from .matrices import char_speeds
from .waves import G_between, density_of_c, phi

_CSTEP = 1e-200


class VacuumError(DomainError):
    """The states pull apart so strongly that a vacuum region forms."""


class WaveFan(NamedTuple):
    """Solved Riemann fan, batched over leading axes.

    Star-side quantities carry an L/R suffix for the side of the contact;
    wave speeds are head/tail edges (equal for shocks).
    """

    VL: np.ndarray          # ahead primitive states (..., 4)
    VR: np.ndarray
    p_star: np.ndarray
    u_star: np.ndarray
    rho_L: np.ndarray       # density on the left side of the contact
    rho_R: np.ndarray
    v_L: np.ndarray         # tangential velocity left of the contact
    v_R: np.ndarray
    shock_L: np.ndarray     # bool: left wave is a shock
    shock_R: np.ndarray
    head_L: np.ndarray      # leftmost signal speed
    tail_L: np.ndarray
    tail_R: np.ndarray
    head_R: np.ndarray      # rightmost signal speed

    def star_state(self, side):
        """Primitive state ('L' or 'R') adjacent to the contact."""
        rho = self.rho_L if side == "L" else self.rho_R
        v = self.v_L if side == "L" else self.v_R
        return np.stack(
            [rho, self.u_star, v, np.broadcast_to(self.p_star, rho.shape)], axis=-1
        )


def _side_precompute(V, eos):
    V = np.asarray(V, dtype=float)
    rho, u, v, p = V[..., RHO], V[..., VX], V[..., VY], V[..., PRE]
    W, h, _, cs, _ = thermo(V, eos)
    return {"rho": rho, "u": u, "p": p, "W": W, "h": h, "cs": cs, "vt": h * W * v}


def _shock_branch(p_b, a, sign, eos):
    """State behind a shock of the given family at pressure p_b (complex-safe).

    sign=+1: left (slowest-family) wave; sign=-1: right wave.
    Returns (u_b, h_b, rho_b, W_b, s).
    """
    gbar = eos.gbar
    dp = p_b - a["p"]
    # Taub adiabat, quadratic in h_b; the positive root written without
    # cancellation (B > 0 for compression)
    x = dp / (gbar * p_b)
    A = 1.0 - x
    K = a["h"] ** 2 + (a["h"] / a["rho"]) * dp
    h_b = 2.0 * K / (x + np.sqrt(x * x + 4.0 * A * K))
    rho_b = gbar * p_b / (h_b - 1.0)
    # mass flux through the front; j > 0 for the left family
    j2 = dp / (a["h"] / a["rho"] - h_b / rho_b)
    j = sign * np.sqrt(j2)
    q = j / (a["rho"] * a["W"])
    s = (a["u"] - q * np.sqrt(1.0 - a["u"] ** 2 + q * q)) / (1.0 + q * q)
    J = a["rho"] * a["W"] * (a["u"] - s)
    Z = J * a["h"] * a["W"]
    u_b = (Z * a["u"] - dp) / (Z - s * dp)
    W_b = (a["h"] * a["W"] - s * dp / J) / h_b
    return u_b, h_b, rho_b, W_b, s


def _raref_branch(p_b, a, sign, eos):
    """State behind a rarefaction at pressure p_b <= p_ahead.

    Returns (u_b, h_b, rho_b, c_b, du_dp) with the closed-form branch slope
    du/dp = -sign * phi_b * (1 - u_b^2).
    """
    gamma = eos.gamma
    rho_b = a["rho"] * (p_b / a["p"]) ** (1.0 / gamma)
    h_b = 1.0 + eos.gbar * p_b / rho_b
    c_b = np.sqrt(gamma * p_b / (rho_b * h_b))
    dG = G_between(c_b, a["cs"], a["vt"], gamma)
    with np.errstate(over="ignore", invalid="ignore"):
        u_b = np.tanh(np.arctanh(a["u"]) + sign * dG)
    du_dp = -sign * phi(rho_b, c_b, h_b, a["vt"]) * (1.0 - u_b * u_b)
    return u_b, h_b, rho_b, c_b, du_dp


def _branch_velocity(p, a, sign, eos):
    """(u_b, du_b/dp) on the full wave curve, branch chosen pointwise."""
    u = np.empty_like(p)
    du = np.empty_like(p)
    shock = p > a["p"]
    if np.any(shock):
        i = np.flatnonzero(shock)
        ai = {k: v[i] for k, v in a.items()}
        ub_c = _shock_branch(p[i] + 1j * _CSTEP, ai, sign, eos)[0]
        u[i] = ub_c.real
        du[i] = ub_c.imag / _CSTEP
    if not np.all(shock):
        i = np.flatnonzero(~shock)
        ai = {k: v[i] for k, v in a.items()}
        u_b, _, _, _, du_dp = _raref_branch(p[i], a=ai, sign=sign, eos=eos)
        u[i] = u_b
        du[i] = du_dp
    return u, du


def solve_star(VL, VR, eos, tol=1e-13, max_iter=100):
    """Solve for the star region; returns a WaveFan batched like the inputs.

    Raises VacuumError if the wave curves do not intersect at positive
    pressure.  tol is relative on the star pressure.
    """
    VL = np.asarray(VL, dtype=float)
    VR = np.asarray(VR, dtype=float)
    shape = VL.shape[:-1]
    L = _side_precompute(VL.reshape(-1, 4), eos)
    R = _side_precompute(VR.reshape(-1, 4), eos)

    # vacuum check: the maximal left-branch velocity at p -> 0 must exceed
    # the minimal right-branch velocity
    with np.errstate(over="ignore", invalid="ignore"):
        uL0 = np.tanh(
            np.arctanh(L["u"]) + G_between(0.0 * L["cs"], L["cs"], L["vt"], eos.gamma)
        )
        uR0 = np.tanh(
            np.arctanh(R["u"]) - G_between(0.0 * R["cs"], R["cs"], R["vt"], eos.gamma)
        )
    if np.any(uL0 <= uR0):
        i = int(np.argmax(uL0 <= uR0))
        raise VacuumError(
            f"vacuum forms between states (flat index {i}): "
            f"VL={VL.reshape(-1, 4)[i]}, VR={VR.reshape(-1, 4)[i]}"
        )

    # linearized (acoustic impedance) initial guess, clipped positive
    zL = L["rho"] * L["h"] * L["W"] ** 2 * L["cs"]
    zR = R["rho"] * R["h"] * R["W"] ** 2 * R["cs"]
    p = (zR * L["p"] + zL * R["p"] - zL * zR * (R["u"] - L["u"])) / (zL + zR)
    p = np.clip(p, 1e-14 * np.minimum(L["p"], R["p"]), None)

    lo = np.zeros_like(p)
    hi = np.full_like(p, np.inf)
    converged = np.zeros(p.shape, dtype=bool)
    for _ in range(max_iter):
        uL, duL = _branch_velocity(p, L, +1.0, eos)
        uR, duR = _branch_velocity(p, R, -1.0, eos)
        f = uL - uR          # decreasing in p
        df = duL - duR
        lo = np.where((f > 0.0) & ~converged, np.maximum(lo, p), lo)
        hi = np.where((f < 0.0) & ~converged, np.minimum(hi, p), hi)
        with np.errstate(divide="ignore", invalid="ignore"):
            p_new = p - f / df
        inside = (p_new > lo) & (p_new < hi) & np.isfinite(p_new)
        mid = np.where(np.isinf(hi), 2.0 * np.maximum(p, 1.0), 0.5 * (lo + hi))
        step = np.where(inside, p_new, mid)
        newly = (np.abs(step - p) <= tol * np.maximum(p, 1e-300)) & ~converged
        p = np.where(converged, p, step)
        converged |= newly
        if converged.all():
            break
    else:
        left = int((~converged).sum())
        idx = np.flatnonzero(~converged)[:8]
        raise DomainError(
            f"star-pressure iteration did not converge; {left} states remain, "
            f"first indices {idx.tolist()}, pressures {p[idx].tolist()}"
        )

    # assemble both sides at the converged pressure
    out = {}
    for side, a, sign in (("L", L, +1.0), ("R", R, -1.0)):
        n = p.shape[0]
        u_b = np.empty(n)
        rho_b = np.empty(n)
        h_b = np.empty(n)
        W_b = np.empty(n)
        head = np.empty(n)
        tail = np.empty(n)
        shock = p > a["p"]
        if np.any(shock):
            i = np.flatnonzero(shock)
            ai = {k: v[i] for k, v in a.items()}
            ub, hb, rb, Wb, s = _shock_branch(p[i], ai, sign, eos)
            u_b[i], h_b[i], rho_b[i], W_b[i] = ub, hb, rb, Wb
            head[i] = tail[i] = s
        if not np.all(shock):
            i = np.flatnonzero(~shock)
            ai = {k: v[i] for k, v in a.items()}
            ub, hb, rb, cb, _ = _raref_branch(p[i], ai, sign, eos)
            u_b[i], h_b[i], rho_b[i] = ub, hb, rb
            W_b[i] = np.sqrt((1.0 + (ai["vt"] / hb) ** 2) / (1.0 - ub * ub))
            v_star = ai["vt"] / (hb * W_b[i])
            Vhead = (VL if side == "L" else VR).reshape(-1, 4)[i]
            Vtail = np.stack([rb, ub, v_star, p[i]], axis=-1)
            k = 0 if side == "L" else 1
            head[i] = char_speeds(Vhead, 0, eos)[k]
            tail[i] = char_speeds(Vtail, 0, eos)[k]
        out[side] = (u_b, rho_b, h_b, W_b, shock, head, tail)

    uL_b, rho_Lb, h_Lb, W_Lb, shock_L, head_L, tail_L = out["L"]
    uR_b, rho_Rb, h_Rb, W_Rb, shock_R, head_R, tail_R = out["R"]
    u_star = 0.5 * (uL_b + uR_b)

    fan = WaveFan(
        VL=VL,
        VR=VR,
        p_star=p.reshape(shape),
        u_star=u_star.reshape(shape),
        rho_L=rho_Lb.reshape(shape),
        rho_R=rho_Rb.reshape(shape),
        v_L=(L["vt"] / (h_Lb * W_Lb)).reshape(shape),
        v_R=(R["vt"] / (h_Rb * W_Rb)).reshape(shape),
        shock_L=shock_L.reshape(shape),
        shock_R=shock_R.reshape(shape),
        head_L=head_L.reshape(shape),
        tail_L=tail_L.reshape(shape),
        tail_R=tail_R.reshape(shape),
        head_R=head_R.reshape(shape),
    )
    return fan


def fastest_shock_speeds(fan):
    """(s_L, s_R): front speeds of the outer waves, NaN where not a shock."""
    sL = np.where(fan.shock_L, fan.head_L, np.nan)
    sR = np.where(fan.shock_R, fan.head_R, np.nan)
    return sL, sR


def _fan_interior(Va, sign, c_edges, xi, eos):
    """States inside a rarefaction fan at similarity coordinates xi.

    Va: ahead primitive states (n, 4); sign +1 for a left fan (slow family),
    -1 for a right fan; c_edges = (c_tail, c_head) bracketing sound speeds.
    Solved by bisection on the sound speed: the fan edge speed (slow/fast
    family characteristic) is monotone across the fan.
    """
    a = _side_precompute(Va, eos)
    gamma = eos.gamma
    k = 0 if sign > 0 else 1

    def state_of_c(c):
        rho = density_of_c(c, a["rho"], a["cs"], gamma)
        p = a["p"] * (rho / a["rho"]) ** gamma
        h = 1.0 + eos.gbar * p / rho
        with np.errstate(over="ignore", invalid="ignore"):
            u = np.tanh(np.arctanh(a["u"]) + sign * G_between(c, a["cs"], a["vt"], gamma))
        W = np.sqrt((1.0 + (a["vt"] / h) ** 2) / (1.0 - u * u))
        v = a["vt"] / (h * W)
        return np.stack([rho, u, v, p], axis=-1)

    c_lo = np.minimum(*c_edges)
    c_hi = np.maximum(*c_edges)
    for _ in range(80):
        c = 0.5 * (c_lo + c_hi)
        lam = char_speeds(state_of_c(c), 0, eos)[k]
        # slow-family speed falls as c grows (left fan); fast-family rises
        go_up = (lam > xi) if sign > 0 else (lam < xi)
        c_lo = np.where(go_up, c, c_lo)
        c_hi = np.where(go_up, c_hi, c)
    return state_of_c(0.5 * (c_lo + c_hi))


def sample(fan, xi, eos):
    """Self-similar solution V(xi) with xi = x/t, batched like the fan."""
    xi = np.asarray(xi, dtype=float)
    shape = np.broadcast_shapes(fan.p_star.shape, xi.shape)
    xi = np.broadcast_to(xi, shape).reshape(-1)

    def flat(x):
        return np.broadcast_to(x, shape).reshape(-1)

    VL = np.broadcast_to(fan.VL, shape + (4,)).reshape(-1, 4)
    VR = np.broadcast_to(fan.VR, shape + (4,)).reshape(-1, 4)
    u_star = flat(fan.u_star)
    head_L, tail_L = flat(fan.head_L), flat(fan.tail_L)
    head_R, tail_R = flat(fan.head_R), flat(fan.tail_R)

    star_L = np.stack(
        [flat(fan.rho_L), u_star, flat(fan.v_L), flat(fan.p_star)], axis=-1
    )
    star_R = np.stack(
        [flat(fan.rho_R), u_star, flat(fan.v_R), flat(fan.p_star)], axis=-1
    )

    out = np.where((xi < u_star)[:, None], star_L, star_R)
    out = np.where((xi <= head_L)[:, None], VL, out)
    out = np.where((xi >= head_R)[:, None], VR, out)

    in_left_fan = ~flat(fan.shock_L) & (xi > head_L) & (xi < tail_L)
    if np.any(in_left_fan):
        i = np.flatnonzero(in_left_fan)
        cs_tail = sound_speed(star_L[i, RHO], star_L[i, PRE], eos)
        cs_head = sound_speed(VL[i, RHO], VL[i, PRE], eos)
        out[i] = _fan_interior(VL[i], +1.0, (cs_tail, cs_head), xi[i], eos)
    in_right_fan = ~flat(fan.shock_R) & (xi > tail_R) & (xi < head_R)
    if np.any(in_right_fan):
        i = np.flatnonzero(in_right_fan)
        cs_tail = sound_speed(star_R[i, RHO], star_R[i, PRE], eos)
        cs_head = sound_speed(VR[i, RHO], VR[i, PRE], eos)
        out[i] = _fan_interior(VR[i], -1.0, (cs_tail, cs_head), xi[i], eos)
    return out.reshape(shape + (4,))


def reference_solution(VL, VR, x, t, eos, x0=0.5):
    """Exact solution of a single Riemann problem at points x, time t > 0."""
    fan = solve_star(np.asarray(VL, dtype=float), np.asarray(VR, dtype=float), eos)
    xi = (np.asarray(x, dtype=float) - x0) / t
    return sample(fan, xi, eos)
