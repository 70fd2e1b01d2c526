"""Thermodynamics and state conversions for special relativistic hydrodynamics.

Ideal-gas (Gamma-law) equation of state, units with c = 1.

State layouts (last axis, length 4):
    primitive    V = (rho, u, v, p)   rest-mass density, x/y velocity, pressure
    conservative U = (D, m1, m2, E)   lab density, momentum density, energy

with D = rho*W, m_i = rho*h*W^2*v_i, E = rho*h*W^2 - p, W = 1/sqrt(1-u^2-v^2)
and specific enthalpy h = 1 + e + p/rho, internal energy e = p/((Gamma-1)rho).

All functions are vectorized over leading axes.
"""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

# component indices, primitive / conservative
RHO, VX, VY, PRE = 0, 1, 2, 3
DEN, MX, MY, ENE = 0, 1, 2, 3


class DomainError(ValueError):
    """Input outside the physical domain (superluminal speed, bad index...)."""


class AdmissibilityError(DomainError):
    """Conservative state outside the admissible set D > 0, E - sqrt(D^2+|m|^2) > 0."""


class RootSolveError(RuntimeError):
    """An iterative solve failed to converge; message carries the trace."""


@dataclass(frozen=True)
class EosConfig:
    """Gamma-law equation of state, adiabatic index restricted to (1, 2]."""

    gamma: float

    def __post_init__(self):
        if not 1.0 < self.gamma <= 2.0:
            raise DomainError(f"adiabatic index must be in (1, 2], got {self.gamma}")

    @property
    def gbar(self):
        """Gamma/(Gamma-1), the coefficient in rho*h = rho + gbar*p."""
        return self.gamma / (self.gamma - 1.0)


class ThermoQuantities(NamedTuple):
    """Derived thermodynamic fields for a primitive state."""

    W: np.ndarray       # Lorentz factor
    h: np.ndarray       # specific enthalpy
    e: np.ndarray       # specific internal energy
    cs: np.ndarray      # sound speed, cs^2 = Gamma*p/(rho*h)
    T: np.ndarray       # temperature-like factor p/((Gamma-1)*rho), multiplies dS


def lorentz_factor(u, v=0.0):
    """W = 1/sqrt(1 - u^2 - v^2). Raises DomainError on superluminal input."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    v2 = u * u + v * v
    if np.any(v2 >= 1.0):
        raise DomainError(f"superluminal velocity: max u^2+v^2 = {np.max(v2)}")
    return 1.0 / np.sqrt(1.0 - v2)


def thermo(V, eos):
    """ThermoQuantities of a primitive state array (..., 4)."""
    V = np.asarray(V, dtype=float)
    rho, u, v, p = V[..., RHO], V[..., VX], V[..., VY], V[..., PRE]
    W = lorentz_factor(u, v)
    e = p / ((eos.gamma - 1.0) * rho)
    h = 1.0 + e + p / rho
    cs = np.sqrt(eos.gamma * p / (rho * h))
    T = e
    return ThermoQuantities(W=W, h=h, e=e, cs=cs, T=T)


def sound_speed(rho, p, eos):
    """cs = sqrt(Gamma*p/(rho*h)); always < sqrt(Gamma-1) < 1 for the Gamma-law."""
    h = 1.0 + eos.gbar * p / np.asarray(rho, dtype=float)
    return np.sqrt(eos.gamma * p / (rho * h))


def prim_to_cons(V, eos):
    """Map primitive (rho, u, v, p) -> conservative (D, m1, m2, E)."""
    V = np.asarray(V, dtype=float)
    rho, u, v, p = V[..., RHO], V[..., VX], V[..., VY], V[..., PRE]
    W = lorentz_factor(u, v)
    rhohW2 = (rho + eos.gbar * p) * W * W
    U = np.empty_like(V)
    U[..., DEN] = rho * W
    U[..., MX] = rhohW2 * u
    U[..., MY] = rhohW2 * v
    U[..., ENE] = rhohW2 - p
    return U


def admissibility_margin(U):
    """q(U) = E - sqrt(D^2 + m1^2 + m2^2); admissible iff q > 0 and D > 0."""
    U = np.asarray(U, dtype=float)
    return U[..., ENE] - np.sqrt(
        U[..., DEN] ** 2 + U[..., MX] ** 2 + U[..., MY] ** 2
    )


def is_admissible(U):
    """True where D > 0 and E - sqrt(D^2 + |m|^2) > 0 (elementwise)."""
    U = np.asarray(U, dtype=float)
    return (U[..., DEN] > 0.0) & (admissibility_margin(U) > 0.0)


def cons_to_prim(U, eos, p_guess=None):
    """Map conservative -> primitive by a scalar pressure root solve.

    Solves f(p) = (rho(p) + gbar*p)*W(p)^2 - (E + p) = 0 where the trial
    velocity is v_i = m_i/(E+p), W = 1/sqrt(1-|v|^2), rho = D/W.  Newton
    iteration with a maintained sign-change bracket; absolute tolerance
    1e-13*max(1, E); at most 100 iterations.

    p_guess: optional array of starting pressures (e.g. previous values);
    default max(tiny, (Gamma-1)*(E-D)), exact for states at rest.
    """
    U = np.asarray(U, dtype=float)
    shape = U.shape[:-1]
    Uf = U.reshape(-1, 4)
    D, m1, m2, E = Uf[..., DEN], Uf[..., MX], Uf[..., MY], Uf[..., ENE]
    mm = np.sqrt(m1 * m1 + m2 * m2)

    bad = ~((D > 0.0) & (E - np.sqrt(D * D + mm * mm) > 0.0))
    if np.any(bad):
        i = int(np.argmax(bad))
        raise AdmissibilityError(
            "inadmissible conservative state at flat index "
            f"{i}: D={D[i]!r}, |m|={mm[i]!r}, E={E[i]!r}, "
            f"E-sqrt(D^2+|m|^2)={E[i] - np.sqrt(D[i]**2 + mm[i]**2)!r}"
        )

    gbar = eos.gbar
    tiny = 1e-300

    def f_and_df(p):
        Ep = E + p
        vel2 = (mm / Ep) ** 2
        W2 = 1.0 / (1.0 - vel2)
        W = np.sqrt(W2)
        rho = D / W
        f = (rho + gbar * p) * W2 - Ep
        # df/dp with d(vel2)/dp = -2 mm^2/Ep^3
        dW2 = -2.0 * mm * mm * W2 * W2 / Ep**3
        drho = D * mm * mm * W / Ep**3
        df = (drho + gbar) * W2 + (rho + gbar * p) * dW2 - 1.0
        return f, df

    if p_guess is None:
        p = np.maximum((eos.gamma - 1.0) * (E - D), tiny)
    else:
        p = np.maximum(np.asarray(p_guess, dtype=float).reshape(-1).copy(), tiny)

    # bracket: f(0+) < 0 for admissible states, f grows ~ (gbar-1)p at large p
    lo = np.zeros_like(p)
    hi = np.full_like(p, np.inf)
    tol = 1e-13 * np.maximum(1.0, E)
    converged = np.zeros(p.shape, dtype=bool)
    for _ in range(100):
        f, df = f_and_df(p)
        newly = (np.abs(f) <= tol) & ~converged
        lo = np.where((f < 0.0) & ~converged, np.maximum(lo, p), lo)
        hi = np.where((f > 0.0) & ~converged, np.minimum(hi, p), hi)
        with np.errstate(divide="ignore", invalid="ignore"):
            p_new = p - f / df
        # fall back to bisection (or bracket growth) when Newton leaves the bracket
        inside = (p_new > lo) & (p_new < hi) & np.isfinite(p_new)
        mid = np.where(np.isinf(hi), 2.0 * np.maximum(p, 1.0), 0.5 * (lo + hi))
        # entries that just hit the tolerance take one last (quadratic) Newton
        # polish step, then freeze: the final pressure error is set by rounding,
        # not by the stopping tolerance
        p = np.where(
            converged, p, np.where(inside | newly, np.where(newly & ~inside, p, p_new), mid)
        )
        converged |= newly
        if converged.all():
            break
    else:
        left = ~converged
        idx = np.flatnonzero(left)[:8]
        f, _ = f_and_df(p)
        raise RootSolveError(
            "pressure recovery did not converge in 100 iterations; "
            f"{left.sum()} states remain, first indices {idx.tolist()}, "
            f"residuals {f[idx].tolist()}, pressures {p[idx].tolist()}, "
            f"tolerances {tol[idx].tolist()}"
        )

    Ep = E + p
    u = m1 / Ep
    v = m2 / Ep
    W = lorentz_factor(u, v)
    Vf = np.empty_like(Uf)
    Vf[..., RHO] = D / W
    Vf[..., VX] = u
    Vf[..., VY] = v
    Vf[..., PRE] = p
    return Vf.reshape(*shape, 4)


def flux(V, axis, eos):
    """Physical flux F_axis(U) = (D v_i, v_i m + p e_i, m_i) from a primitive state."""
    V = np.asarray(V, dtype=float)
    if axis not in (0, 1):
        raise DomainError(f"axis must be 0 (x) or 1 (y), got {axis}")
    rho, u, v, p = V[..., RHO], V[..., VX], V[..., VY], V[..., PRE]
    W = lorentz_factor(u, v)
    rhohW2 = (rho + eos.gbar * p) * W * W
    vi = u if axis == 0 else v
    F = np.empty_like(V)
    F[..., DEN] = rho * W * vi
    F[..., MX] = rhohW2 * u * vi
    F[..., MY] = rhohW2 * v * vi
    F[..., MX + axis] += p
    F[..., ENE] = rhohW2 * vi
    return F
