"""Quasilinear matrices, Jacobians, and the characteristic eigensystem.

The primitive form of the 2D equations is dt V + A(V) dx V + B(V) dy V = C,
with V = (rho, u, v, p).  A(V) is the printed x-direction matrix

    A = u*I + (1/Q) * [[0, rho,            0, -u/(W^2 h)        ],
                       [0, -u cs^2/W^2,    0,  Hcap/(rho h W^2) ],
                       [0, -v cs^2/W^2,    0, -u v (1-cs^2)/(rho h W^2)],
                       [0, rho h cs^2,     0, -u cs^2/W^2       ]]

with Q = 1 - (u^2+v^2) cs^2, Hcap = 1 - u^2 - v^2 cs^2.  B(V) follows from
A by exchanging the roles of u and v (components 1 <-> 2).

Eigenvalues: lambda_{1,4} = (u(1-cs^2) -/+ cs*sqrt(Hcap)/W)/Q, lambda_2 =
lambda_3 = u; right/left eigenvector matrices are closed-form (below), with
det R = 2 rho h cs W^3 sqrt(Hcap).

All functions broadcast over leading axes; matrices are (..., 4, 4).
"""

import numpy as np

from .state import RHO, VX, VY, PRE, DomainError, lorentz_factor, thermo

# permutation that exchanges the two velocity/momentum components
_SWAP = np.array([0, 2, 1, 3])


def _swap_axis(V):
    """Primitive state with the roles of the two velocity components exchanged."""
    return np.asarray(V, dtype=float)[..., _SWAP]


def quasilinear_matrix(V, axis, eos):
    """A(V) for axis 0, B(V) for axis 1, shape (..., 4, 4)."""
    if axis == 1:
        M = quasilinear_matrix(_swap_axis(V), 0, eos)
        return M[..., _SWAP, :][..., :, _SWAP]
    if axis != 0:
        raise DomainError(f"axis must be 0 or 1, got {axis}")
    V = np.asarray(V, dtype=float)
    rho, u, v, p = V[..., RHO], V[..., VX], V[..., VY], V[..., PRE]
    W, h, _, cs, _ = thermo(V, eos)
    cs2 = cs * cs
    W2 = W * W
    Q = 1.0 - (u * u + v * v) * cs2
    if np.any(Q <= 0.0):
        raise DomainError("degenerate quasilinear denominator 1-(u^2+v^2)cs^2 <= 0")
    Hcap = 1.0 - u * u - v * v * cs2
    rhohW2 = rho * h * W2

    M = np.zeros(V.shape[:-1] + (4, 4), dtype=float)
    iQ = 1.0 / Q
    M[..., 0, 1] = rho * iQ
    M[..., 0, 3] = -u / (W2 * h) * iQ
    M[..., 1, 1] = -u * cs2 / W2 * iQ
    M[..., 1, 3] = Hcap / rhohW2 * iQ
    M[..., 2, 1] = -v * cs2 / W2 * iQ
    M[..., 2, 3] = -u * v * (1.0 - cs2) / rhohW2 * iQ
    M[..., 3, 1] = rho * h * cs2 * iQ
    M[..., 3, 3] = -u * cs2 / W2 * iQ
    idx = np.arange(4)
    M[..., idx, idx] += u[..., None]
    return M


def char_speeds(V, axis, eos):
    """(lambda_1, lambda_4): slowest/fastest characteristic speeds along axis."""
    V = _swap_axis(V) if axis == 1 else np.asarray(V, dtype=float)
    u, v = V[..., VX], V[..., VY]
    W, _, _, cs, _ = thermo(V, eos)
    cs2 = cs * cs
    Q = 1.0 - (u * u + v * v) * cs2
    Hcap = 1.0 - u * u - v * v * cs2
    root = cs * np.sqrt(Hcap) / W
    return (u * (1.0 - cs2) - root) / Q, (u * (1.0 - cs2) + root) / Q


def max_signal_speed(V, axis, eos):
    """max(|lambda_1|, |lambda_4|) along axis, elementwise."""
    lam1, lam4 = char_speeds(V, axis, eos)
    return np.maximum(np.abs(lam1), np.abs(lam4))


def eigensystem(V, axis, eos):
    """(lambdas, R, Rinv, Hcap): eigen-decomposition of the primitive matrix.

    lambdas (..., 4) sorted lambda_1 <= lambda_2 = lambda_3 <= lambda_4;
    R (..., 4, 4) right eigenvectors as columns; Rinv exact inverse.
    """
    if axis == 1:
        lam, R, Rinv, Hcap = eigensystem(_swap_axis(V), 0, eos)
        return lam, R[..., _SWAP, :], Rinv[..., :, _SWAP], Hcap
    if axis != 0:
        raise DomainError(f"axis must be 0 or 1, got {axis}")
    V = np.asarray(V, dtype=float)
    rho, u, v, p = V[..., RHO], V[..., VX], V[..., VY], V[..., PRE]
    W, h, _, cs, _ = thermo(V, eos)
    if np.any(cs <= 0.0):
        raise DomainError("vanishing sound speed: eigensystem degenerate")
    cs2 = cs * cs
    W2 = W * W
    Q = 1.0 - (u * u + v * v) * cs2
    Hcap = 1.0 - u * u - v * v * cs2
    sH = np.sqrt(Hcap)
    om2 = 1.0 - u * u  # 1 - u^2

    lam = np.empty(V.shape[:-1] + (4,), dtype=float)
    root = cs * sH / W
    lam[..., 0] = (u * (1.0 - cs2) - root) / Q
    lam[..., 1] = u
    lam[..., 2] = u
    lam[..., 3] = (u * (1.0 - cs2) + root) / Q

    R = np.zeros(V.shape[:-1] + (4, 4), dtype=float)
    rhoW2cs = rho * W2 / cs
    rhohcsW2 = rho * h * cs * W2
    WsH = W * sH
    R[..., 0, 0] = rhoW2cs
    R[..., 1, 0] = -WsH
    R[..., 2, 0] = v * (u * WsH - cs) / om2
    R[..., 3, 0] = rhohcsW2
    R[..., 0, 1] = 1.0
    R[..., 2, 2] = 1.0
    R[..., 0, 3] = rhoW2cs
    R[..., 1, 3] = WsH
    R[..., 2, 3] = -v * (u * WsH + cs) / om2
    R[..., 3, 3] = rhohcsW2

    det = 2.0 * rho * h * cs * W2 * WsH  # 2 rho h cs W^3 sqrt(Hcap)
    Rinv = np.zeros_like(R)
    Rinv[..., 0, 1] = -rhohcsW2
    Rinv[..., 0, 3] = WsH
    Rinv[..., 1, 0] = det
    Rinv[..., 1, 3] = -2.0 * rho * W2 * WsH / cs
    Rinv[..., 2, 1] = 2.0 * u * v * rhohcsW2 * W * sH / om2
    Rinv[..., 2, 2] = det
    Rinv[..., 2, 3] = 2.0 * v * cs * WsH / om2
    Rinv[..., 3, 1] = rhohcsW2
    Rinv[..., 3, 3] = WsH
    Rinv /= det[..., None, None]
    return lam, R, Rinv, Hcap


def dU_dV(V, eos):
    """Jacobian of the primitive->conservative map, shape (..., 4, 4)."""
    V = np.asarray(V, dtype=float)
    rho, u, v, p = V[..., RHO], V[..., VX], V[..., VY], V[..., PRE]
    W, h, _, _, _ = thermo(V, eos)
    gbar = eos.gbar
    W2, W3, W4 = W * W, W**3, W**4
    rh = rho * h
    M = np.empty(V.shape[:-1] + (4, 4), dtype=float)
    M[..., 0, 0] = W
    M[..., 0, 1] = rho * W3 * u
    M[..., 0, 2] = rho * W3 * v
    M[..., 0, 3] = 0.0
    M[..., 1, 0] = W2 * u
    M[..., 1, 1] = rh * (W2 + 2.0 * W4 * u * u)
    M[..., 1, 2] = 2.0 * rh * W4 * u * v
    M[..., 1, 3] = gbar * W2 * u
    M[..., 2, 0] = W2 * v
    M[..., 2, 1] = 2.0 * rh * W4 * u * v
    M[..., 2, 2] = rh * (W2 + 2.0 * W4 * v * v)
    M[..., 2, 3] = gbar * W2 * v
    M[..., 3, 0] = W2
    M[..., 3, 1] = 2.0 * rh * W4 * u
    M[..., 3, 2] = 2.0 * rh * W4 * v
    M[..., 3, 3] = gbar * W2 - 1.0
    return M


def dF_dV(V, axis, eos):
    """Jacobian of the flux along axis with respect to primitive variables."""
    if axis == 1:
        J = dF_dV(_swap_axis(V), 0, eos)
        return J[..., _SWAP, :][..., :, _SWAP]
    if axis != 0:
        raise DomainError(f"axis must be 0 or 1, got {axis}")
    V = np.asarray(V, dtype=float)
    rho, u, v, p = V[..., RHO], V[..., VX], V[..., VY], V[..., PRE]
    W, h, _, _, _ = thermo(V, eos)
    gbar = eos.gbar
    W2, W3, W4 = W * W, W**3, W**4
    rh = rho * h
    J = np.empty(V.shape[:-1] + (4, 4), dtype=float)
    J[..., 0, 0] = W * u
    J[..., 0, 1] = rho * W * (1.0 + W2 * u * u)
    J[..., 0, 2] = rho * u * W3 * v
    J[..., 0, 3] = 0.0
    J[..., 1, 0] = W2 * u * u
    J[..., 1, 1] = 2.0 * rh * W2 * u * (1.0 + W2 * u * u)
    J[..., 1, 2] = 2.0 * rh * W4 * u * u * v
    J[..., 1, 3] = gbar * W2 * u * u + 1.0
    J[..., 2, 0] = W2 * u * v
    J[..., 2, 1] = rh * W2 * v * (1.0 + 2.0 * W2 * u * u)
    J[..., 2, 2] = rh * W2 * u * (1.0 + 2.0 * W2 * v * v)
    J[..., 2, 3] = gbar * W2 * u * v
    J[..., 3, 0] = W2 * u
    J[..., 3, 1] = rh * W2 * (1.0 + 2.0 * W2 * u * u)
    J[..., 3, 2] = 2.0 * rh * W4 * u * v
    J[..., 3, 3] = gbar * W2 * u
    return J


def flux_jacobian(V, axis, eos):
    """dF_axis/dU = (dF/dV) (dU/dV)^{-1}, evaluated at the primitive state."""
    A = dF_dV(V, axis, eos)
    M = dU_dV(V, eos)
    # A M^{-1} = solve(M^T, A^T)^T, batched
    return np.swapaxes(
        np.linalg.solve(np.swapaxes(M, -1, -2), np.swapaxes(A, -1, -2)), -1, -2
    )


def eigensystem_conservative(V, axis, eos):
    """Eigen-decomposition of dF/dU: (lambdas, Rc, Lc) with Rc = M R, Lc = Rc^{-1}.

    Inverting Rc directly (rather than composing Rinv M^{-1}) keeps the
    one-sided residual Lc Rc - I at rounding level even for stiff states.
    """
    lam, R, _, _ = eigensystem(V, axis, eos)
    Rc = dU_dV(V, eos) @ R
    Lc = np.linalg.inv(Rc)
    return lam, Rc, Lc
