"""Resistive GLM-MHD equation set.

Nine-component conservative state u = (rho, rho*v, E, B, psi).  Pointwise
operations are vectorized over arbitrary leading axes with the component
axis last.  Spatial flux blocks carry a direction axis before the component
axis, shape (..., 3, 9).

The viscous/resistive fluxes are available through two independent routes:
``viscous_flux_direct`` evaluates the stress tensor / heat flux / resistive
terms from primitive-variable gradients, while ``viscous_flux_entropy``
evaluates the same flux as a linear map applied to gradients of the entropy
variables (the form the scheme uses, and the form in which the map is
symmetric positive semi-definite).  ``k_matrices`` assembles that linear map
explicitly as a 27x27 block matrix.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "PhysParams", "PositivityError",
    "prim_to_cons", "cons_to_prim", "entropy_function", "entropy_variables",
    "entropy_flux", "powell_phi", "powell_contraction", "glm_phi", "glm_source",
    "advective_flux", "advective_flux_split", "entropy_flux_potentials",
    "viscous_flux_direct", "viscous_flux_entropy", "k_matrices",
    "wave_speeds", "max_signal_speed",
]


class PositivityError(Exception):
    """Non-physical density or pressure encountered.

    Recoverable: the time-step driver catches it to report a crash time.

    Attributes:
        where: flat node index of the first offending value, or None.
        time: simulation time if known.
    """

    def __init__(self, message: str, where=None, time=None):
        super().__init__(message)
        self.where = where
        self.time = time


@dataclass
class PhysParams:
    """Physical and cleaning parameters of the GLM-MHD system.

    ``ch`` is the divergence-wave speed; the time integrator refreshes it
    once per step.  Only the ratio kappa/R enters the equations; it is tied
    to the viscosity through a constant Prandtl number.
    """

    gamma: float = 5.0 / 3.0
    mu: float = 0.0
    eta: float = 0.0
    prandtl: float = 0.72
    ch: float = 0.0
    alpha: float = 0.0

    def __post_init__(self):
        if self.gamma <= 1.0:
            raise ValueError("gamma must exceed 1")
        if self.mu < 0 or self.eta < 0 or self.alpha < 0 or self.ch < 0:
            raise ValueError("mu, eta, alpha, ch must be nonnegative")
        if self.prandtl <= 0:
            raise ValueError("Prandtl number must be positive")

    @property
    def kappa_over_R(self) -> float:
        """Heat conduction coefficient over gas constant, mu*gamma/((gamma-1)*Pr)."""
        return self.mu * self.gamma / ((self.gamma - 1.0) * self.prandtl)


# ------------------------------------------------------------------
# state conversions and entropy machinery
# ------------------------------------------------------------------

def _check_positive(name: str, q: np.ndarray):
    q = np.asarray(q)
    if np.all(q > 0):
        return
    bad = np.flatnonzero(~(np.ravel(q) > 0))
    raise PositivityError(f"non-positive {name} at flat node {bad[0]}"
                          f" (value {np.ravel(q)[bad[0]]:.6g})", where=int(bad[0]))


def prim_to_cons(rho, v, p, B, psi, params: PhysParams) -> np.ndarray:
    """Conservative state from primitives; E from the ideal-gas closure."""
    rho = np.asarray(rho, dtype=float)
    v = np.asarray(v, dtype=float)
    B = np.asarray(B, dtype=float)
    psi = np.asarray(psi, dtype=float)
    p = np.asarray(p, dtype=float)
    _check_positive("density", rho)
    _check_positive("pressure", p)
    u = np.empty(np.broadcast_shapes(rho.shape, psi.shape, p.shape) + (9,))
    u[..., 0] = rho
    u[..., 1:4] = rho[..., None] * v
    u[..., 4] = (p / (params.gamma - 1.0)
                 + 0.5 * rho * np.sum(v * v, axis=-1)
                 + 0.5 * np.sum(B * B, axis=-1) + 0.5 * psi * psi)
    u[..., 5:8] = B
    u[..., 8] = psi
    return u


def cons_to_prim(u: np.ndarray, params: PhysParams):
    """Primitives (rho, v, p, B, psi) from the conservative state.

    Raises:
        PositivityError: if density or pressure is non-positive anywhere.
    """
    u = np.asarray(u, dtype=float)
    rho = u[..., 0]
    _check_positive("density", rho)
    v = u[..., 1:4] / rho[..., None]
    B = u[..., 5:8]
    psi = u[..., 8]
    p = pressure(u, params)
    _check_positive("pressure", p)
    return rho, v, p, B, psi


def pressure(u: np.ndarray, params: PhysParams) -> np.ndarray:
    """Thermodynamic pressure; no positivity check."""
    u = np.asarray(u, dtype=float)
    rho = u[..., 0]
    kin = 0.5 * np.sum(u[..., 1:4] ** 2, axis=-1) / rho
    mag = 0.5 * np.sum(u[..., 5:8] ** 2, axis=-1)
    return (params.gamma - 1.0) * (u[..., 4] - kin - mag - 0.5 * u[..., 8] ** 2)


def entropy_function(u: np.ndarray, params: PhysParams) -> np.ndarray:
    """Mathematical entropy density -rho*s/(gamma-1), s = ln(p rho^-gamma)."""
    rho, v, p, B, psi = cons_to_prim(u, params)
    s = np.log(p) - params.gamma * np.log(rho)
    return -rho * s / (params.gamma - 1.0)


def entropy_variables(u: np.ndarray, params: PhysParams) -> np.ndarray:
    """Entropy variables w = dS/du; w5 = -2*beta is negative for admissible states."""
    rho, v, p, B, psi = cons_to_prim(u, params)
    g = params.gamma
    beta = rho / (2.0 * p)
    s = np.log(p) - g * np.log(rho)
    w = np.empty_like(u)
    w[..., 0] = (g - s) / (g - 1.0) - beta * np.sum(v * v, axis=-1)
    w[..., 1:4] = 2.0 * beta[..., None] * v
    w[..., 4] = -2.0 * beta
    w[..., 5:8] = 2.0 * beta[..., None] * B
    w[..., 8] = 2.0 * beta * psi
    return w


def entropy_flux(u: np.ndarray, params: PhysParams) -> np.ndarray:
    """Entropy flux v*S, shape (..., 3)."""
    rho, v, p, B, psi = cons_to_prim(u, params)
    S = entropy_function(u, params)
    return v * S[..., None]


def powell_phi(u: np.ndarray) -> np.ndarray:
    """Non-conservative state vector (0, B, v.B, v, 0) scaling div(B)."""
    u = np.asarray(u, dtype=float)
    rho = u[..., 0]
    v = u[..., 1:4] / rho[..., None]
    B = u[..., 5:8]
    phi = np.zeros_like(u)
    phi[..., 1:4] = B
    phi[..., 4] = np.sum(v * B, axis=-1)
    phi[..., 5:8] = v
    return phi


def powell_contraction(u: np.ndarray, params: PhysParams) -> np.ndarray:
    """w^T phi = 2*beta*(v.B), the Powell vector contracted into entropy space."""
    rho, v, p, B, psi = cons_to_prim(u, params)
    return rho / p * np.sum(v * B, axis=-1)


def glm_phi(u: np.ndarray) -> np.ndarray:
    """Galilean non-conservative block vector, component l: (0,...,v_l*psi,...,v_l)."""
    u = np.asarray(u, dtype=float)
    v = u[..., 1:4] / u[..., 0][..., None]
    psi = u[..., 8]
    phi = np.zeros(u.shape[:-1] + (3, 9))
    phi[..., :, 4] = v * psi[..., None]
    phi[..., :, 8] = v
    return phi


def glm_source(u: np.ndarray, params: PhysParams) -> np.ndarray:
    """Divergence-error damping source (0, ..., 0, -alpha*psi)."""
    r = np.zeros_like(np.asarray(u, dtype=float))
    r[..., 8] = -params.alpha * u[..., 8]
    return r


# ------------------------------------------------------------------
# advective fluxes
# ------------------------------------------------------------------

def advective_flux_split(u: np.ndarray, params: PhysParams):
    """Hydrodynamic, magnetic and cleaning blocks of the advective flux.

    Returns:
        (euler, mhd, glm), each shape (..., 3, 9) with the direction axis
        second to last.  Their sum is the full advective flux.
    """
    rho, v, p, B, psi = cons_to_prim(u, params)
    g, ch = params.gamma, params.ch
    base = u.shape[:-1]
    fe = np.zeros(base + (3, 9))
    fm = np.zeros(base + (3, 9))
    fg = np.zeros(base + (3, 9))
    B2 = np.sum(B * B, axis=-1)
    vB = np.sum(v * B, axis=-1)
    v2 = np.sum(v * v, axis=-1)
    for d in range(3):
        vd = v[..., d]
        Bd = B[..., d]
        fe[..., d, 0] = rho * vd
        fe[..., d, 1:4] = rho[..., None] * vd[..., None] * v
        fe[..., d, 1 + d] += p
        fe[..., d, 4] = vd * (0.5 * rho * v2 + g * p / (g - 1.0))
        fm[..., d, 1:4] = -Bd[..., None] * B
        fm[..., d, 1 + d] += 0.5 * B2
        fm[..., d, 4] = vd * B2 - Bd * vB
        fm[..., d, 5:8] = vd[..., None] * B - Bd[..., None] * v
        fg[..., d, 4] = ch * psi * Bd
        fg[..., d, 5 + d] = ch * psi
        fg[..., d, 8] = ch * Bd
    return fe, fm, fg


def advective_flux(u: np.ndarray, params: PhysParams) -> np.ndarray:
    """Full advective flux, shape (..., 3, 9)."""
    fe, fm, fg = advective_flux_split(u, params)
    return fe + fm + fg


def entropy_flux_potentials(u: np.ndarray, params: PhysParams):
    """Flux potentials of the three advective blocks, each shape (..., 3).

    Euler block: w^T f - v S.  Magnetic block: w^T f + Theta B with
    Theta = w^T phi.  Cleaning block: w^T f.
    """
    w = entropy_variables(u, params)
    fe, fm, fg = advective_flux_split(u, params)
    fS = entropy_flux(u, params)
    theta = powell_contraction(u, params)
    B = u[..., 5:8]
    pe = np.einsum("...c,...dc->...d", w, fe) - fS
    pm = np.einsum("...c,...dc->...d", w, fm) + theta[..., None] * B
    pg = np.einsum("...c,...dc->...d", w, fg)
    return pe, pm, pg


# ------------------------------------------------------------------
# viscous and resistive fluxes
# ------------------------------------------------------------------

def viscous_flux_direct(u: np.ndarray, grad_prim: np.ndarray,
                        params: PhysParams) -> np.ndarray:
    """Viscous/resistive flux from primitive-variable gradients.

    Args:
        u: conservative state, shape (..., 9).
        grad_prim: gradients of (rho, v1, v2, v3, p, B1, B2, B3, psi),
            shape (..., 3, 9) with grad_prim[..., d, c] = d(prim_c)/dx_d.

    Returns:
        Flux block, shape (..., 3, 9).  Momentum rows carry the deviatoric
        stress, the energy row tau.v plus heat conduction of p/(R rho) plus
        the resistive Poynting term, the magnetic rows the resistive terms.
    """
    rho, v, p, B, psi = cons_to_prim(u, params)
    mu, eta, kR = params.mu, params.eta, params.kappa_over_R
    gv = grad_prim[..., :, 1:4]          # gv[..., d, l] = dv_l/dx_d
    gB = grad_prim[..., :, 5:8]
    grho = grad_prim[..., :, 0]
    gp = grad_prim[..., :, 4]
    gT = gp / rho[..., None] - (p / rho**2)[..., None] * grho   # grad(p/rho)
    divv = gv[..., 0, 0] + gv[..., 1, 1] + gv[..., 2, 2]
    f = np.zeros(u.shape[:-1] + (3, 9))
    # curl B: c_l = eps_lmn dB_n/dx_m with gB[..., m, n]
    curl = np.stack([gB[..., 1, 2] - gB[..., 2, 1],
                     gB[..., 2, 0] - gB[..., 0, 2],
                     gB[..., 0, 1] - gB[..., 1, 0]], axis=-1)
    cxB = np.cross(curl, B)
    for d in range(3):
        tau_d = mu * (gv[..., d, :] + gv[..., :, d])
        f[..., d, 1:4] = tau_d
        f[..., d, 1 + d] -= (2.0 / 3.0) * mu * divv
        f[..., d, 4] = (np.sum(tau_d * v, axis=-1)
                        - (2.0 / 3.0) * mu * divv * v[..., d]
                        + kR * gT[..., d] - eta * cxB[..., d])
        f[..., d, 5:8] = eta * (gB[..., d, :] - gB[..., :, d])
    return f


def viscous_flux_entropy(w: np.ndarray, grad_w: np.ndarray,
                         params: PhysParams) -> np.ndarray:
    """Viscous/resistive flux as a linear map on entropy-variable gradients.

    Algebraically identical to applying :func:`k_matrices`, written out so
    the hot path avoids materializing 27x27 matrices.  Velocity, magnetic
    field and temperature gradients are recovered from grad(w) via
      grad v_l   = -grad w_{1+l}/w5 + w_{1+l} grad w5 / w5^2,
      grad B_l   = -grad w_{5+l}/w5 + w_{5+l} grad w5 / w5^2,
      grad (p/rho) = grad w5 / w5^2.

    Args:
        w: entropy variables, shape (..., 9), w[..., 4] < 0.
        grad_w: shape (..., 3, 9), grad_w[..., d, c] = dw_c/dx_d.
    """
    w = np.asarray(w, dtype=float)
    w5 = w[..., 4]
    v = -w[..., 1:4] / w5[..., None]
    B = -w[..., 5:8] / w5[..., None]
    gw5 = grad_w[..., :, 4]
    iw5 = 1.0 / w5
    gv = (-grad_w[..., :, 1:4] * iw5[..., None, None]
          + (w[..., None, 1:4] * gw5[..., :, None]) * (iw5**2)[..., None, None])
    gB = (-grad_w[..., :, 5:8] * iw5[..., None, None]
          + (w[..., None, 5:8] * gw5[..., :, None]) * (iw5**2)[..., None, None])
    gT = gw5 * (iw5**2)[..., None]
    mu, eta, kR = params.mu, params.eta, params.kappa_over_R
    divv = gv[..., 0, 0] + gv[..., 1, 1] + gv[..., 2, 2]
    curl = np.stack([gB[..., 1, 2] - gB[..., 2, 1],
                     gB[..., 2, 0] - gB[..., 0, 2],
                     gB[..., 0, 1] - gB[..., 1, 0]], axis=-1)
    cxB = np.cross(curl, B)
    f = np.zeros(w.shape[:-1] + (3, 9))
    for d in range(3):
        tau_d = mu * (gv[..., d, :] + gv[..., :, d])
        f[..., d, 1:4] = tau_d
        f[..., d, 1 + d] -= (2.0 / 3.0) * mu * divv
        f[..., d, 4] = (np.sum(tau_d * v, axis=-1)
                        - (2.0 / 3.0) * mu * divv * v[..., d]
                        + kR * gT[..., d] - eta * cxB[..., d])
        f[..., d, 5:8] = eta * (gB[..., d, :] - gB[..., :, d])
    return f


def k_matrices(w: np.ndarray, params: PhysParams) -> np.ndarray:
    """Explicit 27x27 dissipation block matrix K with f^v = K grad(w).

    Block K_ij maps dw/dx_j into the i-direction flux; blocks satisfy
    K_ii = K_ii^T and K_ij = K_ji^T, and the assembled matrix is symmetric
    positive semi-definite for admissible w (w5 < 0).

    Returns:
        shape (..., 27, 27); row index i*9+r, column index j*9+c.
    """
    w = np.asarray(w, dtype=float)
    if np.any(w[..., 4] >= 0):
        raise PositivityError("entropy state with w5 >= 0 is inadmissible")
    mu, eta, kR = params.mu, params.eta, params.kappa_over_R
    w2, w3, w4, w5 = (w[..., c] for c in range(1, 5))
    w6, w7, w8 = (w[..., c] for c in range(5, 8))
    K = np.zeros(w.shape[:-1] + (27, 27))

    def blk(i, j):
        return K[..., 9 * i:9 * (i + 1), 9 * j:9 * (j + 1)]

    # -- diagonal blocks ------------------------------------------------
    perp = {0: (w7, w8, 6, 7), 1: (w6, w8, 5, 7), 2: (w6, w7, 5, 6)}
    wvel = (w2, w3, w4)
    for i in range(3):
        M = blk(i, i)
        for l in range(3):
            coef = 4.0 * mu / 3.0 if l == i else mu
            M[..., 1 + l, 1 + l] = -coef
            M[..., 1 + l, 4] = coef * wvel[l] / w5
            M[..., 4, 1 + l] = coef * wvel[l] / w5
        wa, wb, ca, cb = perp[i]
        M[..., 4, 4] = (-(4.0 * mu / 3.0) * wvel[i] ** 2 / w5**2
                        - sum(mu * wvel[l] ** 2 / w5**2 for l in range(3) if l != i)
                        + kR / w5 - eta * (wa**2 + wb**2) / w5**2)
        M[..., 4, ca] = eta * wa / w5
        M[..., 4, cb] = eta * wb / w5
        M[..., ca, 4] = eta * wa / w5
        M[..., cb, 4] = eta * wb / w5
        M[..., ca, ca] = -eta
        M[..., cb, cb] = -eta

    # -- off-diagonal blocks --------------------------------------------
    # Viscous coupling of directions (i, j), i != j: shear stress pattern.
    wmag = (w6, w7, w8)
    for i in range(3):
        for j in range(3):
            if i == j:
                continue
            M = blk(i, j)
            M[..., 1 + i, 1 + j] = 2.0 * mu / 3.0
            M[..., 1 + i, 4] = -2.0 * mu * wvel[j] / (3.0 * w5)
            M[..., 1 + j, 1 + i] = -mu
            M[..., 1 + j, 4] = mu * wvel[i] / w5
            M[..., 4, 1 + i] = mu * wvel[j] / w5
            M[..., 4, 1 + j] = -2.0 * mu * wvel[i] / (3.0 * w5)
            # products first: keeps K_ij == K_ji^T exact in floating point
            vv = wvel[i] * wvel[j]
            bb = wmag[i] * wmag[j]
            M[..., 4, 4] = -mu * vv / (3.0 * w5**2) + eta * bb / w5**2
            M[..., 4, 5 + i] = -eta * wmag[j] / w5
            M[..., 5 + j, 4] = -eta * wmag[i] / w5
            M[..., 5 + j, 5 + i] = eta

    return K / w5[..., None, None]


# ------------------------------------------------------------------
# characteristic speeds
# ------------------------------------------------------------------

def wave_speeds(u: np.ndarray, n: np.ndarray, params: PhysParams):
    """Ideal-MHD characteristic speeds in the unit direction n.

    Returns:
        (c_sound, c_alfven, c_fast, lam_max) with
        lam_max = max(|v.n| + c_fast, ch).
    """
    rho, v, p, B, psi = cons_to_prim(u, params)
    n = np.asarray(n, dtype=float)
    cs2 = params.gamma * p / rho
    ca2 = np.sum(B * B, axis=-1) / rho
    can2 = np.sum(B * n, axis=-1) ** 2 / rho
    tot = cs2 + ca2
    disc = np.sqrt(np.maximum(tot**2 - 4.0 * cs2 * can2, 0.0))
    cf = np.sqrt(0.5 * (tot + disc))
    vn = np.abs(np.sum(v * n, axis=-1))
    lam = np.maximum(vn + cf, params.ch)
    return np.sqrt(cs2), np.sqrt(ca2), cf, lam


def max_signal_speed(u: np.ndarray, params: PhysParams) -> np.ndarray:
    """Direction-free advective bound |v| + sqrt(c_s^2 + c_a^2) per node."""
    rho, v, p, B, psi = cons_to_prim(u, params)
    cf = np.sqrt((params.gamma * p + np.sum(B * B, axis=-1)) / rho)
    return np.sqrt(np.sum(v * v, axis=-1)) + cf
