"""Two-point numerical fluxes and interface couplings.

The entropy-conservative (EC) two-point flux is the building block of both
the split-form volume discretization and the surface coupling.  Only the
x-direction formula is canonical; the y/z fluxes follow by rotating the
velocity and magnetic-field triplets together, and are validated against
the per-direction entropy-conservation condition rather than a printed
formula.  The entropy-stable (ES) surface flux adds scalar Rusanov-type
dissipation in the conservative variables.
"""

from __future__ import annotations

import numpy as np

from mhdsem.physics import (PhysParams, cons_to_prim, entropy_variables,
                            glm_phi, powell_phi, wave_speeds)

__all__ = ["log_mean", "ec_flux", "ec_flux_split", "es_surface_flux",
           "noncons_surface_B", "noncons_surface_psi", "br1_couplings"]

_SERIES_CUT = 1.0e-4


def log_mean(a, b):
    """Numerically stable logarithmic mean (b - a) / (ln b - ln a).

    For nearly equal arguments the direct quotient loses all digits, so the
    log is replaced by the Pade-like series of Ismail and Roe: with
    f = (a - b)/(a + b) and u = f^2,
    ln(a/b) ~= 2 f (1 + u/3 + u^2/5 + u^3/7) when u < 1e-4.
    Result always lies between min(a, b) and max(a, b).
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if np.any(a <= 0) or np.any(b <= 0):
        raise ValueError("log_mean requires positive arguments")
    f = (a - b) / (a + b)
    u = f * f
    series = 2.0 * (1.0 + u / 3.0 + u * u / 5.0 + u * u * u / 7.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        exact = np.log(a / b) / f          # unusable only where f ~ 0
    denom = np.where(u < _SERIES_CUT, series, exact)
    return (a + b) / denom


class _PairMeans:
    """Arithmetic/log means of the quantities entering the EC flux."""

    __slots__ = ("rholn", "betaln", "v", "B", "psi", "p", "v2sum", "BBsum",
                 "vBB", "vB", "Bpsi")

    def __init__(self, uL, uR, params: PhysParams):
        rhoL, vL, pL, BL, psiL = cons_to_prim(uL, params)
        rhoR, vR, pR, BR, psiR = cons_to_prim(uR, params)
        betaL = rhoL / (2.0 * pL)
        betaR = rhoR / (2.0 * pR)
        av = lambda x, y: 0.5 * (x + y)
        self.rholn = log_mean(rhoL, rhoR)
        self.betaln = log_mean(betaL, betaR)
        self.v = av(vL, vR)
        self.B = av(BL, BR)
        self.psi = av(psiL, psiR)
        self.p = av(rhoL, rhoR) / (2.0 * av(betaL, betaR))
        self.v2sum = av(np.sum(vL * vL, -1), np.sum(vR * vR, -1))
        self.BBsum = av(np.sum(BL * BL, -1), np.sum(BR * BR, -1))
        self.vBB = av(vL * np.sum(BL * BL, -1)[..., None],
                      vR * np.sum(BR * BR, -1)[..., None])
        self.vB = av(np.sum(vL * BL, -1), np.sum(vR * BR, -1))
        self.Bpsi = av(BL * psiL[..., None], BR * psiR[..., None])


def _ec_blocks(m: _PairMeans, params: PhysParams, base_shape):
    """Euler/MHD/GLM blocks of the EC flux from precomputed pair means."""
    g, ch = params.gamma, params.ch
    fe = np.zeros(base_shape + (3, 9))
    fm = np.zeros(base_shape + (3, 9))
    fg = np.zeros(base_shape + (3, 9))
    for a in range(3):
        b, c = (a + 1) % 3, (a + 2) % 3
        va, vb, vc = m.v[..., a], m.v[..., b], m.v[..., c]
        Ba, Bb, Bc = m.B[..., a], m.B[..., b], m.B[..., c]
        fe[..., a, 0] = m.rholn * va
        fe[..., a, 1 + a] = m.rholn * va * va + m.p
        fe[..., a, 1 + b] = m.rholn * va * vb
        fe[..., a, 1 + c] = m.rholn * va * vc
        fe[..., a, 4] = (fe[..., a, 0]
                         * (0.5 / ((g - 1.0) * m.betaln) - 0.5 * m.v2sum)
                         + fe[..., a, 1 + a] * va + fe[..., a, 1 + b] * vb
                         + fe[..., a, 1 + c] * vc)
        fm[..., a, 1 + a] = -Ba * Ba + 0.5 * m.BBsum
        fm[..., a, 1 + b] = -Ba * Bb
        fm[..., a, 1 + c] = -Ba * Bc
        fm[..., a, 5 + b] = va * Bb - vb * Ba
        fm[..., a, 5 + c] = va * Bc - vc * Ba
        fm[..., a, 4] = (fm[..., a, 1 + a] * va + fm[..., a, 1 + b] * vb
                         + fm[..., a, 1 + c] * vc
                         + fm[..., a, 5 + b] * Bb + fm[..., a, 5 + c] * Bc
                         - 0.5 * m.vBB[..., a] + m.vB * Ba)
        fg[..., a, 5 + a] = ch * m.psi
        fg[..., a, 8] = ch * Ba
        fg[..., a, 4] = ch * (2.0 * m.psi * Ba - m.Bpsi[..., a])
    return fe, fm, fg


def ec_flux(uL: np.ndarray, uR: np.ndarray, params: PhysParams) -> np.ndarray:
    """Entropy-conservative two-point flux, shape (..., 3, 9).

    Symmetric and consistent; per direction l it satisfies
    jump(w)^T f_l = jump(Psi_l) - avg(B_l) jump(Theta) with the total flux
    potential Psi and the contracted Powell vector Theta.
    """
    fe, fm, fg = ec_flux_split(uL, uR, params)
    return fe + fm + fg


def ec_flux_split(uL: np.ndarray, uR: np.ndarray, params: PhysParams):
    """EC flux split into (euler, mhd, glm) blocks, each (..., 3, 9).

    Each block satisfies its own jump condition: the Euler and GLM blocks
    balance the jumps of their flux potentials alone, the magnetic block
    additionally carries -avg(B) jump(Theta).
    """
    uL = np.asarray(uL, dtype=float)
    m = _PairMeans(uL, uR, params)
    return _ec_blocks(m, params, np.broadcast_shapes(uL.shape, np.shape(uR))[:-1])


def es_surface_flux(uL: np.ndarray, uR: np.ndarray, n: np.ndarray,
                    params: PhysParams) -> np.ndarray:
    """Entropy-stable surface flux F_ec . n - 0.5 lam_max (uR - uL).

    Scalar Rusanov realization of the interface dissipation operator;
    lam_max is the larger of the two states' maximum signal speeds in the
    direction n (GLM wave speed included).
    """
    F = ec_flux(uL, uR, params)
    lamL = wave_speeds(uL, n, params)[3]
    lamR = wave_speeds(uR, n, params)[3]
    lam = np.maximum(lamL, lamR)
    Fn = np.einsum("...dc,...d->...c", F, np.asarray(n, dtype=float))
    return Fn - 0.5 * lam[..., None] * (np.asarray(uR, dtype=float) - uL)


def noncons_surface_B(uM: np.ndarray, uP: np.ndarray, n: np.ndarray) -> np.ndarray:
    """Interface value of the Powell coupling, phi(uM) (avg(B) . n).

    uM is the element-local state; the residual contribution of the term is
    this value minus phi(uM) (B_M . n), i.e. 0.5 phi(uM) (jump(B) . n).
    """
    Bavg = 0.5 * (uM[..., 5:8] + uP[..., 5:8])
    return powell_phi(uM) * np.sum(Bavg * n, axis=-1)[..., None]


def noncons_surface_psi(uM: np.ndarray, uP: np.ndarray, n: np.ndarray) -> np.ndarray:
    """Interface value of the Galilean GLM coupling, (phi_glm(uM) . n) avg(psi).

    The residual contribution is this value minus (phi_glm(uM) . n) psi_M;
    contracting the residual with w(uM) vanishes identically per face node.
    """
    phin = np.einsum("...dc,...d->...c", glm_phi(uM), np.asarray(n, dtype=float))
    return phin * (0.5 * (uM[..., 8] + uP[..., 8]))[..., None]


def br1_couplings(uM: np.ndarray, uP: np.ndarray, fvM: np.ndarray,
                  fvP: np.ndarray, n: np.ndarray, params: PhysParams):
    """First Bassi-Rebay interface values: plain arithmetic averages.

    Returns:
        (W_star, Fv_star_n): averaged entropy variables (..., 9) and the
        averaged viscous normal flux (..., 9).
    """
    Wstar = 0.5 * (entropy_variables(uM, params) + entropy_variables(uP, params))
    Fvn = np.einsum("...dc,...d->...c", 0.5 * (fvM + fvP), np.asarray(n, dtype=float))
    return Wstar, Fvn
