"""Numba kernels for the per-element hot loops of the RHS.

Data layout: solution fields are (E, n, n, n, 9) with the component axis
last; the per-node primitive cache is (E, n, n, n, 15) with entries
(rho, v1, v2, v3, p, B1, B2, B3, psi, beta, ln rho, ln beta, |v|^2, |B|^2,
v.B).  Metric terms are (E, n, n, n, 3, 3) with [l, d] = d-th physical
component of the l-th volume-weighted contravariant vector.

The split-form volume kernel accumulates the raw left-hand-side operators
(flux-differencing divergence plus both non-conservative volume terms);
sign conventions are applied by the caller.
"""

from __future__ import annotations

import numpy as np
from numba import get_thread_id, njit, prange

# prim-cache component indices
RHO, VX, VY, VZ, PRS, BX, BY, BZ, PSI, BETA, LNR, LNB, V2, B2, VB = range(15)


@njit(cache=True)
def _logmean(a, b, lna, lnb):
    # stable log mean using precomputed logs away from the a ~ b regime
    f = (a - b) / (a + b)
    u = f * f
    if u < 1.0e-4:
        den = 2.0 * (1.0 + u / 3.0 + u * u / 5.0 + u * u * u / 7.0)
    else:
        den = (lna - lnb) / f
    return (a + b) / den


@njit(cache=True)
def primitives_kernel(u, gamma, prim, fail):
    """Fill the primitive cache; record the first inadmissible node in fail.

    fail is int64[4]; fail[0] == -1 on success, otherwise (e, i, j, k).
    """
    E, n = u.shape[0], u.shape[1]
    fail[0] = -1
    for e in range(E):
        for i in range(n):
            for j in range(n):
                for k in range(n):
                    q = u[e, i, j, k]
                    rho = q[0]
                    if not rho > 0.0:
                        fail[0], fail[1], fail[2], fail[3] = e, i, j, k
                        return
                    v1 = q[1] / rho
                    v2 = q[2] / rho
                    v3 = q[3] / rho
                    vv = v1 * v1 + v2 * v2 + v3 * v3
                    bb = q[5] * q[5] + q[6] * q[6] + q[7] * q[7]
                    p = (gamma - 1.0) * (q[4] - 0.5 * rho * vv - 0.5 * bb
                                         - 0.5 * q[8] * q[8])
                    if not p > 0.0:
                        fail[0], fail[1], fail[2], fail[3] = e, i, j, k
                        return
                    r = prim[e, i, j, k]
                    r[RHO] = rho
                    r[VX], r[VY], r[VZ] = v1, v2, v3
                    r[PRS] = p
                    r[BX], r[BY], r[BZ] = q[5], q[6], q[7]
                    r[PSI] = q[8]
                    r[BETA] = 0.5 * rho / p
                    r[LNR] = np.log(rho)
                    r[LNB] = np.log(r[BETA])
                    r[V2] = vv
                    r[B2] = bb
                    r[VB] = v1 * q[5] + v2 * q[6] + v3 * q[7]


@njit(cache=True)
def ec_contract(pL, pR, a0, a1, a2, ch, g, out):
    """Entropy-conservative two-point flux contracted with a metric vector.

    out[c] = sum_d a_d * F_d(uL, uR)[c]; the three spatial flux directions
    follow from the x-direction formula by rotating (v, B) together.
    """
    rholn = _logmean(pL[RHO], pR[RHO], pL[LNR], pR[LNR])
    betaln = _logmean(pL[BETA], pR[BETA], pL[LNB], pR[LNB])
    vb0 = 0.5 * (pL[VX] + pR[VX])
    vb1 = 0.5 * (pL[VY] + pR[VY])
    vb2 = 0.5 * (pL[VZ] + pR[VZ])
    Bb0 = 0.5 * (pL[BX] + pR[BX])
    Bb1 = 0.5 * (pL[BY] + pR[BY])
    Bb2 = 0.5 * (pL[BZ] + pR[BZ])
    psib = 0.5 * (pL[PSI] + pR[PSI])
    pbar = (pL[RHO] + pR[RHO]) / (2.0 * (pL[BETA] + pR[BETA]))
    v2b = 0.5 * (pL[V2] + pR[V2])
    BBb = 0.5 * (pL[B2] + pR[B2])
    vBb = 0.5 * (pL[VB] + pR[VB])
    vBB0 = 0.5 * (pL[VX] * pL[B2] + pR[VX] * pR[B2])
    vBB1 = 0.5 * (pL[VY] * pL[B2] + pR[VY] * pR[B2])
    vBB2 = 0.5 * (pL[VZ] * pL[B2] + pR[VZ] * pR[B2])
    Bps0 = 0.5 * (pL[BX] * pL[PSI] + pR[BX] * pR[PSI])
    Bps1 = 0.5 * (pL[BY] * pL[PSI] + pR[BY] * pR[PSI])
    Bps2 = 0.5 * (pL[BZ] * pL[PSI] + pR[BZ] * pR[PSI])
    eterm = 0.5 / ((g - 1.0) * betaln) - 0.5 * v2b
    mag = pbar + 0.5 * BBb

    # direction x: (a, b, c) = (0, 1, 2)
    f0 = rholn * vb0
    f1 = rholn * vb0 * vb0 - Bb0 * Bb0 + mag
    f2 = rholn * vb0 * vb1 - Bb0 * Bb1
    f3 = rholn * vb0 * vb2 - Bb0 * Bb2
    f5 = ch * psib
    f6 = vb0 * Bb1 - vb1 * Bb0
    f7 = vb0 * Bb2 - vb2 * Bb0
    f8 = ch * Bb0
    f4 = (f0 * eterm + f1 * vb0 + f2 * vb1 + f3 * vb2
          + f5 * Bb0 + f6 * Bb1 + f7 * Bb2 + f8 * psib
          - 0.5 * vBB0 + vBb * Bb0 - ch * Bps0)
    out[0] = a0 * f0
    out[1] = a0 * f1
    out[2] = a0 * f2
    out[3] = a0 * f3
    out[4] = a0 * f4
    out[5] = a0 * f5
    out[6] = a0 * f6
    out[7] = a0 * f7
    out[8] = a0 * f8

    # direction y: (a, b, c) = (1, 2, 0)
    f0 = rholn * vb1
    f2 = rholn * vb1 * vb1 - Bb1 * Bb1 + mag
    f3 = rholn * vb1 * vb2 - Bb1 * Bb2
    f1 = rholn * vb1 * vb0 - Bb1 * Bb0
    f6 = ch * psib
    f7 = vb1 * Bb2 - vb2 * Bb1
    f5 = vb1 * Bb0 - vb0 * Bb1
    f8 = ch * Bb1
    f4 = (f0 * eterm + f2 * vb1 + f3 * vb2 + f1 * vb0
          + f6 * Bb1 + f7 * Bb2 + f5 * Bb0 + f8 * psib
          - 0.5 * vBB1 + vBb * Bb1 - ch * Bps1)
    out[0] += a1 * f0
    out[1] += a1 * f1
    out[2] += a1 * f2
    out[3] += a1 * f3
    out[4] += a1 * f4
    out[5] += a1 * f5
    out[6] += a1 * f6
    out[7] += a1 * f7
    out[8] += a1 * f8

    # direction z: (a, b, c) = (2, 0, 1)
    f0 = rholn * vb2
    f3 = rholn * vb2 * vb2 - Bb2 * Bb2 + mag
    f1 = rholn * vb2 * vb0 - Bb2 * Bb0
    f2 = rholn * vb2 * vb1 - Bb2 * Bb1
    f7 = ch * psib
    f5 = vb2 * Bb0 - vb0 * Bb2
    f6 = vb2 * Bb1 - vb1 * Bb2
    f8 = ch * Bb2
    f4 = (f0 * eterm + f3 * vb2 + f1 * vb0 + f2 * vb1
          + f7 * Bb2 + f5 * Bb0 + f6 * Bb1 + f8 * psib
          - 0.5 * vBB2 + vBb * Bb2 - ch * Bps2)
    out[0] += a2 * f0
    out[1] += a2 * f1
    out[2] += a2 * f2
    out[3] += a2 * f3
    out[4] += a2 * f4
    out[5] += a2 * f5
    out[6] += a2 * f6
    out[7] += a2 * f7
    out[8] += a2 * f8


@njit(cache=True, parallel=True, fastmath={"contract", "reassoc", "nsz"})
def volume_kernel(prim, Jai, D, ch, gamma, glm_on, res, buf9, buf_ncb,
                  buf_gac, diag_big):
    """Split-form advective divergence plus non-conservative volume terms.

    Writes into res (E, n, n, n, 9), overwriting.  For each node the
    accumulated value is
      2 sum_m D[i,m] F_ec(u_i, u_m) . avg(Ja^dir)   (three directions)
      + phi_powell(u_i) * sum_dir sum_m D[i,m] (B_m . avg(Ja^dir))
      + phi_glm(u_i) . (Ja^dir at i) * sum_m D[i,m] psi_m.

    buf9 (E, 9) and buf_ncb/buf_gac (E, n, n, n) are caller-allocated
    per-element workspaces, keeping allocations out of the parallel loop.
    diag_big flags diagonal derivative-matrix entries that are genuinely
    nonzero (the LGL interior diagonal is zero up to roundoff, so its
    two-point flux evaluations are skipped; the scalar non-conservative
    accumulators keep every entry so row sums stay exact).
    """
    E, n = prim.shape[0], prim.shape[1]
    for e in prange(E):
        f9 = buf9[e]
        ncB = buf_ncb[e]
        gac = buf_gac[e]
        ncB[:] = 0.0
        gac[:] = 0.0
        res[e] = 0.0

        for j in range(n):
            for k in range(n):
                # xi direction
                for i in range(n):
                    pL = prim[e, i, j, k]
                    dii = D[i, i]
                    a0 = Jai[e, i, j, k, 0, 0]
                    a1 = Jai[e, i, j, k, 0, 1]
                    a2 = Jai[e, i, j, k, 0, 2]
                    if diag_big[i]:
                        ec_contract(pL, pL, a0, a1, a2, ch, gamma, f9)
                        for c in range(9):
                            res[e, i, j, k, c] += 2.0 * dii * f9[c]
                    ncB[i, j, k] += dii * (pL[BX] * a0 + pL[BY] * a1
                                           + pL[BZ] * a2)
                    gac[i, j, k] += dii * pL[PSI]
                    for m in range(i + 1, n):
                        pR = prim[e, m, j, k]
                        a0 = 0.5 * (Jai[e, i, j, k, 0, 0] + Jai[e, m, j, k, 0, 0])
                        a1 = 0.5 * (Jai[e, i, j, k, 0, 1] + Jai[e, m, j, k, 0, 1])
                        a2 = 0.5 * (Jai[e, i, j, k, 0, 2] + Jai[e, m, j, k, 0, 2])
                        ec_contract(pL, pR, a0, a1, a2, ch, gamma, f9)
                        cim = 2.0 * D[i, m]
                        cmi = 2.0 * D[m, i]
                        for c in range(9):
                            res[e, i, j, k, c] += cim * f9[c]
                            res[e, m, j, k, c] += cmi * f9[c]
                        bR = pR[BX] * a0 + pR[BY] * a1 + pR[BZ] * a2
                        bL = pL[BX] * a0 + pL[BY] * a1 + pL[BZ] * a2
                        ncB[i, j, k] += D[i, m] * bR
                        ncB[m, j, k] += D[m, i] * bL
                        gac[i, j, k] += D[i, m] * pR[PSI]
                        gac[m, j, k] += D[m, i] * pL[PSI]

        # convert the psi derivative accumulator into the GLM volume term:
        # needs (Ja^1 . v) at the node, so do it before reusing gac
        if glm_on:
            for i in range(n):
                for j in range(n):
                    for k in range(n):
                        p = prim[e, i, j, k]
                        vJa = (Jai[e, i, j, k, 0, 0] * p[VX]
                               + Jai[e, i, j, k, 0, 1] * p[VY]
                               + Jai[e, i, j, k, 0, 2] * p[VZ])
                        res[e, i, j, k, 4] += vJa * p[PSI] * gac[i, j, k]
                        res[e, i, j, k, 8] += vJa * gac[i, j, k]
        gac[:] = 0.0

        for i in range(n):
            for k in range(n):
                # eta direction
                for j in range(n):
                    pL = prim[e, i, j, k]
                    djj = D[j, j]
                    a0 = Jai[e, i, j, k, 1, 0]
                    a1 = Jai[e, i, j, k, 1, 1]
                    a2 = Jai[e, i, j, k, 1, 2]
                    if diag_big[j]:
                        ec_contract(pL, pL, a0, a1, a2, ch, gamma, f9)
                        for c in range(9):
                            res[e, i, j, k, c] += 2.0 * djj * f9[c]
                    ncB[i, j, k] += djj * (pL[BX] * a0 + pL[BY] * a1
                                           + pL[BZ] * a2)
                    gac[i, j, k] += djj * pL[PSI]
                    for m in range(j + 1, n):
                        pR = prim[e, i, m, k]
                        a0 = 0.5 * (Jai[e, i, j, k, 1, 0] + Jai[e, i, m, k, 1, 0])
                        a1 = 0.5 * (Jai[e, i, j, k, 1, 1] + Jai[e, i, m, k, 1, 1])
                        a2 = 0.5 * (Jai[e, i, j, k, 1, 2] + Jai[e, i, m, k, 1, 2])
                        ec_contract(pL, pR, a0, a1, a2, ch, gamma, f9)
                        cim = 2.0 * D[j, m]
                        cmi = 2.0 * D[m, j]
                        for c in range(9):
                            res[e, i, j, k, c] += cim * f9[c]
                            res[e, i, m, k, c] += cmi * f9[c]
                        bR = pR[BX] * a0 + pR[BY] * a1 + pR[BZ] * a2
                        bL = pL[BX] * a0 + pL[BY] * a1 + pL[BZ] * a2
                        ncB[i, j, k] += D[j, m] * bR
                        ncB[i, m, k] += D[m, j] * bL
                        gac[i, j, k] += D[j, m] * pR[PSI]
                        gac[i, m, k] += D[m, j] * pL[PSI]

        if glm_on:
            for i in range(n):
                for j in range(n):
                    for k in range(n):
                        p = prim[e, i, j, k]
                        vJa = (Jai[e, i, j, k, 1, 0] * p[VX]
                               + Jai[e, i, j, k, 1, 1] * p[VY]
                               + Jai[e, i, j, k, 1, 2] * p[VZ])
                        res[e, i, j, k, 4] += vJa * p[PSI] * gac[i, j, k]
                        res[e, i, j, k, 8] += vJa * gac[i, j, k]
        gac[:] = 0.0

        for i in range(n):
            for j in range(n):
                # zeta direction
                for k in range(n):
                    pL = prim[e, i, j, k]
                    dkk = D[k, k]
                    a0 = Jai[e, i, j, k, 2, 0]
                    a1 = Jai[e, i, j, k, 2, 1]
                    a2 = Jai[e, i, j, k, 2, 2]
                    if diag_big[k]:
                        ec_contract(pL, pL, a0, a1, a2, ch, gamma, f9)
                        for c in range(9):
                            res[e, i, j, k, c] += 2.0 * dkk * f9[c]
                    ncB[i, j, k] += dkk * (pL[BX] * a0 + pL[BY] * a1
                                           + pL[BZ] * a2)
                    gac[i, j, k] += dkk * pL[PSI]
                    for m in range(k + 1, n):
                        pR = prim[e, i, j, m]
                        a0 = 0.5 * (Jai[e, i, j, k, 2, 0] + Jai[e, i, j, m, 2, 0])
                        a1 = 0.5 * (Jai[e, i, j, k, 2, 1] + Jai[e, i, j, m, 2, 1])
                        a2 = 0.5 * (Jai[e, i, j, k, 2, 2] + Jai[e, i, j, m, 2, 2])
                        ec_contract(pL, pR, a0, a1, a2, ch, gamma, f9)
                        cim = 2.0 * D[k, m]
                        cmi = 2.0 * D[m, k]
                        for c in range(9):
                            res[e, i, j, k, c] += cim * f9[c]
                            res[e, i, j, m, c] += cmi * f9[c]
                        bR = pR[BX] * a0 + pR[BY] * a1 + pR[BZ] * a2
                        bL = pL[BX] * a0 + pL[BY] * a1 + pL[BZ] * a2
                        ncB[i, j, k] += D[k, m] * bR
                        ncB[i, j, m] += D[m, k] * bL
                        gac[i, j, k] += D[k, m] * pR[PSI]
                        gac[i, j, m] += D[m, k] * pL[PSI]

        for i in range(n):
            for j in range(n):
                for k in range(n):
                    p = prim[e, i, j, k]
                    if glm_on:
                        vJa = (Jai[e, i, j, k, 2, 0] * p[VX]
                               + Jai[e, i, j, k, 2, 1] * p[VY]
                               + Jai[e, i, j, k, 2, 2] * p[VZ])
                        res[e, i, j, k, 4] += vJa * p[PSI] * gac[i, j, k]
                        res[e, i, j, k, 8] += vJa * gac[i, j, k]
                    # Powell vector times accumulated divergence scalar
                    s = ncB[i, j, k]
                    res[e, i, j, k, 1] += p[BX] * s
                    res[e, i, j, k, 2] += p[BY] * s
                    res[e, i, j, k, 3] += p[BZ] * s
                    res[e, i, j, k, 4] += p[VB] * s
                    res[e, i, j, k, 5] += p[VX] * s
                    res[e, i, j, k, 6] += p[VY] * s
                    res[e, i, j, k, 7] += p[VZ] * s


@njit(cache=True, parallel=True, fastmath={"contract", "reassoc", "nsz"})
def viscous_flux_kernel(prim, grad_w, mu, eta, kR, fv):
    """Physical viscous flux f^v = K grad(w) at every node.

    grad_w is the lifted gradient (E, n, n, n, 3, 9); fv has the same shape
    and is overwritten.  Velocity/field/temperature gradients are recovered
    from the entropy-variable gradients nodally.
    """
    E, n = prim.shape[0], prim.shape[1]
    for e in prange(E):
        gv = np.empty((3, 3))
        gB = np.empty((3, 3))
        tau = np.empty((3, 3))
        for i in range(n):
            for j in range(n):
                for k in range(n):
                    p = prim[e, i, j, k]
                    g = grad_w[e, i, j, k]
                    w5 = -2.0 * p[BETA]
                    iw5 = 1.0 / w5
                    for d in range(3):
                        g5 = g[d, 4]
                        for l in range(3):
                            wl = 2.0 * p[BETA] * p[VX + l]  # w_{1+l}
                            gv[d, l] = (-g[d, 1 + l] + wl * g5 * iw5) * iw5
                            wm = 2.0 * p[BETA] * p[BX + l]  # w_{5+l}
                            gB[d, l] = (-g[d, 5 + l] + wm * g5 * iw5) * iw5
                    divv = gv[0, 0] + gv[1, 1] + gv[2, 2]
                    for d in range(3):
                        for l in range(3):
                            tau[d, l] = mu * (gv[d, l] + gv[l, d])
                        tau[d, d] -= (2.0 / 3.0) * mu * divv
                    c0 = gB[1, 2] - gB[2, 1]
                    c1 = gB[2, 0] - gB[0, 2]
                    c2 = gB[0, 1] - gB[1, 0]
                    # (curl B) x B
                    x0 = c1 * p[BZ] - c2 * p[BY]
                    x1 = c2 * p[BX] - c0 * p[BZ]
                    x2 = c0 * p[BY] - c1 * p[BX]
                    out = fv[e, i, j, k]
                    for d in range(3):
                        out[d, 0] = 0.0
                        out[d, 1] = tau[d, 0]
                        out[d, 2] = tau[d, 1]
                        out[d, 3] = tau[d, 2]
                        gT = g[d, 4] * iw5 * iw5
                        cxB = x0 if d == 0 else (x1 if d == 1 else x2)
                        out[d, 4] = (tau[d, 0] * p[VX] + tau[d, 1] * p[VY]
                                     + tau[d, 2] * p[VZ] + kR * gT - eta * cxB)
                        for l in range(3):
                            out[d, 5 + l] = eta * (gB[d, l] - gB[l, d])
                        out[d, 8] = 0.0


@njit(cache=True, parallel=True)
def primitives_entropy_kernel(u, gamma, prim, w, fail):
    """Primitive cache plus entropy variables in one pass."""
    E, n = u.shape[0], u.shape[1]
    fail[0] = -1
    ln2 = np.log(2.0)
    for e in prange(E):
        if fail[0] >= 0:
            continue
        for i in range(n):
            for j in range(n):
                for k in range(n):
                    q = u[e, i, j, k]
                    rho = q[0]
                    if not rho > 0.0:
                        fail[0], fail[1], fail[2], fail[3] = e, i, j, k
                        continue
                    v1 = q[1] / rho
                    v2 = q[2] / rho
                    v3 = q[3] / rho
                    vv = v1 * v1 + v2 * v2 + v3 * v3
                    bb = q[5] * q[5] + q[6] * q[6] + q[7] * q[7]
                    p = (gamma - 1.0) * (q[4] - 0.5 * rho * vv - 0.5 * bb
                                         - 0.5 * q[8] * q[8])
                    if not p > 0.0:
                        fail[0], fail[1], fail[2], fail[3] = e, i, j, k
                        continue
                    r = prim[e, i, j, k]
                    r[RHO] = rho
                    r[VX], r[VY], r[VZ] = v1, v2, v3
                    r[PRS] = p
                    r[BX], r[BY], r[BZ] = q[5], q[6], q[7]
                    r[PSI] = q[8]
                    beta = 0.5 * rho / p
                    r[BETA] = beta
                    r[LNR] = np.log(rho)
                    r[LNB] = np.log(beta)
                    r[V2] = vv
                    r[B2] = bb
                    r[VB] = v1 * q[5] + v2 * q[6] + v3 * q[7]
                    tb = 2.0 * beta
                    s = (r[LNR] - ln2 - r[LNB]) - gamma * r[LNR]
                    ww = w[e, i, j, k]
                    ww[0] = (gamma - s) / (gamma - 1.0) - beta * vv
                    ww[1] = tb * v1
                    ww[2] = tb * v2
                    ww[3] = tb * v3
                    ww[4] = -tb
                    ww[5] = tb * q[5]
                    ww[6] = tb * q[6]
                    ww[7] = tb * q[7]
                    ww[8] = tb * q[8]


@njit(cache=True)
def _face_index(f, a, b, n):
    if f == 0:
        return 0, a, b
    if f == 1:
        return n - 1, a, b
    if f == 2:
        return a, 0, b
    if f == 3:
        return a, n - 1, b
    if f == 4:
        return a, b, 0
    return a, b, n - 1


_OPP = np.array([1, 0, 3, 2, 5, 4], dtype=np.int64)


@njit(cache=True, parallel=True, fastmath={"contract", "reassoc", "nsz"})
def gradient_kernel(w, Jai, J, sh, normal, neighbor, D, wb, Q):
    """BR1-lifted physical gradient of w, Q[e,i,j,k,d,c] (overwritten)."""
    E, n = w.shape[0], w.shape[1]
    for e in prange(E):
        for i in range(n):
            for j in range(n):
                for k in range(n):
                    for d in range(3):
                        for c in range(9):
                            Q[e, i, j, k, d, c] = 0.0
                    for c in range(9):
                        s0 = 0.0
                        s1 = 0.0
                        s2 = 0.0
                        for m in range(n):
                            s0 += D[i, m] * w[e, m, j, k, c]
                            s1 += D[j, m] * w[e, i, m, k, c]
                            s2 += D[k, m] * w[e, i, j, m, c]
                        for d in range(3):
                            Q[e, i, j, k, d, c] = (Jai[e, i, j, k, 0, d] * s0
                                                   + Jai[e, i, j, k, 1, d] * s1
                                                   + Jai[e, i, j, k, 2, d] * s2)
        # boundary lift: (sh / (2 wb)) * n_d * (w_remote - w_local)
        for f in range(6):
            nbr = neighbor[e, f]
            fo = _OPP[f]
            for a in range(n):
                for b in range(n):
                    i, j, k = _face_index(f, a, b, n)
                    ri, rj, rk = _face_index(fo, a, b, n)
                    scale = sh[e, f, a, b] / (2.0 * wb)
                    for d in range(3):
                        nd = normal[e, f, a, b, d] * scale
                        for c in range(9):
                            Q[e, i, j, k, d, c] += nd * (
                                w[nbr, ri, rj, rk, c] - w[e, i, j, k, c])
        for i in range(n):
            for j in range(n):
                for k in range(n):
                    iv = 1.0 / J[e, i, j, k]
                    for d in range(3):
                        for c in range(9):
                            Q[e, i, j, k, d, c] *= iv


@njit(cache=True, parallel=True, fastmath={"contract", "reassoc", "nsz"})
def viscous_divergence_kernel(fv, Jai, D, out, buf_ft):
    """Accumulate -D-divergence of the metric-contracted viscous fluxes.

    out gets MINUS the divergence so the caller can treat it like the other
    left-hand-side operators and negate once.  buf_ft is per-thread
    workspace of shape (n_threads, 3, n, n, n, 9).
    """
    E, n = fv.shape[0], fv.shape[1]
    for e in prange(E):
        ft = buf_ft[get_thread_id()]
        for i in range(n):
            for j in range(n):
                for k in range(n):
                    for l in range(3):
                        a0 = Jai[e, i, j, k, l, 0]
                        a1 = Jai[e, i, j, k, l, 1]
                        a2 = Jai[e, i, j, k, l, 2]
                        for c in range(9):
                            ft[l, i, j, k, c] = (a0 * fv[e, i, j, k, 0, c]
                                                 + a1 * fv[e, i, j, k, 1, c]
                                                 + a2 * fv[e, i, j, k, 2, c])
        for i in range(n):
            for j in range(n):
                for k in range(n):
                    for c in range(9):
                        s = 0.0
                        for m in range(n):
                            s += (D[i, m] * ft[0, m, j, k, c]
                                  + D[j, m] * ft[1, i, m, k, c]
                                  + D[k, m] * ft[2, i, j, m, c])
                        out[e, i, j, k, c] -= s


@njit(cache=True)
def _adv_normal(p, n0, n1, n2, ch, g, out):
    """Pointwise advective flux contracted with a (scaled) normal vector."""
    vn = p[VX] * n0 + p[VY] * n1 + p[VZ] * n2
    Bn = p[BX] * n0 + p[BY] * n1 + p[BZ] * n2
    ptot = p[PRS] + 0.5 * p[B2]
    rvn = p[RHO] * vn
    out[0] = rvn
    out[1] = rvn * p[VX] + ptot * n0 - Bn * p[BX]
    out[2] = rvn * p[VY] + ptot * n1 - Bn * p[BY]
    out[3] = rvn * p[VZ] + ptot * n2 - Bn * p[BZ]
    out[4] = (vn * (0.5 * p[RHO] * p[V2] + g * p[PRS] / (g - 1.0) + p[B2])
              - Bn * p[VB] + ch * p[PSI] * Bn)
    out[5] = vn * p[BX] - Bn * p[VX] + ch * p[PSI] * n0
    out[6] = vn * p[BY] - Bn * p[VY] + ch * p[PSI] * n1
    out[7] = vn * p[BZ] - Bn * p[VZ] + ch * p[PSI] * n2
    out[8] = ch * Bn


@njit(cache=True)
def _lambda_max(p, n0, n1, n2, ch, g):
    """|v.n| + fast magnetosonic speed in direction n, floored by ch."""
    cs2 = g * p[PRS] / p[RHO]
    ca2 = p[B2] / p[RHO]
    Bn = p[BX] * n0 + p[BY] * n1 + p[BZ] * n2
    can2 = Bn * Bn / p[RHO]
    tot = cs2 + ca2
    disc = tot * tot - 4.0 * cs2 * can2
    if disc < 0.0:
        disc = 0.0
    cf = np.sqrt(0.5 * (tot + np.sqrt(disc)))
    lam = abs(p[VX] * n0 + p[VY] * n1 + p[VZ] * n2) + cf
    return lam if lam > ch else ch


@njit(cache=True, parallel=True, fastmath={"contract", "reassoc", "nsz"})
def surface_kernel(u, prim, fv, has_visc, sh, normal, neighbor, es_mode,
                   glm_on, ch, gamma, wb, res, buf_br, buf_fa):
    """Accumulate all surface brackets into res (left-hand-side sign).

    Each element handles its own six faces; the symmetric two-point flux
    makes the shared interface value identical from both sides.  buf_br and
    buf_fa are caller-allocated (E, 9) workspaces.
    """
    E, n = u.shape[0], u.shape[1]
    for e in prange(E):
        br = buf_br[e]
        fa = buf_fa[e]
        for f in range(6):
            nbr = neighbor[e, f]
            fo = _OPP[f]
            for a in range(n):
                for b in range(n):
                    i, j, k = _face_index(f, a, b, n)
                    ri, rj, rk = _face_index(fo, a, b, n)
                    pM = prim[e, i, j, k]
                    pP = prim[nbr, ri, rj, rk]
                    n0 = normal[e, f, a, b, 0]
                    n1 = normal[e, f, a, b, 1]
                    n2 = normal[e, f, a, b, 2]
                    ec_contract(pM, pP, n0, n1, n2, ch, gamma, br)
                    if es_mode:
                        lam = _lambda_max(pM, n0, n1, n2, ch, gamma)
                        lamP = _lambda_max(pP, n0, n1, n2, ch, gamma)
                        if lamP > lam:
                            lam = lamP
                        for c in range(9):
                            br[c] -= 0.5 * lam * (u[nbr, ri, rj, rk, c]
                                                  - u[e, i, j, k, c])
                    _adv_normal(pM, n0, n1, n2, ch, gamma, fa)
                    for c in range(9):
                        br[c] -= fa[c]
                    # Powell coupling residual: 0.5 phi(uM) jump(B).n
                    h = 0.5 * ((pP[BX] - pM[BX]) * n0 + (pP[BY] - pM[BY]) * n1
                               + (pP[BZ] - pM[BZ]) * n2)
                    br[1] += h * pM[BX]
                    br[2] += h * pM[BY]
                    br[3] += h * pM[BZ]
                    br[4] += h * pM[VB]
                    br[5] += h * pM[VX]
                    br[6] += h * pM[VY]
                    br[7] += h * pM[VZ]
                    if glm_on:
                        vn = pM[VX] * n0 + pM[VY] * n1 + pM[VZ] * n2
                        jpsi = 0.5 * (pP[PSI] - pM[PSI])
                        br[4] += vn * pM[PSI] * jpsi
                        br[8] += vn * jpsi
                    if has_visc:
                        for c in range(9):
                            br[c] -= 0.5 * (
                                (fv[nbr, ri, rj, rk, 0, c]
                                 - fv[e, i, j, k, 0, c]) * n0
                                + (fv[nbr, ri, rj, rk, 1, c]
                                   - fv[e, i, j, k, 1, c]) * n1
                                + (fv[nbr, ri, rj, rk, 2, c]
                                   - fv[e, i, j, k, 2, c]) * n2)
                    scale = sh[e, f, a, b] / wb
                    for c in range(9):
                        res[e, i, j, k, c] += scale * br[c]


@njit(cache=True, parallel=True)
def finalize_kernel(res, J, alpha, u, src, has_src):
    """res <- -res/J + src - alpha*psi*e9, in place."""
    E, n = res.shape[0], res.shape[1]
    for e in prange(E):
        for i in range(n):
            for j in range(n):
                for k in range(n):
                    iv = 1.0 / J[e, i, j, k]
                    for c in range(9):
                        val = -res[e, i, j, k, c] * iv
                        if has_src:
                            val += src[e, i, j, k, c]
                        res[e, i, j, k, c] = val
                    if alpha != 0.0:
                        res[e, i, j, k, 8] -= alpha * u[e, i, j, k, 8]


@njit(cache=True, parallel=True, fastmath={"contract", "reassoc", "nsz"})
def gradient_viscflux_kernel(w, prim, Jai, J, sh, normal, neighbor, D, wb,
                             mu, eta, kR, fv, buf_q):
    """Fused BR1 gradient lift and nodal viscous flux (hot path).

    Equivalent to gradient_kernel followed by viscous_flux_kernel, without
    materializing the gradient field; buf_q is per-thread workspace of
    shape (n_threads, n, n, n, 3, 9).
    """
    E, n = w.shape[0], w.shape[1]
    for e in prange(E):
        Q = buf_q[get_thread_id()]
        for i in range(n):
            for j in range(n):
                for k in range(n):
                    for c in range(9):
                        s0 = 0.0
                        s1 = 0.0
                        s2 = 0.0
                        for m in range(n):
                            s0 += D[i, m] * w[e, m, j, k, c]
                            s1 += D[j, m] * w[e, i, m, k, c]
                            s2 += D[k, m] * w[e, i, j, m, c]
                        for d in range(3):
                            Q[i, j, k, d, c] = (Jai[e, i, j, k, 0, d] * s0
                                                + Jai[e, i, j, k, 1, d] * s1
                                                + Jai[e, i, j, k, 2, d] * s2)
        for f in range(6):
            nbr = neighbor[e, f]
            fo = _OPP[f]
            for a in range(n):
                for b in range(n):
                    i, j, k = _face_index(f, a, b, n)
                    ri, rj, rk = _face_index(fo, a, b, n)
                    scale = sh[e, f, a, b] / (2.0 * wb)
                    for d in range(3):
                        nd = normal[e, f, a, b, d] * scale
                        for c in range(9):
                            Q[i, j, k, d, c] += nd * (
                                w[nbr, ri, rj, rk, c] - w[e, i, j, k, c])
        gv = np.empty((3, 3))
        gB = np.empty((3, 3))
        for i in range(n):
            for j in range(n):
                for k in range(n):
                    iv = 1.0 / J[e, i, j, k]
                    p = prim[e, i, j, k]
                    g = Q[i, j, k]
                    w5 = -2.0 * p[BETA]
                    iw5 = 1.0 / w5
                    out = fv[e, i, j, k]
                    for d in range(3):
                        g5 = g[d, 4] * iv
                        for l in range(3):
                            wl = 2.0 * p[BETA] * p[VX + l]
                            gv[d, l] = (-g[d, 1 + l] * iv + wl * g5 * iw5) * iw5
                            wm = 2.0 * p[BETA] * p[BX + l]
                            gB[d, l] = (-g[d, 5 + l] * iv + wm * g5 * iw5) * iw5
                    divv = gv[0, 0] + gv[1, 1] + gv[2, 2]
                    c0 = gB[1, 2] - gB[2, 1]
                    c1 = gB[2, 0] - gB[0, 2]
                    c2 = gB[0, 1] - gB[1, 0]
                    x0 = c1 * p[BZ] - c2 * p[BY]
                    x1 = c2 * p[BX] - c0 * p[BZ]
                    x2 = c0 * p[BY] - c1 * p[BX]
                    for d in range(3):
                        t0 = mu * (gv[d, 0] + gv[0, d])
                        t1 = mu * (gv[d, 1] + gv[1, d])
                        t2 = mu * (gv[d, 2] + gv[2, d])
                        if d == 0:
                            t0 -= (2.0 / 3.0) * mu * divv
                            cxB = x0
                        elif d == 1:
                            t1 -= (2.0 / 3.0) * mu * divv
                            cxB = x1
                        else:
                            t2 -= (2.0 / 3.0) * mu * divv
                            cxB = x2
                        out[d, 0] = 0.0
                        out[d, 1] = t0
                        out[d, 2] = t1
                        out[d, 3] = t2
                        gT = g[d, 4] * iv * iw5 * iw5
                        out[d, 4] = (t0 * p[VX] + t1 * p[VY] + t2 * p[VZ]
                                     + kR * gT - eta * cxB)
                        for l in range(3):
                            out[d, 5 + l] = eta * (gB[d, l] - gB[l, d])
                        out[d, 8] = 0.0
