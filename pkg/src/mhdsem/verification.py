"""Acceptance-grade verification checks, shared by the CLI and the tests.

Each check returns a CheckResult with a pass flag and a short measurement
summary; tolerances are fixed here.  The slow checks (convergence, temporal
order, divergence cleaning, robustness) run actual time integrations.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from mhdsem.cases import (CaseSpec, blast_wave_state, build_case,
                          case_defaults, eoc, l2_error)
from mhdsem.dgcore import (RhsConfig, compute_rhs, divergence_error,
                           entropy_rate, total_entropy)
from mhdsem.mesh import MeshConfig, build_mesh, mesh_bounds, \
    metric_identity_residual
from mhdsem.numflux import ec_flux
from mhdsem.operators import Operator1D, lgl_nodes_weights
from mhdsem.physics import (PhysParams, advective_flux, cons_to_prim,
                            entropy_flux_potentials, entropy_variables,
                            k_matrices, powell_contraction, prim_to_cons,
                            viscous_flux_direct)
from mhdsem.timeint import TimeConfig, advance, compute_dt, update_ch

__all__ = ["CheckResult", "QUICK_CHECKS", "SLOW_CHECKS", "run_checks"]


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"[{tag}] {self.name}: {self.detail} ({self.seconds:.1f}s)"


def _random_states(rng, m, params, rho_span=(-2, 2), p_span=(-2, 2)):
    rho = 10.0 ** rng.uniform(*rho_span, m)
    p = 10.0 ** rng.uniform(*p_span, m)
    v = rng.normal(0.0, 2.0, (m, 3))
    B = rng.normal(0.0, 2.0, (m, 3))
    psi = rng.normal(0.0, 1.0, m)
    return prim_to_cons(rho, v, p, B, psi, params)


# ------------------------------------------------------------------
# criterion 1: operators
# ------------------------------------------------------------------

def check_operators(seed: int = 0) -> CheckResult:
    t0 = time.perf_counter()
    worst_sbp = 0.0
    worst_quad = 0.0
    for N in range(1, 9):
        op = Operator1D.build(N)
        worst_sbp = max(worst_sbp, float(np.abs(op.Q + op.Q.T - op.B).max()))
        nodes, weights = lgl_nodes_weights(N)
        for k in range(2 * N):
            exact = 2.0 / (k + 1) if k % 2 == 0 else 0.0
            worst_quad = max(worst_quad, abs(np.dot(weights, nodes**k) - exact))
    ok = worst_sbp <= 1e-13 and worst_quad <= 1e-13
    return CheckResult("operators (SBP + quadrature, N=1..8)", ok,
                       f"SBP residual {worst_sbp:.2e} (<=1e-13), "
                       f"quadrature error {worst_quad:.2e} (<=1e-13)",
                       time.perf_counter() - t0)


# ------------------------------------------------------------------
# criterion 2: metric identities and free stream
# ------------------------------------------------------------------

def check_metrics_free_stream(seed: int = 0) -> CheckResult:
    t0 = time.perf_counter()
    worst_metric = 0.0
    worst_fs = 0.0
    for mesh_type in ("a", "b"):
        for N in (3, 4):
            cfg = MeshConfig((4, 4, 4), bounds=mesh_bounds(mesh_type),
                             transform="sine_warp", degree=N)
            mesh = build_mesh(cfg)
            worst_metric = max(worst_metric,
                               metric_identity_residual(mesh.Jai, mesh.op))
            params = PhysParams(gamma=5 / 3, mu=1e-3, eta=2e-3, ch=1.2)
            shape = mesh.J.shape
            u = prim_to_cons(np.full(shape, 1.4),
                             np.broadcast_to([0.3, -0.2, 0.5],
                                             shape + (3,)).copy(),
                             np.full(shape, 0.9),
                             np.broadcast_to([0.6, 0.8, -0.4],
                                             shape + (3,)).copy(),
                             np.full(shape, 0.25), params)
            rcfg = RhsConfig(params=params, mode="es", include_viscous=True,
                             include_glm=True)
            ut = compute_rhs(u, mesh, rcfg)
            worst_fs = max(worst_fs,
                           float(np.abs(ut).max() / np.abs(u).max()))
    ok = worst_metric <= 1e-12 and worst_fs <= 1e-11
    return CheckResult("metric identities + free stream (types a/b, N=3,4)",
                       ok, f"identity residual {worst_metric:.2e} (<=1e-12), "
                       f"free-stream residual {worst_fs:.2e} (<=1e-11)",
                       time.perf_counter() - t0)


# ------------------------------------------------------------------
# criterion 3: EC flux properties
# ------------------------------------------------------------------

def check_ec_flux(seed: int = 0) -> CheckResult:
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed + 31)
    params = PhysParams(gamma=5 / 3, ch=0.83)
    m = 10_000
    uL = _random_states(rng, m, params)
    uR = _random_states(rng, m, params)
    wL = entropy_variables(uL, params)
    wR = entropy_variables(uR, params)
    dw = wR - wL
    PL = np.sum(np.stack(entropy_flux_potentials(uL, params)), axis=0)
    PR = np.sum(np.stack(entropy_flux_potentials(uR, params)), axis=0)
    thL = powell_contraction(uL, params)
    thR = powell_contraction(uR, params)
    Bbar = 0.5 * (uL[:, 5:8] + uR[:, 5:8])
    F = ec_flux(uL, uR, params)
    lhs = np.einsum("nc,ndc->nd", dw, F)
    rhs = (PR - PL) - Bbar * (thR - thL)[:, None]
    scale = (np.einsum("nc,ndc->nd", np.abs(dw), np.abs(F))
             + np.abs(PR) + np.abs(PL) + 1.0)
    worst_cond = float(np.max(np.abs(lhs - rhs) / scale))
    # consistency and symmetry
    Fc = ec_flux(uL[:2000], uL[:2000], params)
    fa = advective_flux(uL[:2000], params)
    sc = np.abs(fa).max(axis=(1, 2), keepdims=True) + 1.0
    worst_cons = float(np.max(np.abs(Fc - fa) / sc))
    Fs = ec_flux(uR[:2000], uL[:2000], params)
    worst_sym = float(np.max(np.abs(F[:2000] - Fs)
                             / (np.abs(F[:2000]).max() + 1.0)))
    ok = worst_cond <= 1e-12 and worst_cons <= 1e-13 and worst_sym <= 1e-13
    return CheckResult("EC flux (condition/consistency/symmetry, 1e4 pairs)",
                       ok, f"condition {worst_cond:.2e} (<=1e-12), "
                       f"consistency {worst_cons:.2e}, symmetry "
                       f"{worst_sym:.2e} (<=1e-13)",
                       time.perf_counter() - t0)


# ------------------------------------------------------------------
# criterion 4: dissipation matrices
# ------------------------------------------------------------------

def check_k_matrices(seed: int = 0) -> CheckResult:
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed + 47)
    params = PhysParams(gamma=5 / 3, mu=0.37, eta=0.21, prandtl=0.72)
    u = _random_states(rng, 10_000, params)
    w = entropy_variables(u, params)
    K = k_matrices(w[:400], params)
    sym = float(np.abs(K - np.swapaxes(K, -1, -2)).max())
    # resistive spectrum
    pr = PhysParams(gamma=5 / 3, mu=0.0, eta=0.47, prandtl=0.72)
    ur = _random_states(rng, 30, pr)
    wr = entropy_variables(ur, pr)
    Kr = k_matrices(wr, pr)
    rho, v, p, B, psi = cons_to_prim(ur, pr)
    worst_eig = 0.0
    for k in range(30):
        ev = np.sort(np.linalg.eigvalsh(0.5 * (Kr[k] + Kr[k].T)))
        lam1 = 2 * pr.eta * p[k] / rho[k]
        lam2 = pr.eta * p[k] * (B[k] @ B[k] + 2.0) / rho[k]
        want = np.concatenate([np.zeros(24), np.sort([lam1, lam2, lam2])])
        worst_eig = max(worst_eig,
                        float(np.max(np.abs(ev - want) / max(lam2, 1.0))))
    # PSD sampling (1e4)
    Kall = k_matrices(w, params)
    q = rng.normal(0, 1, (10_000, 27))
    quad = np.einsum("ni,nij,nj->n", q, Kall, q)
    psd_ok = bool(np.all(quad >= -1e-12 * np.sum(q * q, axis=1)))
    # K grad(w) vs direct viscous flux (1e3)
    gp = rng.normal(0, 1.5, (1000, 3, 9))
    u3 = u[:1000]
    rho, v, p, B, psi = cons_to_prim(u3, params)
    beta = rho / (2 * p)
    grho, gpr = gp[..., :, 0], gp[..., :, 4]
    gv, gB, gpsi = gp[..., :, 1:4], gp[..., :, 5:8], gp[..., :, 8]
    gbeta = grho / (2 * p[..., None]) - (rho / (2 * p**2))[..., None] * gpr
    gs = gpr / p[..., None] - params.gamma * grho / rho[..., None]
    gw = np.zeros_like(gp)
    gw[..., :, 0] = (-gs / (params.gamma - 1)
                     - gbeta * np.sum(v * v, -1)[..., None]
                     - 2 * beta[..., None]
                     * np.einsum("ndl,nl->nd", gv, v))
    gw[..., :, 1:4] = 2 * (gbeta[..., None] * v[..., None, :]
                           + beta[..., None, None] * gv)
    gw[..., :, 4] = -2 * gbeta
    gw[..., :, 5:8] = 2 * (gbeta[..., None] * B[..., None, :]
                           + beta[..., None, None] * gB)
    gw[..., :, 8] = 2 * (gbeta * psi[..., None] + beta[..., None] * gpsi)
    fd = viscous_flux_direct(u3, gp, params)
    w3 = entropy_variables(u3, params)
    fk = np.einsum("nij,nj->ni", k_matrices(w3, params),
                   gw.reshape(1000, 27)).reshape(1000, 3, 9)
    sc = np.abs(fd).max(axis=(1, 2), keepdims=True) + 1.0
    worst_equiv = float(np.max(np.abs(fk - fd) / sc))
    ok = (sym <= 1e-14 * max(1.0, float(np.abs(K).max())) and psd_ok
          and worst_eig <= 1e-9 and worst_equiv <= 1e-10)
    return CheckResult("dissipation matrices (symmetry/spectrum/PSD/equivalence)",
                       ok, f"symmetry {sym:.2e}, eigenvalues {worst_eig:.2e}"
                       f" (<=1e-9), PSD {'ok' if psd_ok else 'violated'}, "
                       f"K grad(w) vs direct {worst_equiv:.2e} (<=1e-10)",
                       time.perf_counter() - t0)


# ------------------------------------------------------------------
# criterion 5: per-element volume entropy identities
# ------------------------------------------------------------------

def _block_volume_contractions(u3, mesh, params):
    """Entropy contraction of the MHD/GLM flux + non-conservative volumes."""
    from mhdsem.dgcore import (volume_advective, volume_noncons_glm,
                               volume_noncons_mhd)

    wq = mesh.op.weights
    w3 = wq[:, None, None] * wq[None, :, None] * wq[None, None, :]
    w = entropy_variables(u3, params)
    u4 = u3[None]
    vol_mhd = volume_advective(u4, mesh, params, block="mhd")[0]
    vol_glm = volume_advective(u4, mesh, params, block="glm")[0]
    nc_mhd = volume_noncons_mhd(u4, mesh, params)[0]
    nc_glm = volume_noncons_glm(u4, mesh, params)[0]
    c_mhd = np.sum(w3 * np.einsum("...c,...c->...", w, vol_mhd + nc_mhd))
    c_glm = np.sum(w3 * np.einsum("...c,...c->...", w, vol_glm + nc_glm))
    scale = np.sum(w3 * np.einsum("...c,...c->...", np.abs(w),
                                  np.abs(vol_mhd))) + 1.0
    return abs(c_mhd) / scale, abs(c_glm) / scale


def check_volume_identities(seed: int = 0) -> CheckResult:
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed + 59)
    params = PhysParams(gamma=5 / 3, ch=0.75)
    worst = 0.0
    fields_per_degree = 34  # 3 degrees x 34 > 100 random fields total
    for N in (2, 3, 4):
        cfg = MeshConfig((1, 1, 1), bounds=mesh_bounds("a"),
                         transform="sine_warp", degree=N)
        mesh = build_mesh(cfg)
        shape = mesh.J.shape
        for _ in range(fields_per_degree):
            u = prim_to_cons(10.0 ** rng.uniform(-0.3, 0.3, shape),
                             rng.normal(0, 0.5, shape + (3,)),
                             10.0 ** rng.uniform(-0.3, 0.3, shape),
                             rng.normal(0, 0.5, shape + (3,)),
                             rng.normal(0, 0.5, shape), params)[0]
            r_mhd, r_glm = _block_volume_contractions(u, mesh, params)
            worst = max(worst, r_mhd, r_glm)
    ok = worst <= 1e-11
    return CheckResult("per-element entropy identities (102 fields, N=2..4)",
                       ok, f"worst contraction residual {worst:.2e} (<=1e-11"
                       " of term scale)", time.perf_counter() - t0)


# ------------------------------------------------------------------
# criterion 6: semi-discrete entropy conservation / stability
# ------------------------------------------------------------------

def check_semidiscrete_entropy(seed: int = 0) -> CheckResult:
    t0 = time.perf_counter()
    cfg = MeshConfig((3, 3, 3), bounds=mesh_bounds("b"),
                     transform="sine_warp", degree=3)
    mesh = build_mesh(cfg)
    u = blast_wave_state(mesh.x)
    params = PhysParams(gamma=5 / 3, alpha=0.0)
    params.ch = update_ch(u, params)
    Sbar = abs(total_entropy(u, mesh, params))
    rc = RhsConfig(params=params, mode="ec", include_viscous=False)
    rate_ec = entropy_rate(u, mesh, rc)
    rc_es = RhsConfig(params=params, mode="es", include_viscous=False)
    rate_es = entropy_rate(u, mesh, rc_es)
    pv = PhysParams(gamma=5 / 3, mu=2e-3, eta=1e-3, alpha=0.0, ch=params.ch)
    rc_v = RhsConfig(params=pv, mode="es", include_viscous=True)
    rate_v = entropy_rate(u, mesh, rc_v)
    ok = (abs(rate_ec) <= 1e-10 * Sbar and rate_es <= 1e-10 * Sbar
          and rate_v <= 1e-10 * Sbar)
    return CheckResult("semi-discrete entropy (EC conserves, ES/viscous decay)",
                       ok, f"|EC rate|/|S| = {abs(rate_ec) / Sbar:.2e} "
                       f"(<=1e-10), ES rate = {rate_es:.3e}, "
                       f"ES+viscous rate = {rate_v:.3e} (<= +1e-10 |S|)",
                       time.perf_counter() - t0)


# ------------------------------------------------------------------
# criterion 7: manufactured-solution convergence
# ------------------------------------------------------------------

def _manufactured_errors(levels, N=3):
    out = []
    for lev in levels:
        d = case_defaults("manufactured")
        d["elements"] = (lev, lev, lev)
        spec = CaseSpec(case="manufactured", N=N, **d)
        mesh, u0, cfg, exact = build_case(spec)
        tcfg = TimeConfig(t_end=1.0, cfl=0.5)
        u, t, nsteps = advance(u0, mesh, cfg, tcfg)
        out.append(l2_error(u, exact, t, mesh, cfg.params.gamma))
    return out


def check_convergence_subset(seed: int = 0) -> CheckResult:
    """Fast gate, levels {4^3, 8^3}: mean EOC over the reported variables
    >= 3.5 (the paper's own table has per-variable dips on this pair)."""
    t0 = time.perf_counter()
    errs = _manufactured_errors((4, 8))
    orders = {k: eoc([errs[0][k], errs[1][k]])[0] for k in errs[0]}
    mean_eoc = float(np.mean(list(orders.values())))
    anchor = errs[1]["rho"]
    ok = mean_eoc >= 3.5
    det = ", ".join(f"{k}:{v:.2f}" for k, v in orders.items())
    return CheckResult("convergence subset 4^3->8^3 (N=3, T=1)",
                       ok, f"mean EOC {mean_eoc:.2f} (>=3.5); {det}; "
                       f"L2(rho)@8^3 = {anchor:.3e} for reference",
                       time.perf_counter() - t0)


def check_convergence_full(seed: int = 0) -> CheckResult:
    """Levels {4^3, 8^3, 16^3}: average EOC per variable >= 3.8 and the
    L2(rho) anchor at 8^3 within a factor 3 of the reference 6.11e-3."""
    t0 = time.perf_counter()
    errs = _manufactured_errors((4, 8, 16))
    orders = {k: float(np.mean(eoc([e[k] for e in errs]))) for k in errs[0]}
    anchor = errs[1]["rho"]
    anchor_ok = 6.11e-3 / 3 <= anchor <= 6.11e-3 * 3
    ok = all(v >= 3.8 for v in orders.values()) and anchor_ok
    det = ", ".join(f"{k}:{v:.2f}" for k, v in orders.items())
    return CheckResult("convergence full 4^3->16^3 (N=3, T=1)", ok,
                       f"per-variable avg EOC (>=3.8): {det}; L2(rho)@8^3 = "
                       f"{anchor:.3e} (factor {anchor / 6.11e-3:.2f} of "
                       "6.11e-3, bar 3)", time.perf_counter() - t0)


# ------------------------------------------------------------------
# criterion 8: temporal entropy order
# ------------------------------------------------------------------

def check_temporal_order(seed: int = 0) -> CheckResult:
    t0 = time.perf_counter()
    d = case_defaults("blast_wave")
    d["elements"] = (3, 3, 3)
    spec = CaseSpec(case="blast_wave", N=3, **d)
    mesh, u0, cfg, exact = build_case(spec)
    cfg.mode = "ec"
    T = 0.2
    params = cfg.params
    params.ch = update_ch(u0, params)
    dt0 = 0.8 * compute_dt(u0, mesh, params, 0.5)
    n0 = int(np.ceil(T / dt0))
    S0 = total_entropy(u0, mesh, params)
    dts, dS = [], []
    for halving in range(5):
        nsteps = n0 * 2**halving
        tc = TimeConfig(t_end=T, fixed_dt=T / nsteps, cfl=0.5)
        u, t, _ = advance(u0.copy(), mesh, cfg, tc)
        dts.append(T / nsteps)
        dS.append(abs(total_entropy(u, mesh, cfg.params) - S0))
    # points within a decade of the smallest |dS| sit on the roundoff
    # plateau of the trajectory; the asymptotic order is read off the
    # finest clean pair (coarse pairs overshoot 4 before the asymptote)
    floor = min(dS)
    keep = [i for i in range(5) if dS[i] > 10.0 * floor] or [0, 1]
    orders = [float(np.log2(dS[i] / dS[i + 1]))
              for i in keep[:-1] if i + 1 in keep]
    slope = orders[-1] if orders else float("nan")
    ok = abs(slope - 4.0) <= 0.4 and len(keep) >= 3
    return CheckResult("temporal entropy order (EC blast, dt sweep)", ok,
                       f"asymptotic slope {slope:.2f} (4.0 +- 0.4); pair "
                       f"orders {['%.2f' % o for o in orders]}; |dS| = "
                       + ",".join(f"{v:.1e}" for v in dS),
                       time.perf_counter() - t0)


# ------------------------------------------------------------------
# criterion 9: divergence cleaning
# ------------------------------------------------------------------

def _pulse_divb_history(alpha, ch_policy, t_end=2.0, cadence=25):
    d = case_defaults("gaussian_pulse")
    d["elements"] = (8, 8, 8)
    spec = CaseSpec(case="gaussian_pulse", N=3, **d)
    mesh, u0, cfg, exact = build_case(spec)
    tcfg = TimeConfig(t_end=t_end, cfl=0.5, ch_policy=ch_policy, alpha=alpha)
    hist = [divergence_error(u0, mesh)]

    def record(step, t, dt, u):
        if step % cadence == 0:
            hist.append(divergence_error(u, mesh))

    u, t, _ = advance(u0, mesh, cfg, tcfg, on_step=record)
    hist.append(divergence_error(u, mesh))
    return np.array(hist) / hist[0]


def check_divergence_cleaning(seed: int = 0) -> CheckResult:
    t0 = time.perf_counter()
    cleaned = _pulse_divb_history(alpha=1.0, ch_policy="proportional")
    frozen = _pulse_divb_history(alpha=0.0, ch_policy="zero")
    ok_clean = cleaned[-1] <= 0.5 * cleaned.max()
    ok_frozen = frozen[-1] >= 0.9 * frozen.max()
    ok = bool(ok_clean and ok_frozen)
    return CheckResult("divergence cleaning (pulse, T=2)", ok,
                       f"cleaned final/max = {cleaned[-1] / cleaned.max():.2f}"
                       f" (<=0.5); no-cleaning final/max = "
                       f"{frozen[-1] / frozen.max():.2f} (>=0.9)",
                       time.perf_counter() - t0)


# ------------------------------------------------------------------
# criterion 10: robustness (Orszag-Tang)
# ------------------------------------------------------------------

def check_robustness(seed: int = 0) -> CheckResult:
    t0 = time.perf_counter()
    d = case_defaults("orszag_tang")
    d["elements"] = (8, 8, 8)
    spec = CaseSpec(case="orszag_tang", N=3, **d)
    mesh, u0, cfg, exact = build_case(spec)
    tcfg = TimeConfig(t_end=0.5, cfl=0.5)
    rates = []

    def record(step, t, dt, u):
        if step % 50 == 0:
            rates.append(entropy_rate(u, mesh, cfg, t))

    try:
        u, t, nsteps = advance(u0, mesh, cfg, tcfg, on_step=record)
    except Exception as exc:  # PositivityError means the run crashed
        return CheckResult("robustness (viscous Orszag-Tang to T=0.5)", False,
                           f"crashed: {exc}", time.perf_counter() - t0)
    rates.append(entropy_rate(u, mesh, cfg, t))
    Sbar = abs(total_entropy(u, mesh, cfg.params))
    worst = max(rates)
    ok = worst <= 1e-10 * Sbar
    return CheckResult("robustness (viscous Orszag-Tang to T=0.5)", ok,
                       f"completed {nsteps} steps; max recorded entropy rate "
                       f"{worst:.3e} (<= +1e-10 |S| = {1e-10 * Sbar:.1e})",
                       time.perf_counter() - t0)


QUICK_CHECKS = (check_operators, check_metrics_free_stream, check_ec_flux,
                check_k_matrices, check_volume_identities,
                check_semidiscrete_entropy)
SLOW_CHECKS = (check_convergence_subset, check_convergence_full,
               check_temporal_order, check_divergence_cleaning,
               check_robustness)


def run_checks(full: bool = False, seed: int = 0, report=print):
    """Run the verification suite; returns True when everything passed."""
    checks = QUICK_CHECKS + (SLOW_CHECKS if full else ())
    all_ok = True
    for fn in checks:
        result = fn(seed)
        all_ok &= result.passed
        report(result.line())
    return all_ok
