"""GLM-MHD physics tests.

Oracles: central finite differences for the entropy gradient/Hessian, an
independently coded monolithic advective flux, a symmetric eigensolver for
the resistive dissipation spectrum, and the direct viscous-flux formula as
the cross-check for the entropy-gradient route.
"""

from __future__ import annotations

import numpy as np
import pytest

from conftest import moderate_states, random_states
from mhdsem.physics import (PhysParams, PositivityError, advective_flux,
                            advective_flux_split, cons_to_prim,
                            entropy_flux_potentials, entropy_function,
                            entropy_variables, glm_phi, glm_source,
                            k_matrices, powell_contraction, powell_phi,
                            prim_to_cons, viscous_flux_direct,
                            viscous_flux_entropy, wave_speeds)

GAMMA53 = PhysParams(gamma=5 / 3)


# ------------------------------------------------------------------
# conversions
# ------------------------------------------------------------------

def test_prim_to_cons_rest_state():
    u = prim_to_cons(1.0, np.zeros(3), 1.0, np.zeros(3), 0.0, GAMMA53)
    assert u[4] == pytest.approx(1.5)


def test_prim_to_cons_blast_inner_state():
    u = prim_to_cons(1.2, np.array([0.1, 0.0, 0.1]), 0.9,
                     np.array([1.0, 1.0, 1.0]), 0.0, GAMMA53)
    assert u[4] == pytest.approx(0.9 / (2 / 3) + 0.5 * 1.2 * 0.02 + 1.5, abs=1e-14)
    assert u[4] == pytest.approx(2.862, abs=1e-12)


def test_round_trip(rng):
    u = random_states(rng, 200, GAMMA53)
    rho, v, p, B, psi = cons_to_prim(u, GAMMA53)
    u2 = prim_to_cons(rho, v, p, B, psi, GAMMA53)
    np.testing.assert_allclose(u2, u, rtol=1e-14, atol=1e-14)


def test_positivity_rejection():
    with pytest.raises(PositivityError):
        prim_to_cons(-1.0, np.zeros(3), 1.0, np.zeros(3), 0.0, GAMMA53)
    u = prim_to_cons(1.0, np.zeros(3), 1.0, np.zeros(3), 0.0, GAMMA53)
    u[4] = 0.1  # drop energy below magnetic+kinetic content
    u[5] = 2.0
    with pytest.raises(PositivityError) as err:
        cons_to_prim(u, GAMMA53)
    assert err.value.where is not None


# ------------------------------------------------------------------
# entropy machinery
# ------------------------------------------------------------------

def test_entropy_function_values():
    p2 = PhysParams(gamma=2.0)
    u = prim_to_cons(1.0, np.zeros(3), 1.0, np.zeros(3), 0.0, p2)
    assert entropy_function(u, p2) == pytest.approx(0.0, abs=1e-15)
    u = prim_to_cons(2.0, np.zeros(3), 1.0, np.zeros(3), 0.0, p2)
    assert entropy_function(u, p2) == pytest.approx(2 * np.log(4.0), abs=1e-13)


def test_entropy_variables_closed_form():
    p2 = PhysParams(gamma=2.0)
    u = prim_to_cons(1.0, np.zeros(3), 1.0, np.zeros(3), 0.0, p2)
    w = entropy_variables(u, p2)
    np.testing.assert_allclose(w, [2, 0, 0, 0, -1, 0, 0, 0, 0], atol=1e-14)


def test_entropy_variables_match_fd_gradient(rng):
    u = moderate_states(rng, 40, GAMMA53)
    w = entropy_variables(u, GAMMA53)
    for k in range(40):
        grad = np.empty(9)
        for c in range(9):
            h = 1e-6 * max(1.0, abs(u[k, c]))
            up, um = u[k].copy(), u[k].copy()
            up[c] += h
            um[c] -= h
            grad[c] = (entropy_function(up, GAMMA53)
                       - entropy_function(um, GAMMA53)) / (2 * h)
        np.testing.assert_allclose(w[k], grad, rtol=1e-6, atol=1e-6)


def test_entropy_hessian_spd(rng):
    u = moderate_states(rng, 5, GAMMA53)
    for k in range(5):
        H = np.empty((9, 9))
        h = 1e-4
        for c in range(9):
            up, um = u[k].copy(), u[k].copy()
            up[c] += h
            um[c] -= h
            H[c] = (entropy_variables(up, GAMMA53)
                    - entropy_variables(um, GAMMA53)) / (2 * h)
        H = 0.5 * (H + H.T)
        assert np.linalg.eigvalsh(H).min() > 0


def test_w5_negative(rng):
    u = random_states(rng, 500, GAMMA53)
    assert np.all(entropy_variables(u, GAMMA53)[:, 4] < 0)


# ------------------------------------------------------------------
# non-conservative vectors and source
# ------------------------------------------------------------------

def test_powell_phi_zero_fields():
    u = prim_to_cons(1.0, np.zeros(3), 1.0, np.zeros(3), 0.0, GAMMA53)
    np.testing.assert_array_equal(powell_phi(u), np.zeros(9))


def test_powell_contraction(rng):
    u = random_states(rng, 400, GAMMA53)
    w = entropy_variables(u, GAMMA53)
    theta = np.einsum("nc,nc->n", w, powell_phi(u))
    np.testing.assert_allclose(theta, powell_contraction(u, GAMMA53),
                               rtol=1e-13, atol=1e-13)


def test_powell_contraction_blast_outer():
    # v.B = (0.2 - 0.4 + 0.2) * 1 = 0 for the outer blast state
    u = prim_to_cons(1.0, np.array([0.2, -0.4, 0.2]), 0.3, np.ones(3), 0.0, GAMMA53)
    assert powell_contraction(u, GAMMA53) == pytest.approx(0.0, abs=1e-15)


def test_glm_phi_contraction_vanishes(rng):
    u = random_states(rng, 400, GAMMA53)
    w = entropy_variables(u, GAMMA53)
    phi = glm_phi(u)
    contr = np.einsum("nc,ndc->nd", w, phi)
    # exact cancellation of two terms; tolerance relative to their size
    scale = np.abs(w[:, None, 4:5] * phi[:, :, 4:5]).sum(-1) + np.abs(
        w[:, None, 8:9] * phi[:, :, 8:9]).sum(-1)
    assert np.all(np.abs(contr) <= 1e-13 * np.maximum(1.0, scale))


def test_glm_phi_structure():
    u = prim_to_cons(1.0, np.array([0.5, 0.0, 0.0]), 1.0, np.zeros(3), 0.0, GAMMA53)
    phi = glm_phi(u)
    assert phi[0, 8] == pytest.approx(0.5)  # psi row survives psi = 0
    assert np.all(phi[:, 4] == 0.0)
    u0 = prim_to_cons(1.0, np.zeros(3), 1.0, np.zeros(3), 1.0, GAMMA53)
    np.testing.assert_array_equal(glm_phi(u0), 0.0)


def test_glm_source(rng):
    u = random_states(rng, 100, GAMMA53)
    assert np.all(glm_source(u, GAMMA53) == 0.0)  # alpha defaults to 0
    pa = PhysParams(gamma=5 / 3, alpha=1.0)
    u1 = prim_to_cons(1.0, np.zeros(3), 1.0, np.zeros(3), 2.0, pa)
    assert glm_source(u1, pa)[8] == pytest.approx(-2.0)
    w = entropy_variables(u, pa)
    wr = np.einsum("nc,nc->n", w, glm_source(u, pa))
    rho, v, p, B, psi = cons_to_prim(u, pa)
    np.testing.assert_allclose(wr, -2 * pa.alpha * rho / (2 * p) * psi**2,
                               rtol=1e-13, atol=1e-13)
    assert np.all(wr <= 0)


# ------------------------------------------------------------------
# advective flux
# ------------------------------------------------------------------

def _monolithic_flux(u, params):
    """Oracle: the full advective flux coded in one piece."""
    rho, v, p, B, psi = cons_to_prim(u, params)
    g, ch = params.gamma, params.ch
    B2 = B @ B
    f = np.zeros((3, 9))
    for d in range(3):
        e = np.zeros(3)
        e[d] = 1.0
        f[d, 0] = rho * v[d]
        f[d, 1:4] = rho * v[d] * v + (p + 0.5 * B2) * e - B[d] * B
        f[d, 4] = (v[d] * (0.5 * rho * (v @ v) + g * p / (g - 1.0) + B2)
                   - B[d] * (v @ B) + ch * psi * B[d])
        f[d, 5:8] = v[d] * B - B[d] * v + ch * psi * e
        f[d, 8] = ch * B[d]
    return f


def test_flux_split_sums_to_monolithic_oracle(rng):
    params = PhysParams(gamma=5 / 3, ch=0.83)
    u = random_states(rng, 300, params)
    fe, fm, fg = advective_flux_split(u, params)
    total = advective_flux(u, params)
    np.testing.assert_array_equal(total, fe + fm + fg)
    for k in range(0, 300, 7):
        oracle = _monolithic_flux(u[k], params)
        scale = np.abs(oracle).max() + 1.0
        np.testing.assert_allclose(total[k], oracle, atol=1e-14 * scale)


def test_flux_rest_state():
    params = PhysParams(gamma=5 / 3, ch=1.0)
    u = prim_to_cons(1.0, np.zeros(3), 2.0, np.zeros(3), 0.0, params)
    fe, fm, fg = advective_flux_split(u, params)
    for d in range(3):
        want = np.zeros(9)
        want[1 + d] = 2.0
        np.testing.assert_array_equal(fe[d], want)
    np.testing.assert_array_equal(fm, 0.0)
    np.testing.assert_array_equal(fg, 0.0)


def test_flux_vortex_sample_point():
    # at (1/4, 0, 0) the vortex state is rho=25/(36 pi), v=(0,1,0), B=0
    params = GAMMA53
    rho = 25 / (36 * np.pi)
    u = prim_to_cons(rho, np.array([0.0, 1.0, 0.0]), 5 / (12 * np.pi),
                     np.zeros(3), 0.0, params)
    f = advective_flux(u, params)
    assert f[1, 0] == pytest.approx(rho, abs=1e-15)


# ------------------------------------------------------------------
# flux potentials
# ------------------------------------------------------------------

def test_euler_potential_is_mass_flux(rng):
    u = moderate_states(rng, 300, GAMMA53)
    pe, pm, pg = entropy_flux_potentials(u, GAMMA53)
    rho, v, p, B, psi = cons_to_prim(u, GAMMA53)
    np.testing.assert_allclose(pe, rho[:, None] * v, rtol=1e-12, atol=1e-12)
    # wide-range states: tolerance scaled by the cancelling contraction terms
    u = random_states(rng, 300, GAMMA53)
    pe, pm, pg = entropy_flux_potentials(u, GAMMA53)
    rho, v, p, B, psi = cons_to_prim(u, GAMMA53)
    w = entropy_variables(u, GAMMA53)
    fe = advective_flux_split(u, GAMMA53)[0]
    scale = np.einsum("nc,ndc->nd", np.abs(w), np.abs(fe))
    assert np.all(np.abs(pe - rho[:, None] * v) <= 1e-13 * np.maximum(1, scale))


def test_potentials_at_zero_velocity(rng):
    params = PhysParams(gamma=5 / 3, ch=0.71)
    n = 50
    rho = 10.0 ** rng.uniform(-1, 1, n)
    p = 10.0 ** rng.uniform(-1, 1, n)
    B = rng.normal(0, 1, (n, 3))
    psi = rng.normal(0, 1, n)
    u = prim_to_cons(rho, np.zeros((n, 3)), p, B, psi, params)
    pe, pm, pg = entropy_flux_potentials(u, params)
    np.testing.assert_allclose(pe, 0.0, atol=1e-12)
    np.testing.assert_allclose(pm, 0.0, atol=1e-12)
    # direct contraction of the GLM block
    w = entropy_variables(u, params)
    fg = np.zeros((n, 3, 9))
    for d in range(3):
        fg[:, d, 4] = params.ch * psi * B[:, d]
        fg[:, d, 5 + d] = params.ch * psi
        fg[:, d, 8] = params.ch * B[:, d]
    np.testing.assert_allclose(pg, np.einsum("nc,ndc->nd", w, fg),
                               rtol=1e-13, atol=1e-13)


def test_potentials_pure_hydro_rest():
    u = prim_to_cons(1.3, np.zeros(3), 0.7, np.zeros(3), 0.0, GAMMA53)
    pe, pm, pg = entropy_flux_potentials(u, GAMMA53)
    np.testing.assert_allclose(pm, 0.0, atol=1e-15)
    np.testing.assert_allclose(pg, 0.0, atol=1e-15)


# ------------------------------------------------------------------
# dissipation matrices and viscous fluxes
# ------------------------------------------------------------------

VISC = PhysParams(gamma=5 / 3, mu=0.37, eta=0.21, prandtl=0.72)


def _random_gradients(rng, n):
    return rng.normal(0.0, 1.5, (n, 3, 9))


def _grad_w_from_grad_prim(u, gp, params):
    """Chain rule: entropy-variable gradients from primitive gradients."""
    rho, v, p, B, psi = cons_to_prim(u, params)
    g = params.gamma
    beta = rho / (2 * p)
    grho, gpr = gp[..., :, 0], gp[..., :, 4]
    gv, gB, gpsi = gp[..., :, 1:4], gp[..., :, 5:8], gp[..., :, 8]
    gbeta = grho / (2 * p[..., None]) - (rho / (2 * p**2))[..., None] * gpr
    gs = gpr / p[..., None] - g * grho / rho[..., None]
    gw = np.zeros_like(gp)
    gw[..., :, 0] = (-gs / (g - 1) - gbeta * np.sum(v * v, -1)[..., None]
                     - 2 * beta[..., None] * np.einsum("...dl,...l->...d", gv, v))
    gw[..., :, 1:4] = 2 * (gbeta[..., None] * v[..., None, :]
                           + beta[..., None, None] * gv)
    gw[..., :, 4] = -2 * gbeta
    gw[..., :, 5:8] = 2 * (gbeta[..., None] * B[..., None, :]
                           + beta[..., None, None] * gB)
    gw[..., :, 8] = 2 * (gbeta * psi[..., None] + beta[..., None] * gpsi)
    return gw


def test_viscous_zero_gradients(rng):
    u = random_states(rng, 20, VISC)
    gp = np.zeros((20, 3, 9))
    np.testing.assert_array_equal(viscous_flux_direct(u, gp, VISC), 0.0)
    w = entropy_variables(u, VISC)
    np.testing.assert_array_equal(viscous_flux_entropy(w, gp, VISC), 0.0)


def test_viscous_zero_coefficients(rng):
    params = PhysParams(gamma=5 / 3, mu=0.0, eta=0.0, prandtl=0.72)
    u = random_states(rng, 20, params)
    gp = _random_gradients(rng, 20)
    np.testing.assert_array_equal(viscous_flux_direct(u, gp, params), 0.0)


def test_viscous_routes_agree(rng):
    """Direct formula == entropy-gradient formula == K matvec, 1000 samples."""
    n = 1000
    u = random_states(rng, n, VISC)
    gp = _random_gradients(rng, n)
    gw = _grad_w_from_grad_prim(u, gp, VISC)
    w = entropy_variables(u, VISC)
    fd = viscous_flux_direct(u, gp, VISC)
    fk = viscous_flux_entropy(w, gw, VISC)
    scale = np.abs(fd).max(axis=(1, 2), keepdims=True) + 1.0
    np.testing.assert_allclose(fk / scale, fd / scale, atol=1e-10)
    K = k_matrices(w, VISC)
    fm = np.einsum("nij,nj->ni", K, gw.reshape(n, 27)).reshape(n, 3, 9)
    np.testing.assert_allclose(fm / scale, fd / scale, atol=1e-10)


def test_heat_flux_only_component(rng):
    """A pure w5 gradient with mu = eta = 0 leaves only heat conduction."""
    params = PhysParams(gamma=5 / 3, mu=0.0, eta=0.0, prandtl=0.72)
    u = random_states(rng, 30, params)
    w = entropy_variables(u, params)
    gw = np.zeros((30, 3, 9))
    gw[:, :, 4] = rng.normal(0, 1, (30, 3))
    # mu = 0 implies kappa/R = 0: nothing moves at all
    np.testing.assert_array_equal(viscous_flux_entropy(w, gw, params), 0.0)
    # with conduction on, a pure w5 gradient at rest (v = 0) drives only the
    # energy row, equal to kappa/R * grad(p/rho) = kappa/R * grad(w5)/w5^2
    params2 = PhysParams(gamma=2.0, mu=0.72, eta=0.0, prandtl=2.0)
    assert params2.kappa_over_R == pytest.approx(0.72)
    n = 30
    rho = 10.0 ** rng.uniform(-1, 1, n)
    p = 10.0 ** rng.uniform(-1, 1, n)
    u2 = prim_to_cons(rho, np.zeros((n, 3)), p, rng.normal(0, 1, (n, 3)),
                      np.zeros(n), params2)
    w2 = entropy_variables(u2, params2)
    f2 = viscous_flux_entropy(w2, gw, params2)
    want = params2.kappa_over_R * gw[:, :, 4] / w2[:, None, 4] ** 2
    np.testing.assert_allclose(f2[:, :, 4], want, rtol=1e-12, atol=1e-13)
    f2[:, :, 4] = 0.0
    np.testing.assert_allclose(f2, 0.0, atol=1e-12)


def test_k_matrix_symmetry(rng):
    u = random_states(rng, 200, VISC)
    w = entropy_variables(u, VISC)
    K = k_matrices(w, VISC)
    np.testing.assert_allclose(K, np.swapaxes(K, -1, -2), rtol=0, atol=1e-14 * np.abs(K).max())
    # block relations hold exactly entrywise
    for i in range(3):
        for j in range(3):
            bij = K[..., 9 * i:9 * i + 9, 9 * j:9 * j + 9]
            bji = K[..., 9 * j:9 * j + 9, 9 * i:9 * i + 9]
            np.testing.assert_array_equal(bij, np.swapaxes(bji, -1, -2))


def test_k_matrix_psd_sampling(rng):
    u = random_states(rng, 500, VISC)
    w = entropy_variables(u, VISC)
    K = k_matrices(w, VISC)
    q = rng.normal(0, 1, (500, 27))
    quad = np.einsum("ni,nij,nj->n", q, K, q)
    assert np.all(quad >= -1e-12 * np.sum(q * q, axis=1))


def test_k_matrix_rejects_bad_w(rng):
    w = np.zeros(9)
    w[4] = 0.5
    with pytest.raises(PositivityError):
        k_matrices(w, VISC)


def test_resistive_eigenvalues(rng):
    """Resistive-only spectrum: {0, 2 eta p/rho, eta p (|B|^2+2)/rho} x {24,1,2}."""
    params = PhysParams(gamma=5 / 3, mu=0.0, eta=0.47, prandtl=0.72)
    u = random_states(rng, 20, params)
    w = entropy_variables(u, params)
    K = k_matrices(w, params)
    rho, v, p, B, psi = cons_to_prim(u, params)
    for k in range(20):
        ev = np.sort(np.linalg.eigvalsh(0.5 * (K[k] + K[k].T)))
        lam1 = 2 * params.eta * p[k] / rho[k]
        lam2 = params.eta * p[k] * (B[k] @ B[k] + 2.0) / rho[k]
        top = max(lam2, 1.0)
        assert np.all(np.abs(ev[:24]) <= 1e-9 * top)
        np.testing.assert_allclose(ev[24:], np.sort([lam1, lam2, lam2]),
                                   rtol=1e-9)


# ------------------------------------------------------------------
# wave speeds
# ------------------------------------------------------------------

def test_wave_speeds_hydro_limit(rng):
    n = np.array([1.0, 0.0, 0.0])
    u = prim_to_cons(1.0, np.array([0.3, 0.0, 0.0]), 1.0, np.zeros(3), 0.0, GAMMA53)
    cs, ca, cf, lam = wave_speeds(u, n, GAMMA53)
    assert cf == pytest.approx(cs, rel=1e-14)
    assert lam == pytest.approx(0.3 + cs, rel=1e-14)


def test_wave_speeds_aligned_field_limit():
    # B parallel to n with c_a > c_s: the fast speed equals the Alfven speed
    n = np.array([1.0, 0.0, 0.0])
    u = prim_to_cons(1.0, np.zeros(3), 0.1, np.array([3.0, 0.0, 0.0]), 0.0, GAMMA53)
    cs, ca, cf, lam = wave_speeds(u, n, GAMMA53)
    assert ca > cs
    assert cf == pytest.approx(ca, rel=1e-12)


def test_wave_speed_dominates(rng):
    u = random_states(rng, 400, GAMMA53)
    n = rng.normal(0, 1, (400, 3))
    n /= np.linalg.norm(n, axis=1, keepdims=True)
    rho, v, p, B, psi = cons_to_prim(u, GAMMA53)
    cs, ca, cf, lam = wave_speeds(u, n, GAMMA53)
    can = np.abs(np.sum(B * n, -1)) / np.sqrt(rho)
    assert np.all(cf >= cs - 1e-12 * cf)
    assert np.all(cf >= can - 1e-12 * cf)


def test_wave_speed_ch_floor():
    params = PhysParams(gamma=5 / 3, ch=100.0)
    u = prim_to_cons(1.0, np.zeros(3), 1.0, np.zeros(3), 0.0, params)
    lam = wave_speeds(u, np.array([1.0, 0, 0]), params)[3]
    assert lam == 100.0
