"""Two-point flux and interface-coupling tests.

The entropy-conservation conditions are checked numerically over random
admissible pairs spanning four orders of magnitude in density and pressure;
the stable log-mean is checked against a 50-digit mpmath evaluation.
"""

from __future__ import annotations

import mpmath
import numpy as np
import pytest

from conftest import moderate_states, random_states
from mhdsem.numflux import (br1_couplings, ec_flux, ec_flux_split,
                            es_surface_flux, log_mean, noncons_surface_B,
                            noncons_surface_psi)
from mhdsem.physics import (PhysParams, advective_flux, cons_to_prim,
                            entropy_flux_potentials, entropy_variables,
                            glm_phi, powell_contraction, powell_phi,
                            viscous_flux_entropy)

PARAMS = PhysParams(gamma=5 / 3, ch=0.83)


# ------------------------------------------------------------------
# log mean
# ------------------------------------------------------------------

def _log_mean_mp(a, b):
    """Oracle: (a - b)/(ln a - ln b) in 50-digit arithmetic."""
    with mpmath.workdps(50):
        a, b = mpmath.mpf(a), mpmath.mpf(b)
        if a == b:
            return float(a)
        return float((a - b) / (mpmath.log(a) - mpmath.log(b)))


def test_log_mean_equal_arguments():
    assert log_mean(3.0, 3.0) == 3.0


def test_log_mean_separated():
    assert log_mean(1.0, np.e) == pytest.approx(np.e - 1.0, rel=1e-14)


def test_log_mean_near_equal_is_stable():
    a, b = 1.0, 1.0 + 1e-12
    lm = log_mean(a, b)
    assert np.isfinite(lm) and a <= lm <= b
    assert lm == pytest.approx(_log_mean_mp(a, b), rel=1e-14)


@pytest.mark.parametrize("delta", [1e-15, 1e-11, 1e-8, 1e-5, 1e-3, 0.1, 10.0])
def test_log_mean_vs_mpmath(delta):
    for a in (1e-3, 1.0, 7.3e2):
        b = a * (1.0 + delta)
        assert log_mean(a, b) == pytest.approx(_log_mean_mp(a, b), rel=5e-15)
        assert log_mean(b, a) == pytest.approx(_log_mean_mp(a, b), rel=5e-15)


def test_log_mean_bounds(rng):
    a = 10.0 ** rng.uniform(-3, 3, 2000)
    b = 10.0 ** rng.uniform(-3, 3, 2000)
    lm = log_mean(a, b)
    assert np.all(lm >= np.minimum(a, b) - 1e-14 * np.maximum(a, b))
    assert np.all(lm <= np.maximum(a, b) * (1 + 1e-14))


def test_log_mean_rejects_nonpositive():
    with pytest.raises(ValueError):
        log_mean(-1.0, 2.0)
    with pytest.raises(ValueError):
        log_mean(1.0, 0.0)


# ------------------------------------------------------------------
# entropy-conservative flux
# ------------------------------------------------------------------

def _total_potential(u, params):
    pe, pm, pg = entropy_flux_potentials(u, params)
    return pe + pm + pg


def test_ec_flux_consistency(rng):
    u = random_states(rng, 500, PARAMS)
    F = ec_flux(u, u, PARAMS)
    fa = advective_flux(u, PARAMS)
    scale = np.abs(fa).max(axis=(1, 2), keepdims=True) + 1.0
    np.testing.assert_allclose(F / scale, fa / scale, atol=1e-13)


def test_ec_flux_symmetry(rng):
    uL = random_states(rng, 500, PARAMS)
    uR = random_states(rng, 500, PARAMS)
    FL = ec_flux(uL, uR, PARAMS)
    FR = ec_flux(uR, uL, PARAMS)
    scale = np.abs(FL).max() + 1.0
    np.testing.assert_allclose(FL / scale, FR / scale, atol=1e-13)


def _ec_condition_residuals(uL, uR, params):
    """Relative residual of the per-direction entropy conservation condition."""
    wL = entropy_variables(uL, params)
    wR = entropy_variables(uR, params)
    dw = wR - wL
    PL = _total_potential(uL, params)
    PR = _total_potential(uR, params)
    thL = powell_contraction(uL, params)
    thR = powell_contraction(uR, params)
    Bbar = 0.5 * (uL[:, 5:8] + uR[:, 5:8])
    F = ec_flux(uL, uR, params)
    lhs = np.einsum("nc,ndc->nd", dw, F)
    rhs = (PR - PL) - Bbar * (thR - thL)[:, None]
    scale = (np.einsum("nc,ndc->nd", np.abs(dw), np.abs(F))
             + np.abs(PR) + np.abs(PL) + 1.0)
    return np.abs(lhs - rhs) / scale


def test_ec_condition_all_directions(rng):
    uL = random_states(rng, 4000, PARAMS)
    uR = random_states(rng, 4000, PARAMS)
    assert _ec_condition_residuals(uL, uR, PARAMS).max() <= 1e-12


def test_ec_condition_without_glm(rng):
    params = PhysParams(gamma=1.4, ch=0.0)
    uL = random_states(rng, 2000, params)
    uR = random_states(rng, 2000, params)
    assert _ec_condition_residuals(uL, uR, params).max() <= 1e-12


def test_ec_split_blocks_sum_and_conditions(rng):
    uL = random_states(rng, 2000, PARAMS)
    uR = random_states(rng, 2000, PARAMS)
    Fe, Fm, Fg = ec_flux_split(uL, uR, PARAMS)
    F = ec_flux(uL, uR, PARAMS)
    scale = np.abs(F).max() + 1.0
    np.testing.assert_allclose((Fe + Fm + Fg) / scale, F / scale, atol=1e-14)

    wL = entropy_variables(uL, PARAMS)
    wR = entropy_variables(uR, PARAMS)
    dw = wR - wL
    peL, pmL, pgL = entropy_flux_potentials(uL, PARAMS)
    peR, pmR, pgR = entropy_flux_potentials(uR, PARAMS)
    thL = powell_contraction(uL, PARAMS)
    thR = powell_contraction(uR, PARAMS)
    Bbar = 0.5 * (uL[:, 5:8] + uR[:, 5:8])
    norm = np.einsum("nc,ndc->nd", np.abs(dw), np.abs(F)) + 1.0
    for block, rhs in ((Fe, peR - peL),
                       (Fm, (pmR - pmL) - Bbar * (thR - thL)[:, None]),
                       (Fg, pgR - pgL)):
        lhs = np.einsum("nc,ndc->nd", dw, block)
        assert np.max(np.abs(lhs - rhs) / norm) <= 1e-12


# ------------------------------------------------------------------
# entropy-stable surface flux
# ------------------------------------------------------------------

def _unit_normals(rng, n):
    v = rng.normal(0, 1, (n, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def test_es_flux_consistency(rng):
    u = random_states(rng, 200, PARAMS)
    n = _unit_normals(rng, 200)
    F = es_surface_flux(u, u, n, PARAMS)
    fa = np.einsum("ndc,nd->nc", advective_flux(u, PARAMS), n)
    scale = np.abs(fa).max() + 1.0
    np.testing.assert_allclose(F / scale, fa / scale, atol=1e-13)


def test_es_dissipation_vanishes_on_zero_jump(rng):
    u = moderate_states(rng, 100, PARAMS)
    n = _unit_normals(rng, 100)
    ec = np.einsum("ndc,nd->nc", ec_flux(u, u, PARAMS), n)
    es = es_surface_flux(u, u.copy(), n, PARAMS)
    np.testing.assert_array_equal(es, ec)


def test_es_flux_interface_entropy_dissipation(rng):
    """jump(w) . (F_es - F_ec) <= 0: the added term only destroys entropy."""
    uL = moderate_states(rng, 2000, PARAMS)
    uR = moderate_states(rng, 2000, PARAMS)
    n = _unit_normals(rng, 2000)
    dw = entropy_variables(uR, PARAMS) - entropy_variables(uL, PARAMS)
    diss = es_surface_flux(uL, uR, n, PARAMS) - np.einsum(
        "ndc,nd->nc", ec_flux(uL, uR, PARAMS), n)
    prod = np.einsum("nc,nc->n", dw, diss)
    assert np.all(prod <= 1e-12)


# ------------------------------------------------------------------
# non-conservative couplings
# ------------------------------------------------------------------

def test_noncons_B_equal_states(rng):
    u = random_states(rng, 100, PARAMS)
    n = _unit_normals(rng, 100)
    coup = noncons_surface_B(u, u, n)
    Bn = np.sum(u[:, 5:8] * n, -1)
    resid = coup - powell_phi(u) * Bn[:, None]
    np.testing.assert_allclose(resid, 0.0, atol=1e-14 * (np.abs(coup).max() + 1))


def test_noncons_B_opposite_field(rng):
    u = moderate_states(rng, 50, PARAMS)
    uP = u.copy()
    uP[:, 5:8] *= -1.0
    n = _unit_normals(rng, 50)
    coup = noncons_surface_B(u, uP, n)
    np.testing.assert_allclose(coup, 0.0, atol=1e-14)
    Bn = np.sum(u[:, 5:8] * n, -1)
    resid = coup - powell_phi(u) * Bn[:, None]
    np.testing.assert_allclose(resid, -powell_phi(u) * Bn[:, None], atol=1e-15)


def test_noncons_B_two_sided_telescoping(rng):
    """Summed two-sided contraction equals avg(Theta) jump(B).n per node."""
    uM = random_states(rng, 1000, PARAMS)
    uP = random_states(rng, 1000, PARAMS)
    n = _unit_normals(rng, 1000)
    wM = entropy_variables(uM, PARAMS)
    wP = entropy_variables(uP, PARAMS)
    BnM = np.sum(uM[:, 5:8] * n, -1)
    BnP = np.sum(uP[:, 5:8] * (-n), -1)
    residM = noncons_surface_B(uM, uP, n) - powell_phi(uM) * BnM[:, None]
    residP = noncons_surface_B(uP, uM, -n) - powell_phi(uP) * BnP[:, None]
    total = np.einsum("nc,nc->n", wM, residM) + np.einsum("nc,nc->n", wP, residP)
    thM = powell_contraction(uM, PARAMS)
    thP = powell_contraction(uP, PARAMS)
    want = 0.5 * (thM + thP) * np.sum((uP[:, 5:8] - uM[:, 5:8]) * n, -1)
    scale = (np.abs(wM * residM).sum(-1) + np.abs(wP * residP).sum(-1) + 1.0)
    assert np.max(np.abs(total - want) / scale) <= 1e-13


def test_noncons_psi_local_cancellation(rng):
    uM = random_states(rng, 1000, PARAMS)
    uP = random_states(rng, 1000, PARAMS)
    n = _unit_normals(rng, 1000)
    wM = entropy_variables(uM, PARAMS)
    phin = np.einsum("ndc,nd->nc", glm_phi(uM), n)
    resid = noncons_surface_psi(uM, uP, n) - phin * uM[:, 8:9]
    contr = np.einsum("nc,nc->n", wM, resid)
    scale = np.abs(wM[:, 4] * resid[:, 4]) + np.abs(wM[:, 8] * resid[:, 8]) + 1.0
    assert np.max(np.abs(contr) / scale) <= 1e-13


def test_noncons_psi_trivial_cases(rng):
    u = random_states(rng, 50, PARAMS)
    n = _unit_normals(rng, 50)
    phin = np.einsum("ndc,nd->nc", glm_phi(u), n)
    resid = noncons_surface_psi(u, u, n) - phin * u[:, 8:9]
    np.testing.assert_array_equal(resid, 0.0)
    # zero velocity kills the coupling entirely
    u0 = u.copy()
    u0[:, 1:4] = 0.0
    np.testing.assert_array_equal(noncons_surface_psi(u0, u, n), 0.0)


# ------------------------------------------------------------------
# BR1
# ------------------------------------------------------------------

def test_br1_equal_states(rng):
    params = PhysParams(gamma=5 / 3, mu=0.2, eta=0.1)
    u = random_states(rng, 50, params)
    w = entropy_variables(u, params)
    gw = rng.normal(0, 1, (50, 3, 9))
    fv = viscous_flux_entropy(w, gw, params)
    n = _unit_normals(rng, 50)
    Wstar, Fvn = br1_couplings(u, u, fv, fv, n, params)
    np.testing.assert_array_equal(Wstar, w)
    np.testing.assert_allclose(Fvn, np.einsum("ndc,nd->nc", fv, n), atol=1e-15)


def test_br1_swap_antisymmetry(rng):
    params = PhysParams(gamma=5 / 3, mu=0.2, eta=0.1)
    uM = random_states(rng, 50, params)
    uP = random_states(rng, 50, params)
    fvM = rng.normal(0, 1, (50, 3, 9))
    fvP = rng.normal(0, 1, (50, 3, 9))
    n = _unit_normals(rng, 50)
    W1, F1 = br1_couplings(uM, uP, fvM, fvP, n, params)
    W2, F2 = br1_couplings(uP, uM, fvP, fvM, -n, params)
    np.testing.assert_array_equal(W1, W2)
    np.testing.assert_allclose(F1, -F2, atol=1e-15 * (np.abs(F1).max() + 1))
