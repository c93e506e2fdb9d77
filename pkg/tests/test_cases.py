"""Case initializer and error-norm tests.

The manufactured forcing is validated against finite differences of the
continuous operators: d/dt of the state plus the flux divergence, with the
viscous part fed analytic primitive gradients.  This also pins down the
heat-conduction coefficient convention.
"""

from __future__ import annotations

import numpy as np
import pytest

from mhdsem.cases import (CaseSpec, blast_wave_state, build_case,
                          case_defaults, eoc, gaussian_pulse_state, l2_error,
                          manufactured_residual, manufactured_state,
                          orszag_tang_state)
from mhdsem.dgcore import divergence_error
from mhdsem.mesh import MeshConfig, build_mesh, mesh_bounds
from mhdsem.physics import (PhysParams, advective_flux, cons_to_prim,
                            viscous_flux_direct)

P_MANU = PhysParams(gamma=2.0, mu=0.005, eta=0.005, prandtl=0.72)


def test_manufactured_state_at_zero_phase():
    u = manufactured_state(np.zeros(3), 0.0)
    np.testing.assert_allclose(u, [2, 2, 2, 0, 10, 2, -2, 0, 0], atol=1e-15)


def test_manufactured_state_admissible_everywhere(rng):
    x = rng.uniform(-2, 2, (4000, 3))
    for t in (0.0, 0.37, 1.0):
        u = manufactured_state(x, t)
        rho, v, p, B, psi = cons_to_prim(u, P_MANU)
        assert np.all(rho >= 1.5) and np.all(rho <= 2.5)
        np.testing.assert_allclose(p, rho**2, rtol=1e-12)


def test_manufactured_space_time_symmetry(rng):
    """h_x = h_y = h_z = -h_t by the single phase variable."""
    x = rng.uniform(0, 1, (50, 3))
    eps = 1e-6
    for d in range(3):
        dx = np.zeros(3)
        dx[d] = eps
        gx = (manufactured_state(x + dx, 0.2)
              - manufactured_state(x - dx, 0.2)) / (2 * eps)
        gt = (manufactured_state(x, 0.2 + eps)
              - manufactured_state(x, 0.2 - eps)) / (2 * eps)
        np.testing.assert_allclose(gx, -gt, atol=1e-6)


def _manufactured_grad_prim(x, t):
    """Analytic gradients of (rho, v, p, B, psi) for the manufactured state."""
    ph = 2 * np.pi * (x[..., 0] + x[..., 1] + x[..., 2] - t)
    h = 0.5 * np.sin(ph) + 2.0
    hx = np.pi * np.cos(ph)
    g = np.zeros(x.shape[:-1] + (3, 9))
    for d in range(3):
        g[..., d, 0] = hx
        g[..., d, 4] = 2.0 * h * hx   # p = h^2
        g[..., d, 5] = hx
        g[..., d, 6] = -hx
    return g


def test_manufactured_residual_matches_fd_of_continuous_operators(rng):
    """residual == u_t + div f^a - div f^v at scattered points, to 1e-6."""
    pts = rng.uniform(0, 1, (40, 3))
    t = 0.31
    eps = 1e-5
    ut = (manufactured_state(pts, t + eps)
          - manufactured_state(pts, t - eps)) / (2 * eps)
    div = np.zeros_like(ut)
    for d in range(3):
        dx = np.zeros(3)
        dx[d] = eps
        fp = advective_flux(manufactured_state(pts + dx, t), P_MANU)
        fm = advective_flux(manufactured_state(pts - dx, t), P_MANU)
        div += (fp[..., d, :] - fm[..., d, :]) / (2 * eps)
        vp = viscous_flux_direct(manufactured_state(pts + dx, t),
                                 _manufactured_grad_prim(pts + dx, t), P_MANU)
        vm = viscous_flux_direct(manufactured_state(pts - dx, t),
                                 _manufactured_grad_prim(pts - dx, t), P_MANU)
        div -= (vp[..., d, :] - vm[..., d, :]) / (2 * eps)
    want = manufactured_residual(pts, t, P_MANU)
    scale = np.abs(want).max() + 1.0
    np.testing.assert_allclose((ut + div) / scale, want / scale, atol=1e-6)


def test_manufactured_residual_zero_viscosity_structure():
    p0 = PhysParams(gamma=2.0, mu=0.0, eta=0.0, prandtl=0.72)
    x = np.array([[0.1, 0.2, 0.3]])
    ph = 2 * np.pi * 0.6
    h = 0.5 * np.sin(ph) + 2.0
    hx = np.pi * np.cos(ph)
    r = manufactured_residual(x, 0.0, p0)[0]
    assert r[0] == pytest.approx(hx, rel=1e-14)
    assert r[4] == pytest.approx(hx + 12 * h * hx, rel=1e-14)
    assert r[5] == pytest.approx(hx, rel=1e-14)
    assert r[6] == pytest.approx(-hx, rel=1e-14)


def test_manufactured_residual_pure_diffusion_phase():
    """Where h_x = 0 but h_xx != 0 only the diffusion terms survive."""
    x = np.array([[0.25, 0.0, 0.0]])  # phase = pi/2
    r = manufactured_residual(x, 0.0, P_MANU)[0]
    hxx = -2.0 * np.pi**2
    # h_x = pi*cos(pi/2) is ~1e-16, not exactly zero in floating point
    assert abs(r[0]) < 1e-12 and abs(r[1]) < 1e-11 and abs(r[3]) < 1e-11
    assert r[4] == pytest.approx(-6 * 0.005 * 2.5 * hxx
                                 - 6 * 0.005 * hxx / 0.72, rel=1e-12)
    assert r[5] == pytest.approx(-3 * 0.005 * hxx, rel=1e-13)


def test_manufactured_residual_rejects_wrong_parameters():
    with pytest.raises(ValueError):
        manufactured_residual(np.zeros(3), 0.0, PhysParams(gamma=5 / 3))


# ------------------------------------------------------------------
# blast wave
# ------------------------------------------------------------------

def test_blast_wave_limits():
    inner = blast_wave_state(np.array([0.3, 0.4, 0.2]))
    gamma = 5 / 3
    p_in = PhysParams(gamma=gamma)
    rho, v, p, B, psi = cons_to_prim(inner, p_in)
    # the blend weight at the center is exp(-5 r0/delta0) ~ 3e-7, not zero
    assert rho == pytest.approx(1.2, abs=1e-6)
    assert p == pytest.approx(0.9, abs=1e-6)
    np.testing.assert_allclose(v, [0.1, 0.0, 0.1], atol=1e-6)
    far = blast_wave_state(np.array([0.3 + 2.0, 0.4, 0.2]))
    rho, v, p, B, psi = cons_to_prim(far, p_in)
    assert rho == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(v, [0.2, -0.4, 0.2], atol=1e-12)


def test_blast_wave_midpoint_is_arithmetic_mean():
    x = np.array([0.3 + 0.3, 0.4, 0.2])  # r = r0 -> lambda = 1
    u = blast_wave_state(x)
    rho, v, p, B, psi = cons_to_prim(u, PhysParams(gamma=5 / 3))
    assert rho == pytest.approx(1.1, abs=1e-13)
    assert p == pytest.approx(0.6, abs=1e-13)
    np.testing.assert_allclose(v, [0.15, -0.2, 0.15], atol=1e-13)


# ------------------------------------------------------------------
# gaussian pulse and vortex
# ------------------------------------------------------------------

def test_gaussian_pulse_profile():
    c = gaussian_pulse_state(np.array([0.5, 0.5, 0.5]))
    assert c[5] == 1.0 and c[0] == 1.0 and c[4] == 6.0
    far = gaussian_pulse_state(np.array([0.0, 0.0, 0.0]))
    assert far[5] < 1e-30
    spec = CaseSpec(case="gaussian_pulse", elements=(4, 4, 4), N=3,
                    **{k: v for k, v in case_defaults("gaussian_pulse").items()
                       if k != "elements"})
    mesh, u0, cfg, exact = build_case(spec)
    assert divergence_error(u0, mesh) > 1e-3


def test_orszag_tang_pointwise():
    u = orszag_tang_state(np.zeros(3))
    rho, v, p, B, psi = cons_to_prim(u, PhysParams(gamma=5 / 3))
    assert rho == pytest.approx(25 / (36 * np.pi), rel=1e-14)
    assert p == pytest.approx(5 / (12 * np.pi), rel=1e-14)
    np.testing.assert_allclose(v, 0.0, atol=1e-15)
    np.testing.assert_allclose(B, 0.0, atol=1e-15)
    u2 = orszag_tang_state(np.array([0.25, 0.0, 0.0]))
    assert u2[2] / u2[0] == pytest.approx(1.0, rel=1e-14)  # v2 = sin(pi/2)


def test_orszag_tang_reynolds_numbers():
    d = case_defaults("orszag_tang")
    assert 1.0 / d["mu"] == pytest.approx(1000.0)
    assert 1.0 / d["eta"] == pytest.approx(1667.0, rel=1e-3)


def test_orszag_tang_divergence_free_and_converges():
    errs = {}
    for N in (3, 6):
        spec = CaseSpec(case="orszag_tang", elements=(4, 4, 4), N=N,
                        **{k: v for k, v in case_defaults("orszag_tang").items()
                           if k != "elements"})
        mesh, u0, cfg, exact = build_case(spec)
        errs[N] = divergence_error(u0, mesh)
    assert errs[6] <= 0.05 * errs[3]


def test_initializers_admissible_on_meshes():
    for case in ("manufactured", "blast_wave", "gaussian_pulse", "orszag_tang"):
        d = case_defaults(case)
        d["elements"] = (3, 3, 3)
        spec = CaseSpec(case=case, N=3, **d)
        mesh, u0, cfg, exact = build_case(spec)
        cons_to_prim(u0, cfg.params)  # raises on inadmissible data


# ------------------------------------------------------------------
# error norms
# ------------------------------------------------------------------

def test_l2_error_exact_field_is_zero():
    spec = CaseSpec(case="manufactured", elements=(2, 2, 2), N=3,
                    **{k: v for k, v in case_defaults("manufactured").items()
                       if k != "elements"})
    mesh, u0, cfg, exact = build_case(spec)
    errs = l2_error(u0, exact, 0.0, mesh, cfg.params.gamma)
    assert all(v <= 1e-13 for v in errs.values())


def test_l2_error_constant_offset():
    cfg = MeshConfig((2, 2, 2), bounds=((0, 1), (0, 1), (0, 1)),
                     transform="identity", degree=2)
    mesh = build_mesh(cfg)
    exact = lambda x, t: manufactured_state(x, t)
    u = manufactured_state(mesh.x, 0.0)
    u[..., 0] += 1e-3
    errs = l2_error(u, exact, 0.0, mesh, 2.0)
    assert errs["rho"] == pytest.approx(1e-3, rel=1e-10)


def test_eoc_values():
    assert eoc([1.0, 1.0 / 16.0]) == [pytest.approx(4.0)]
    with pytest.raises(ValueError):
        eoc([1.0])
    with pytest.raises(ValueError):
        eoc([1.0, 0.0])


def test_case_spec_validation():
    with pytest.raises(ValueError):
        CaseSpec(case="implosion")
    with pytest.raises(ValueError):
        CaseSpec(case="manufactured", gamma=1.4)
