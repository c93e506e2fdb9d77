"""Verification cases: initializers, analytic references, error norms.

Four configured experiments: a manufactured smooth solution with analytic
forcing for convergence studies, a moving spherical blast wave in a uniform
magnetic field for entropy-conservation studies, a non-solenoidal Gaussian
field pulse for divergence-cleaning studies, and a viscous 3D Orszag-Tang
vortex as the robustness workout.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit, prange

from mhdsem.dgcore import RhsConfig
from mhdsem.mesh import Mesh, MeshConfig, build_mesh, mesh_bounds
from mhdsem.physics import PhysParams, prim_to_cons

__all__ = ["CaseSpec", "CASE_NAMES", "build_case", "manufactured_state",
           "manufactured_residual", "blast_wave_state", "gaussian_pulse_state",
           "orszag_tang_state", "l2_error", "eoc"]

CASE_NAMES = ("manufactured", "blast_wave", "gaussian_pulse", "orszag_tang")

L2_VARIABLES = ("rho", "v1", "v3", "p", "B1", "B3", "psi")


@dataclass
class CaseSpec:
    """One runnable experiment configuration."""

    case: str
    elements: tuple[int, int, int] = (4, 4, 4)
    N: int = 3
    mesh_type: str = "a"
    t_end: float = 0.5
    gamma: float = 5.0 / 3.0
    mu: float = 0.0
    eta: float = 0.0
    prandtl: float = 0.72
    alpha: float = 0.0
    ch_policy: str = "proportional"
    mode: str = "es"

    def __post_init__(self):
        if self.case not in CASE_NAMES:
            raise ValueError(f"unknown case {self.case!r}")
        if not 1 <= self.N <= 10:
            raise ValueError(f"polynomial degree N={self.N} outside [1, 10]")
        if self.case == "manufactured" and (self.gamma != 2.0
                                            or self.prandtl != 0.72):
            raise ValueError("manufactured case requires gamma=2, Pr=0.72")

    def params(self) -> PhysParams:
        return PhysParams(gamma=self.gamma, mu=self.mu, eta=self.eta,
                          prandtl=self.prandtl, alpha=self.alpha)


_CASE_DEFAULTS = {
    "manufactured": dict(mesh_type="b", gamma=2.0, mu=0.005, eta=0.005,
                         t_end=1.0, mode="es"),
    "blast_wave": dict(mesh_type="b", gamma=5.0 / 3.0, t_end=0.2, mode="ec",
                       elements=(3, 3, 3)),
    "gaussian_pulse": dict(mesh_type="a", gamma=5.0 / 3.0, t_end=2.0,
                           mode="es", elements=(8, 8, 8)),
    "orszag_tang": dict(mesh_type="a", gamma=5.0 / 3.0, mu=1.0e-3,
                        eta=6.0e-4, t_end=0.5, mode="es", elements=(8, 8, 8)),
}


def case_defaults(case: str) -> dict:
    if case not in CASE_NAMES:
        raise ValueError(f"unknown case {case!r}")
    return dict(_CASE_DEFAULTS[case])


# ------------------------------------------------------------------
# initial states and references
# ------------------------------------------------------------------

def _phase(x: np.ndarray, t: float) -> np.ndarray:
    return 2.0 * np.pi * (x[..., 0] + x[..., 1] + x[..., 2] - t)


def manufactured_state(x: np.ndarray, t: float) -> np.ndarray:
    """Smooth traveling-wave state (h, h, h, 0, 2h^2 + h, h, -h, 0, 0).

    h = 0.5 sin(2 pi (x + y + z - t)) + 2; for gamma = 2 the pressure is
    h^2, so the state is admissible everywhere.
    """
    h = 0.5 * np.sin(_phase(x, t)) + 2.0
    u = np.zeros(h.shape + (9,))
    u[..., 0] = h
    u[..., 1] = h
    u[..., 2] = h
    u[..., 4] = 2.0 * h * h + h
    u[..., 5] = h
    u[..., 6] = -h
    return u


def manufactured_residual(x: np.ndarray, t: float,
                          params: PhysParams) -> np.ndarray:
    """Forcing that makes the manufactured state an exact solution.

    Valid for gamma = 2 and Pr = 0.72 (rejected otherwise); added to the
    right-hand side at each Runge-Kutta stage time.
    """
    if params.gamma != 2.0 or params.prandtl != 0.72:
        raise ValueError("manufactured residual requires gamma=2, Pr=0.72")
    ph = _phase(x, t)
    h = 0.5 * np.sin(ph) + 2.0
    hx = np.pi * np.cos(ph)
    hxx = -2.0 * np.pi**2 * np.sin(ph)
    mu, eta = params.mu, params.eta
    r = np.zeros(h.shape + (9,))
    r[..., 0] = hx
    r[..., 1] = hx + 4.0 * h * hx
    r[..., 2] = hx + 4.0 * h * hx
    r[..., 3] = 4.0 * h * hx
    r[..., 4] = (hx + 12.0 * h * hx - 6.0 * eta * (hx * hx + h * hxx)
                 - 6.0 * mu * hxx / params.prandtl)
    r[..., 5] = hx - 3.0 * eta * hxx
    r[..., 6] = -hx + 3.0 * eta * hxx
    return r


def blast_wave_state(x: np.ndarray) -> np.ndarray:
    """Moving spherical blast in a uniform field, blended in primitives."""
    gamma = 5.0 / 3.0
    center = np.array([0.3, 0.4, 0.2])
    r = np.linalg.norm(x - center, axis=-1)
    lam = np.exp(np.minimum((5.0 / 0.1) * (r - 0.3), 500.0))
    wgt = lam / (1.0 + lam)
    inner = {"rho": 1.2, "v": np.array([0.1, 0.0, 0.1]), "p": 0.9}
    outer = {"rho": 1.0, "v": np.array([0.2, -0.4, 0.2]), "p": 0.3}
    rho = inner["rho"] + (outer["rho"] - inner["rho"]) * wgt
    p = inner["p"] + (outer["p"] - inner["p"]) * wgt
    v = inner["v"] + (outer["v"] - inner["v"]) * wgt[..., None]
    B = np.ones(x.shape)
    psi = np.zeros_like(rho)
    return prim_to_cons(rho, v, p, B, psi, PhysParams(gamma=gamma))


def gaussian_pulse_state(x: np.ndarray) -> np.ndarray:
    """Deliberately non-solenoidal Gaussian in B1; rho = 1, E = 6, rest 0."""
    r2 = np.sum((x - 0.5) ** 2, axis=-1)
    u = np.zeros(x.shape[:-1] + (9,))
    u[..., 0] = 1.0
    u[..., 4] = 6.0
    u[..., 5] = np.exp(-r2 / (8.0 * 0.0275**2))
    return u


def orszag_tang_state(x: np.ndarray) -> np.ndarray:
    """3D viscous Orszag-Tang vortex initial data (primitives -> state)."""
    gamma = 5.0 / 3.0
    tp = 2.0 * np.pi
    rho = np.full(x.shape[:-1], 25.0 / (36.0 * np.pi))
    p = np.full(x.shape[:-1], 5.0 / (12.0 * np.pi))
    v = np.stack([-np.sin(tp * x[..., 2]), np.sin(tp * x[..., 0]),
                  np.sin(tp * x[..., 1])], axis=-1)
    B = np.stack([-np.sin(tp * x[..., 2]) / (4.0 * np.pi),
                  np.sin(2.0 * tp * x[..., 0]) / (4.0 * np.pi),
                  np.sin(2.0 * tp * x[..., 1]) / (4.0 * np.pi)], axis=-1)
    psi = np.zeros_like(rho)
    return prim_to_cons(rho, v, p, B, psi, PhysParams(gamma=gamma))


@njit(cache=True, parallel=True)
def _residual_kernel(x, t, mu, eta, pr, out):
    # flattened-node evaluation of the forcing; hot path of the RHS
    M = x.shape[0]
    for m in prange(M):
        ph = 2.0 * np.pi * (x[m, 0] + x[m, 1] + x[m, 2] - t)
        h = 0.5 * np.sin(ph) + 2.0
        hx = np.pi * np.cos(ph)
        hxx = -2.0 * np.pi**2 * np.sin(ph)
        out[m, 0] = hx
        out[m, 1] = hx + 4.0 * h * hx
        out[m, 2] = out[m, 1]
        out[m, 3] = 4.0 * h * hx
        out[m, 4] = (hx + 12.0 * h * hx - 6.0 * eta * (hx * hx + h * hxx)
                     - 6.0 * mu * hxx / pr)
        out[m, 5] = hx - 3.0 * eta * hxx
        out[m, 6] = -out[m, 5]
        out[m, 7] = 0.0
        out[m, 8] = 0.0


def _fast_residual_source(params: PhysParams):
    mu, eta, pr = params.mu, params.eta, params.prandtl

    def source(x, t):
        out = np.empty(x.shape[:-1] + (9,))
        _residual_kernel(x.reshape(-1, 3), t, mu, eta, pr,
                         out.reshape(-1, 9))
        return out

    return source


_INITIALIZERS = {
    "manufactured": lambda x: manufactured_state(x, 0.0),
    "blast_wave": blast_wave_state,
    "gaussian_pulse": gaussian_pulse_state,
    "orszag_tang": orszag_tang_state,
}


def build_case(spec: CaseSpec):
    """Mesh, initial state and RHS configuration for a case.

    Returns:
        (mesh, u0, rhs_cfg, exact): exact is the analytic reference
        u(x, t) for the manufactured case, else None.
    """
    mcfg = MeshConfig(spec.elements, bounds=mesh_bounds(spec.mesh_type),
                      transform="sine_warp", degree=spec.N)
    mesh = build_mesh(mcfg)
    u0 = _INITIALIZERS[spec.case](mesh.x)
    params = spec.params()
    source = None
    exact = None
    if spec.case == "manufactured":
        source = _fast_residual_source(params)
        exact = manufactured_state
    viscous = spec.mu > 0 or spec.eta > 0
    cfg = RhsConfig(params=params, mode=spec.mode, include_viscous=viscous,
                    include_glm=True, source=source)
    return mesh, u0, cfg, exact


# ------------------------------------------------------------------
# error norms
# ------------------------------------------------------------------

def _primitive_table(u: np.ndarray, gamma: float) -> dict[str, np.ndarray]:
    rho = u[..., 0]
    p = (gamma - 1.0) * (u[..., 4]
                         - 0.5 * np.sum(u[..., 1:4] ** 2, axis=-1) / rho
                         - 0.5 * np.sum(u[..., 5:8] ** 2, axis=-1)
                         - 0.5 * u[..., 8] ** 2)
    return {"rho": rho, "v1": u[..., 1] / rho, "v3": u[..., 3] / rho,
            "p": p, "B1": u[..., 5], "B3": u[..., 7], "psi": u[..., 8]}


def l2_error(u: np.ndarray, exact_fn, t: float, mesh: Mesh,
             gamma: float) -> dict[str, float]:
    """Volume-normalized quadrature L2 errors of the reported variables."""
    wq = mesh.op.weights
    w3 = wq[:, None, None] * wq[None, :, None] * wq[None, None, :]
    meas = w3 * mesh.J
    vol = float(np.sum(meas))
    got = _primitive_table(u, gamma)
    want = _primitive_table(exact_fn(mesh.x, t), gamma)
    return {k: float(np.sqrt(np.sum(meas * (got[k] - want[k]) ** 2) / vol))
            for k in L2_VARIABLES}


def eoc(errors: list[float]) -> list[float]:
    """Observed convergence orders between successive factor-2 refinements."""
    if len(errors) < 2:
        raise ValueError("need at least two refinement levels")
    if any(e <= 0 for e in errors):
        raise ValueError("zero error level: order undefined")
    return [float(np.log2(errors[i] / errors[i + 1]))
            for i in range(len(errors) - 1)]
