"""Semi-discrete split-form DGSEM right-hand side and entropy diagnostics.

Evaluation order per right-hand side: primitive/entropy-variable cache ->
(viscous path: BR1-lifted gradients, nodal viscous fluxes) -> split-form
volume kernel -> surface kernel -> division by the Jacobian.  All hot loops
run in compiled per-element kernels; each element touches only its own
residual, so the element loop parallelizes without write conflicts, and the
two-point interface flux is built purely from symmetric means so both sides
of a face compute the identical coupling value.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from mhdsem import kernels
from mhdsem.mesh import Mesh
from mhdsem.physics import PhysParams, PositivityError, wave_speeds

__all__ = ["RhsConfig", "compute_rhs", "lift_gradients", "volume_terms",
           "volume_advective", "volume_noncons_mhd", "volume_noncons_glm",
           "volume_viscous", "surface_terms", "total_entropy",
           "entropy_rate", "divergence_error", "primitive_cache",
           "entropy_vars_field"]

_NO_FV = np.zeros((1, 1, 1, 1, 3, 9))
_NO_SRC = np.zeros((1, 1, 1, 1, 9))


class _Workspace:
    """Per-(E, n) scratch buffers so kernels never allocate in prange."""

    _cache: dict = {}

    def __init__(self, E: int, n: int):
        import numba
        # size per-thread buffers by the configured maximum, not the current
        # count: a later set_num_threads increase must not overflow them
        nt = numba.config.NUMBA_NUM_THREADS
        self.f9 = np.empty((E, 9))
        self.br = np.empty((E, 9))
        self.fa = np.empty((E, 9))
        self.ncb = np.empty((E, n, n, n))
        self.gac = np.empty((E, n, n, n))
        self.ft = np.empty((nt, 3, n, n, n, 9))
        self.q = np.empty((nt, n, n, n, 3, 9))

    @classmethod
    def get(cls, shape) -> "_Workspace":
        key = (shape[0], shape[1])
        ws = cls._cache.get(key)
        if ws is None:
            ws = cls(*key)
            cls._cache[key] = ws
        return ws


@dataclass
class RhsConfig:
    """Right-hand-side assembly switches.

    mode selects the advective surface flux ("ec" keeps the scheme entropy
    conservative for the ideal system, "es" adds interface dissipation).
    source, if set, is called as source(x, t) -> state array and added to
    the right-hand side (used by the manufactured-solution case).
    """

    params: PhysParams
    mode: str = "es"
    include_viscous: bool = True
    include_glm: bool = True
    source: Callable[[np.ndarray, float], np.ndarray] | None = None

    def __post_init__(self):
        if self.mode not in ("ec", "es"):
            raise ValueError(f"unknown surface flux mode {self.mode!r}")


# ------------------------------------------------------------------
# field-level helpers
# ------------------------------------------------------------------

def _raise_positivity(fail, t):
    loc = tuple(int(v) for v in fail)
    raise PositivityError(
        f"non-positive density or pressure at element {loc[0]}, "
        f"node {loc[1:]}" + (f", t={t:.6g}" if t is not None else ""),
        where=loc, time=t)


def primitive_cache(u: np.ndarray, params: PhysParams, t: float | None = None):
    """Primitive cache via the positivity-checking kernel.

    Raises:
        PositivityError: reporting (element, i, j, k) and the time.
    """
    prim = np.empty(u.shape[:-1] + (15,))
    fail = np.empty(4, dtype=np.int64)
    kernels.primitives_kernel(u, params.gamma, prim, fail)
    if fail[0] >= 0:
        _raise_positivity(fail, t)
    return prim


def _prim_and_entropy(u: np.ndarray, params: PhysParams, t: float | None):
    prim = np.empty(u.shape[:-1] + (15,))
    w = np.empty(u.shape[:-1] + (9,))
    fail = np.empty(4, dtype=np.int64)
    kernels.primitives_entropy_kernel(u, params.gamma, prim, w, fail)
    if fail[0] >= 0:
        _raise_positivity(fail, t)
    return prim, w


def entropy_vars_field(prim: np.ndarray, gamma: float) -> np.ndarray:
    """Entropy variables from the primitive cache (vectorized)."""
    K = kernels
    beta = prim[..., K.BETA]
    lnp = prim[..., K.LNR] - np.log(2.0) - prim[..., K.LNB]
    s = lnp - gamma * prim[..., K.LNR]
    w = np.empty(prim.shape[:-1] + (9,))
    w[..., 0] = (gamma - s) / (gamma - 1.0) - beta * prim[..., K.V2]
    w[..., 1:4] = 2.0 * beta[..., None] * prim[..., K.VX:K.VZ + 1]
    w[..., 4] = -2.0 * beta
    w[..., 5:8] = 2.0 * beta[..., None] * prim[..., K.BX:K.BZ + 1]
    w[..., 8] = 2.0 * beta * prim[..., K.PSI]
    return w


def _dxi(f: np.ndarray, D: np.ndarray, axis: int) -> np.ndarray:
    """Derivative matrix along one lattice axis of an (E, n, n, n, ...) field."""
    return np.moveaxis(np.tensordot(D, np.moveaxis(f, axis, 0), axes=(1, 0)),
                       0, axis)


# ------------------------------------------------------------------
# operators
# ------------------------------------------------------------------

def _diag_mask(D: np.ndarray) -> np.ndarray:
    """Diagonal derivative entries that are not pure roundoff."""
    return (np.abs(np.diag(D)) > 1e-13 * np.abs(D).max()).astype(np.uint8)


def volume_terms(u: np.ndarray, mesh: Mesh, params: PhysParams,
                 include_glm: bool = True) -> np.ndarray:
    """Fused advective + non-conservative volume operator (LHS sign).

    This is the kernel compute_rhs uses; the individual operators below are
    reference implementations of its three constituents.
    """
    prim = primitive_cache(u, params)
    res = np.empty_like(u)
    ws = _Workspace.get(u.shape)
    kernels.volume_kernel(prim, mesh.Jai, mesh.op.D, params.ch, params.gamma,
                          include_glm, res, ws.f9, ws.ncb, ws.gac,
                          _diag_mask(mesh.op.D))
    return res


def volume_advective(u: np.ndarray, mesh: Mesh, params: PhysParams,
                     block: str = "all") -> np.ndarray:
    """Split-form flux-differencing volume term (reference path).

    At node (i,j,k): 2 sum_m D[i,m] F_ec(u_ijk, u_mjk).avg(Ja^1)_(i,m)jk
    plus the two analogous directions; metric averages are arithmetic means
    of nodal metric values.  block selects the euler/mhd/glm flux component
    ("all" sums them).
    """
    from mhdsem.numflux import ec_flux, ec_flux_split

    D = mesh.op.D
    res = np.zeros_like(u)
    pick = {"euler": 0, "mhd": 1, "glm": 2}

    def two_point(uL, uR):
        if block == "all":
            return ec_flux(uL, uR, params)
        return ec_flux_split(uL, uR, params)[pick[block]]

    Jai = mesh.Jai
    F = two_point(u[:, :, None], u[:, None, :])
    am = 0.5 * (Jai[:, :, None, ..., 0, :] + Jai[:, None, :, ..., 0, :])
    res += 2.0 * np.einsum("im,eimjkc->eijkc", D,
                           np.einsum("eimjkdc,eimjkd->eimjkc", F, am))
    F = two_point(u[:, :, :, None], u[:, :, None, :])
    am = 0.5 * (Jai[:, :, :, None, ..., 1, :] + Jai[:, :, None, :, ..., 1, :])
    res += 2.0 * np.einsum("jm,eijmkc->eijkc", D,
                           np.einsum("eijmkdc,eijmkd->eijmkc", F, am))
    F = two_point(u[..., :, None, :], u[..., None, :, :])
    am = 0.5 * (Jai[..., :, None, 2, :] + Jai[..., None, :, 2, :])
    res += 2.0 * np.einsum("km,eijkmc->eijkc", D,
                           np.einsum("eijkmdc,eijkmd->eijkmc", F, am))
    return res


def volume_noncons_mhd(u: np.ndarray, mesh: Mesh,
                       params: PhysParams) -> np.ndarray:
    """Powell volume term: phi(u_ijk) times the metric-averaged divergence
    of B (derivative hits B at the remote node, metrics pair (i,m))."""
    from mhdsem.physics import powell_phi

    D = mesh.op.D
    Jai = mesh.Jai
    B = u[..., 5:8]
    s = np.einsum("im,eimjk->eijk", D, np.einsum(
        "emjkd,eimjkd->eimjk", B,
        0.5 * (Jai[:, :, None, ..., 0, :] + Jai[:, None, :, ..., 0, :])))
    s += np.einsum("jm,eijmk->eijk", D, np.einsum(
        "eimkd,eijmkd->eijmk", B,
        0.5 * (Jai[:, :, :, None, ..., 1, :] + Jai[:, :, None, :, ..., 1, :])))
    s += np.einsum("km,eijkm->eijk", D, np.einsum(
        "eijmd,eijkmd->eijkm", B,
        0.5 * (Jai[..., :, None, 2, :] + Jai[..., None, :, 2, :])))
    return powell_phi(u) * s[..., None]


def volume_noncons_glm(u: np.ndarray, mesh: Mesh,
                       params: PhysParams) -> np.ndarray:
    """Galilean GLM volume term: phi_glm(u_ijk).(Ja^l at ijk) D-gradient of
    psi (metric terms evaluated at the node, not averaged)."""
    D = mesh.op.D
    rho = u[..., 0]
    vel = u[..., 1:4] / rho[..., None]
    psi = u[..., 8]
    g = [np.einsum("im,emjk->eijk", D, psi),
         np.einsum("jm,eimk->eijk", D, psi),
         np.einsum("km,eijm->eijk", D, psi)]
    res = np.zeros_like(u)
    for l in range(3):
        vJa = np.einsum("...d,...d->...", mesh.Jai[..., l, :], vel)
        res[..., 4] += vJa * psi * g[l]
        res[..., 8] += vJa * g[l]
    return res


def volume_viscous(u: np.ndarray, Q: np.ndarray, mesh: Mesh,
                   params: PhysParams) -> np.ndarray:
    """D-divergence of the metric-contracted viscous fluxes (RHS sign)."""
    from mhdsem.physics import viscous_flux_entropy

    prim, w = _prim_and_entropy(u, params, None)
    fv = viscous_flux_entropy(w, Q, params)
    ft = np.einsum("...ld,...dc->...lc", mesh.Jai, fv)
    out = _dxi(ft[..., 0, :], mesh.op.D, 1)
    out += _dxi(ft[..., 1, :], mesh.op.D, 2)
    out += _dxi(ft[..., 2, :], mesh.op.D, 3)
    return out


def surface_terms(u: np.ndarray, mesh: Mesh, cfg: RhsConfig) -> np.ndarray:
    """Assembled surface contributions, lifted to boundary slices (LHS sign).

    Per face node: (s-hat / w_boundary) [F*_n - F_n + Powell and GLM
    coupling residuals - (Fv*_n - Fv_n)].
    """
    params = cfg.params
    prim, w = _prim_and_entropy(u, params, None)
    fv = _NO_FV
    if cfg.include_viscous:
        fv = np.empty(u.shape[:-1] + (3, 9))
        ws = _Workspace.get(u.shape)
        kernels.gradient_viscflux_kernel(w, prim, mesh.Jai, mesh.J, mesh.sh,
                                         mesh.normal, mesh.neighbor,
                                         mesh.op.D, mesh.op.weights[0],
                                         params.mu, params.eta,
                                         params.kappa_over_R, fv, ws.q)
    res = np.zeros_like(u)
    ws = _Workspace.get(u.shape)
    kernels.surface_kernel(u, prim, fv, cfg.include_viscous, mesh.sh,
                           mesh.normal, mesh.neighbor, cfg.mode == "es",
                           cfg.include_glm, params.ch, params.gamma,
                           mesh.op.weights[0], res, ws.br, ws.fa)
    return res


def lift_gradients(u: np.ndarray, mesh: Mesh, params: PhysParams) -> np.ndarray:
    """BR1 gradient of the entropy variables, shape (E, n, n, n, 3, 9).

    Strong-form realization: J Q_d = sum_l Ja^l_d d(w)/d(xi^l) plus the
    boundary lift of (avg(w) - w) scaled by s-hat, the outward normal and
    the inverse boundary quadrature weight.
    """
    prim, w = _prim_and_entropy(u, params, None)
    return _lift_gradients_from_w(w, mesh)


def _lift_gradients_from_w(w: np.ndarray, mesh: Mesh) -> np.ndarray:
    Q = np.empty(w.shape[:-1] + (3, 9))
    kernels.gradient_kernel(w, mesh.Jai, mesh.J, mesh.sh, mesh.normal,
                            mesh.neighbor, mesh.op.D, mesh.op.weights[0], Q)
    return Q


def compute_rhs(u: np.ndarray, mesh: Mesh, cfg: RhsConfig,
                t: float = 0.0) -> np.ndarray:
    """Semi-discrete time derivative du/dt of the full scheme.

    Raises:
        PositivityError: on inadmissible density/pressure, with location
            and evaluation time.
    """
    params = cfg.params
    prim, w = _prim_and_entropy(u, params, t)
    res = np.empty_like(u)
    ws = _Workspace.get(u.shape)
    kernels.volume_kernel(prim, mesh.Jai, mesh.op.D, params.ch, params.gamma,
                          cfg.include_glm, res, ws.f9, ws.ncb, ws.gac,
                          _diag_mask(mesh.op.D))

    fv = _NO_FV
    if cfg.include_viscous:
        fv = np.empty(u.shape[:-1] + (3, 9))
        kernels.gradient_viscflux_kernel(w, prim, mesh.Jai, mesh.J, mesh.sh,
                                         mesh.normal, mesh.neighbor,
                                         mesh.op.D, mesh.op.weights[0],
                                         params.mu, params.eta,
                                         params.kappa_over_R, fv, ws.q)
        kernels.viscous_divergence_kernel(fv, mesh.Jai, mesh.op.D, res, ws.ft)

    kernels.surface_kernel(u, prim, fv, cfg.include_viscous, mesh.sh,
                           mesh.normal, mesh.neighbor, cfg.mode == "es",
                           cfg.include_glm, params.ch, params.gamma,
                           mesh.op.weights[0], res, ws.br, ws.fa)
    src = cfg.source(mesh.x, t) if cfg.source is not None else _NO_SRC
    kernels.finalize_kernel(res, mesh.J, params.alpha, u, src,
                            cfg.source is not None)
    return res


# ------------------------------------------------------------------
# diagnostics
# ------------------------------------------------------------------

def _weight_lattice(mesh: Mesh) -> np.ndarray:
    wq = mesh.op.weights
    return wq[:, None, None] * wq[None, :, None] * wq[None, None, :]


def total_entropy(u: np.ndarray, mesh: Mesh, params: PhysParams) -> float:
    """Quadrature of the entropy density over the whole domain."""
    prim = primitive_cache(u, params)
    K = kernels
    lnp = prim[..., K.LNR] - np.log(2.0) - prim[..., K.LNB]
    s = lnp - params.gamma * prim[..., K.LNR]
    S = -prim[..., K.RHO] * s / (params.gamma - 1.0)
    return float(np.sum(_weight_lattice(mesh) * mesh.J * S))


def entropy_rate(u: np.ndarray, mesh: Mesh, cfg: RhsConfig,
                 t: float = 0.0) -> float:
    """Semi-discrete d/dt of the total entropy, sum of J w . u_t."""
    ut = compute_rhs(u, mesh, cfg, t)
    prim, w = _prim_and_entropy(u, cfg.params, t)
    return float(np.sum(_weight_lattice(mesh) * mesh.J
                        * np.einsum("...c,...c->...", w, ut)))


def divergence_error(u: np.ndarray, mesh: Mesh) -> float:
    """Discrete L2 norm of div(B) over the domain (not normalized)."""
    Bt = np.einsum("...ld,...d->...l", mesh.Jai, u[..., 5:8])
    div = _dxi(Bt[..., 0], mesh.op.D, 1)
    div += _dxi(Bt[..., 1], mesh.op.D, 2)
    div += _dxi(Bt[..., 2], mesh.op.D, 3)
    div /= mesh.J
    return float(np.sqrt(np.sum(_weight_lattice(mesh) * mesh.J * div**2)))


def max_lambda(u: np.ndarray, mesh: Mesh, params: PhysParams) -> float:
    """Largest |v.n| + c_f over nodes and coordinate directions (for dt)."""
    lam = 0.0
    for d in range(3):
        n = np.zeros(3)
        n[d] = 1.0
        lam = max(lam, float(wave_speeds(u, n, params)[3].max()))
    return lam
