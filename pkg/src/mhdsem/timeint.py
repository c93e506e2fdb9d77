"""Explicit five-stage fourth-order low-storage Runge-Kutta integration.

Carpenter & Kennedy (1994) 2N-storage RK5(4) coefficients.  The adaptive
step uses an advective + viscous spectral-radius estimate per node,
  sum_i (|Ja^i . v| + c_f |Ja^i|) (2N+1)/(2J)
  + max(4 mu/(3 rho), eta, kappa/R * gamma/rho) (sum_i |Ja^i| (2N+1)/(2J))^2,
and the divergence-wave speed is refreshed once per step (frozen within a
step) as the largest |v| + fast speed over all nodes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from mhdsem.dgcore import RhsConfig, compute_rhs
from mhdsem.mesh import Mesh
from mhdsem.physics import (PhysParams, PositivityError, cons_to_prim,
                            max_signal_speed)

__all__ = ["TimeConfig", "rk54_step", "compute_dt", "update_ch", "advance"]

# Carpenter & Kennedy (1994), five-stage fourth-order 2N-storage scheme
_RK_A = (0.0,
         -567301805773.0 / 1357537059087.0,
         -2404267990393.0 / 2016746695238.0,
         -3550918686646.0 / 2091501179385.0,
         -1275806237668.0 / 842570457699.0)
_RK_B = (1432997174477.0 / 9575080441755.0,
         5161836677717.0 / 13612068292357.0,
         1720146321549.0 / 2090206949498.0,
         3134564353537.0 / 4481467310338.0,
         2277821191437.0 / 14882151754819.0)
_RK_C = (0.0,
         1432997174477.0 / 9575080441755.0,
         2526269341429.0 / 6820363962896.0,
         2006345519317.0 / 3224310063776.0,
         2802321613138.0 / 2924317926251.0)


@dataclass
class TimeConfig:
    """Time integration controls.

    fixed_dt overrides the CFL-adaptive step (used for temporal-order
    studies); ch_policy "zero" disables divergence transport entirely.
    """

    t_end: float
    cfl: float = 0.5
    fixed_dt: float | None = None
    ch_policy: str = "proportional"
    alpha: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.cfl <= 1.0:
            raise ValueError("CFL must lie in (0, 1]")
        if self.t_end <= 0.0:
            raise ValueError("end time must be positive")
        if self.ch_policy not in ("proportional", "zero"):
            raise ValueError(f"unknown ch policy {self.ch_policy!r}")
        if self.alpha < 0.0:
            raise ValueError("damping coefficient must be nonnegative")


def rk54_step(u: np.ndarray, t: float, dt: float,
              rhs: Callable[[np.ndarray, float], np.ndarray]) -> np.ndarray:
    """One 2N-storage RK5(4) step; returns the updated state."""
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    unew = u.copy()
    k = None
    for a, b, c in zip(_RK_A, _RK_B, _RK_C):
        stage = rhs(unew, t + c * dt)
        if k is None:
            k = dt * stage
        else:
            k *= a
            k += dt * stage
        unew += b * k
    return unew


def update_ch(u: np.ndarray, params: PhysParams) -> float:
    """Divergence-wave speed: largest |v| + fast-speed bound over all nodes."""
    return float(max_signal_speed(u, params).max())


def compute_dt(u: np.ndarray, mesh: Mesh, params: PhysParams,
               cfl: float) -> float:
    """CFL-stable step from the advective+viscous spectral-radius estimate."""
    rho, v, p, B, psi = cons_to_prim(u, params)
    N = mesh.op.N
    fac = (2 * N + 1) / (2.0 * mesh.J)
    cs2 = params.gamma * p / rho
    ca2 = np.sum(B * B, axis=-1) / rho
    adv = np.zeros_like(rho)
    mag_sum = np.zeros_like(rho)
    for l in range(3):
        Jal = mesh.Jai[..., l, :]
        mag = np.linalg.norm(Jal, axis=-1)
        mag_sum += mag
        can2 = np.sum(B * Jal, axis=-1) ** 2 / (rho * mag**2)
        tot = cs2 + ca2
        cf = np.sqrt(0.5 * (tot + np.sqrt(np.maximum(tot**2 - 4 * cs2 * can2,
                                                     0.0))))
        adv += np.abs(np.sum(v * Jal, axis=-1)) + cf * mag
    speed = adv * fac
    diff = np.maximum(4.0 * params.mu / (3.0 * rho),
                      np.maximum(params.eta,
                                 params.kappa_over_R * params.gamma / rho))
    if params.mu > 0 or params.eta > 0:
        speed = speed + diff * (mag_sum * fac) ** 2
    return cfl / float(speed.max())


def advance(u: np.ndarray, mesh: Mesh, cfg: RhsConfig, tcfg: TimeConfig,
            t0: float = 0.0,
            on_step: Callable[[int, float, float, np.ndarray], None] | None = None):
    """March the solution to t_end; returns (u, t, n_steps).

    The GLM speed and the damping coefficient from tcfg are written into
    cfg.params before each step.  PositivityError escapes to the caller,
    which owns crash-time reporting.
    """
    params = cfg.params
    params.alpha = tcfg.alpha
    t = t0
    step = 0
    rhs = lambda state, time: compute_rhs(state, mesh, cfg, time)
    while t < tcfg.t_end - 1e-14 * max(1.0, tcfg.t_end):
        params.ch = update_ch(u, params) if tcfg.ch_policy == "proportional" else 0.0
        dt = tcfg.fixed_dt if tcfg.fixed_dt else compute_dt(u, mesh, params,
                                                            tcfg.cfl)
        if not dt > 1e-12 * max(1.0, tcfg.t_end):
            # runaway signal speeds: the solution is effectively lost
            raise PositivityError(
                f"time step collapsed (dt={dt:.3e}) at t={t:.6g}", time=t)
        dt = min(dt, tcfg.t_end - t)
        u = rk54_step(u, t, dt, rhs)
        t += dt
        step += 1
        if on_step is not None:
            on_step(step, t, dt, u)
    return u, t, step
