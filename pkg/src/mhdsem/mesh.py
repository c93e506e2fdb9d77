"""Fully periodic curvilinear hexahedral meshes.

A Cartesian block of elements covers a box in chi-space; element geometry
nodes are the images of the per-element tensor-product LGL grid under an
optional global warp.  Because the warp displacement is 2-periodic in every
chi-direction and all supported boxes have side length matching that period
(or the warp vanishes on the box faces), periodic face pairs coincide
physically modulo the domain period vector.

Volume-weighted contravariant metric vectors are computed in conservative
curl form, which makes the discrete metric identities
sum_l d(J a^l_n)/d(xi^l) = 0 hold at every node; the cross-product form is
kept only as a diagnostic (it violates the identities on warped elements).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from mhdsem.operators import Operator1D

__all__ = ["MeshConfig", "Mesh", "FaceConnection", "sine_warp", "build_mesh",
           "compute_metrics_curl", "compute_metrics_cross", "surface_metrics",
           "metric_identity_residual", "mesh_bounds"]

# faces 0..5: (xi-, xi+, eta-, eta+, zeta-, zeta+)
FACE_AXIS = (0, 0, 1, 1, 2, 2)
FACE_SIDE = (0, 1, 0, 1, 0, 1)          # 0: low end, 1: high end
OPPOSITE_FACE = (1, 0, 3, 2, 5, 4)

TYPE_A_BOUNDS = ((0.0, 1.0), (0.0, 1.0), (0.0, 1.0))
TYPE_B_BOUNDS = ((-0.6, 1.4), (-0.8, 1.2), (-0.7, 1.3))


def mesh_bounds(mesh_type: str):
    """Chi-space bounds of the two supported periodic boxes."""
    if mesh_type == "a":
        return TYPE_A_BOUNDS
    if mesh_type == "b":
        return TYPE_B_BOUNDS
    raise ValueError(f"unknown mesh type {mesh_type!r}")


def sine_warp(chi: np.ndarray) -> np.ndarray:
    """Warp x_l = chi_l + 0.1 sin(pi chi_1) sin(pi chi_2) sin(pi chi_3)."""
    chi = np.asarray(chi, dtype=float)
    bump = 0.1 * (np.sin(np.pi * chi[..., 0]) * np.sin(np.pi * chi[..., 1])
                  * np.sin(np.pi * chi[..., 2]))
    return chi + bump[..., None]


_TRANSFORMS = {"identity": lambda chi: np.asarray(chi, dtype=float).copy(),
               "sine_warp": sine_warp}


@dataclass(frozen=True)
class MeshConfig:
    """Periodic Cartesian-topology mesh description.

    Attributes:
        elements_per_dim: (n1, n2, n3) elements.
        bounds: per-dimension (lo, hi) of the chi box.
        transform: "identity" or "sine_warp".
        degree: geometry polynomial degree (equals the solution degree).
    """

    elements_per_dim: tuple[int, int, int]
    bounds: tuple[tuple[float, float], ...] = TYPE_A_BOUNDS
    transform: str = "sine_warp"
    degree: int = 3

    def __post_init__(self):
        if any(n < 1 for n in self.elements_per_dim):
            raise ValueError("need at least one element per dimension")
        if any(hi <= lo for lo, hi in self.bounds):
            raise ValueError("degenerate chi bounds")
        if self.transform not in _TRANSFORMS:
            raise ValueError(f"unknown transform {self.transform!r}")


@dataclass(frozen=True)
class FaceConnection:
    """One interior face: (element, local face) pair on each side.

    The Cartesian generator produces identity orientation only: face node
    (a, b) on the left side coincides with face node (a, b) on the right.
    """

    element_left: int
    face_left: int
    element_right: int
    face_right: int


def _axis_derivative(f: np.ndarray, D: np.ndarray, axis: int) -> np.ndarray:
    """Apply the derivative matrix along one lattice axis."""
    return np.moveaxis(np.tensordot(D, np.moveaxis(f, axis, 0), axes=(1, 0)),
                       0, axis)


def compute_metrics_curl(x: np.ndarray, op: Operator1D):
    """Jacobian and contravariant vectors in conservative curl form.

    Args:
        x: nodal coordinates, shape (E, n, n, n, 3).

    Returns:
        (J, Jai): J shape (E, n, n, n); Jai shape (E, n, n, n, 3, 3) with
        Jai[..., l, d] the d-th physical component of J a^(l+1).
    """
    D = op.D
    t = [_axis_derivative(x, D, 1 + l) for l in range(3)]  # t[l][..., d] = dX_d/dxi^l
    J = np.einsum("...i,...i->...", t[0], np.cross(t[1], t[2]))
    Jai = np.empty(x.shape[:-1] + (3, 3))
    for ncomp in range(3):
        m, l = (ncomp + 1) % 3, (ncomp + 2) % 3
        # reference-space vector field X_l * grad_xi(X_m), collocated product
        w = np.stack([x[..., l] * t[d][..., m] for d in range(3)], axis=-1)
        dw = [_axis_derivative(w, D, 1 + a) for a in range(3)]
        Jai[..., 0, ncomp] = -(dw[1][..., 2] - dw[2][..., 1])
        Jai[..., 1, ncomp] = -(dw[2][..., 0] - dw[0][..., 2])
        Jai[..., 2, ncomp] = -(dw[0][..., 1] - dw[1][..., 0])
    return J, Jai


def compute_metrics_cross(x: np.ndarray, op: Operator1D):
    """Cross-product-form metrics (diagnostic only; breaks the identities)."""
    t = [_axis_derivative(x, op.D, 1 + l) for l in range(3)]
    J = np.einsum("...i,...i->...", t[0], np.cross(t[1], t[2]))
    Jai = np.empty(x.shape[:-1] + (3, 3))
    for l in range(3):
        Jai[..., l, :] = np.cross(t[(l + 1) % 3], t[(l + 2) % 3])
    return J, Jai


def metric_identity_residual(Jai: np.ndarray, op: Operator1D) -> float:
    """Max-norm of sum_l d(J a^l_n)/d(xi^l) over all nodes and components."""
    r = sum(_axis_derivative(Jai[..., l, :], op.D, 1 + l) for l in range(3))
    return float(np.max(np.abs(r)))


def surface_metrics(Jai: np.ndarray, op: Operator1D):
    """Per-face surface element and outward unit normal at face nodes.

    Face values are boundary slices of the volume metric polynomials.

    Returns:
        (sh, normal): sh shape (E, 6, n, n); normal shape (E, 6, n, n, 3).
    """
    n1 = op.N
    sl = {0: (0, slice(None), slice(None)), 1: (n1, slice(None), slice(None)),
          2: (slice(None), 0, slice(None)), 3: (slice(None), n1, slice(None)),
          4: (slice(None), slice(None), 0), 5: (slice(None), slice(None), n1)}
    E, n = Jai.shape[0], Jai.shape[1]
    sh = np.empty((E, 6, n, n))
    normal = np.empty((E, 6, n, n, 3))
    for f in range(6):
        axis, side = FACE_AXIS[f], FACE_SIDE[f]
        i, j, k = sl[f]
        vec = Jai[:, i, j, k, axis, :]
        mag = np.linalg.norm(vec, axis=-1)
        if np.any(mag == 0.0):
            raise ValueError(f"degenerate surface element on face {f}")
        sign = 1.0 if side == 1 else -1.0
        sh[:, f] = mag
        normal[:, f] = sign * vec / mag[..., None]
    return sh, normal


@dataclass(frozen=True)
class Mesh:
    """Immutable periodic curvilinear mesh with precomputed metrics.

    Attributes:
        config: generating configuration.
        op: 1D operator bundle shared by all kernels.
        x: nodal coordinates (E, n, n, n, 3).
        J: Jacobian at nodes (E, n, n, n).
        Jai: contravariant vectors (E, n, n, n, 3, 3), [..., l, d].
        sh: face surface elements (E, 6, n, n).
        normal: outward unit normals (E, 6, n, n, 3).
        neighbor: periodic neighbor element per face, (E, 6).
        period: domain extent per dimension (chi-space and x-space agree).
    """

    config: MeshConfig
    op: Operator1D
    x: np.ndarray
    J: np.ndarray
    Jai: np.ndarray
    sh: np.ndarray
    normal: np.ndarray
    neighbor: np.ndarray
    period: np.ndarray

    @property
    def n_elements(self) -> int:
        return self.x.shape[0]

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.config.elements_per_dim

    def element_index(self, ex: int, ey: int, ez: int) -> int:
        n1, n2, _ = self.config.elements_per_dim
        return ex + n1 * (ey + n2 * ez)

    def face_connections(self) -> list[FaceConnection]:
        """Every interior face exactly once (plus-side elements as left)."""
        out = []
        for f in (1, 3, 5):
            for e in range(self.n_elements):
                out.append(FaceConnection(e, f, int(self.neighbor[e, f]),
                                          OPPOSITE_FACE[f]))
        return out

    def min_spacing(self) -> float:
        """Smallest chi-space element edge, for step-size heuristics."""
        return min((hi - lo) / n for (lo, hi), n in
                   zip(self.config.bounds, self.config.elements_per_dim))

    def dump_vtk(self, path, point_fields: dict[str, np.ndarray] | None = None):
        """Legacy ASCII VTK structured grid of all element nodal points.

        Elements are stacked into a global IJK lattice (interface points are
        duplicated); intended for visual inspection only.
        """
        n1, n2, n3 = self.config.elements_per_dim
        n = self.op.N + 1
        dims = (n1 * n, n2 * n, n3 * n)
        pts = np.empty(dims + (3,))
        data = {name: np.empty(dims) for name in (point_fields or {})}
        for ez in range(n3):
            for ey in range(n2):
                for ex in range(n1):
                    e = self.element_index(ex, ey, ez)
                    blk = (slice(ex * n, (ex + 1) * n),
                           slice(ey * n, (ey + 1) * n),
                           slice(ez * n, (ez + 1) * n))
                    pts[blk] = self.x[e]
                    for name in data:
                        data[name][blk] = point_fields[name][e]
        with open(path, "w") as fh:
            fh.write("# vtk DataFile Version 3.0\nmhdsem mesh\nASCII\n")
            fh.write("DATASET STRUCTURED_GRID\n")
            fh.write(f"DIMENSIONS {dims[0]} {dims[1]} {dims[2]}\n")
            fh.write(f"POINTS {pts[..., 0].size} double\n")
            flat = pts.transpose(2, 1, 0, 3).reshape(-1, 3)
            for row in flat:
                fh.write(f"{row[0]!r} {row[1]!r} {row[2]!r}\n")
            if data:
                fh.write(f"POINT_DATA {flat.shape[0]}\n")
                for name, arr in data.items():
                    fh.write(f"SCALARS {name} double 1\nLOOKUP_TABLE default\n")
                    for val in arr.transpose(2, 1, 0).reshape(-1):
                        fh.write(f"{val!r}\n")


def build_mesh(config: MeshConfig, op: Operator1D | None = None) -> Mesh:
    """Build the periodic mesh: geometry nodes, metrics, face data, topology.

    Raises:
        ValueError: if the transformed geometry yields a non-positive
            Jacobian anywhere (offending element reported).
    """
    op = op or Operator1D.build(config.degree)
    if op.N != config.degree:
        raise ValueError("operator degree does not match mesh config")
    n1, n2, n3 = config.elements_per_dim
    E = n1 * n2 * n3
    n = op.N + 1
    transform = _TRANSFORMS[config.transform]

    lows = np.array([lo for lo, hi in config.bounds])
    lens = np.array([hi - lo for lo, hi in config.bounds])
    dchi = lens / np.array([n1, n2, n3])

    ref = 0.5 * (op.nodes + 1.0)  # [0, 1] reference coordinates
    x = np.empty((E, n, n, n, 3))
    for ez in range(n3):
        for ey in range(n2):
            for ex in range(n1):
                e = ex + n1 * (ey + n2 * ez)
                chi = np.empty((n, n, n, 3))
                chi[..., 0] = (lows[0] + (ex + ref[:, None, None]) * dchi[0])
                chi[..., 1] = (lows[1] + (ey + ref[None, :, None]) * dchi[1])
                chi[..., 2] = (lows[2] + (ez + ref[None, None, :]) * dchi[2])
                x[e] = transform(chi)

    J, Jai = compute_metrics_curl(x, op)
    if np.any(J <= 0):
        bad = int(np.argwhere(J <= 0)[0][0])
        raise ValueError(f"non-positive Jacobian in element {bad}")
    sh, normal = surface_metrics(Jai, op)

    neighbor = np.empty((E, 6), dtype=np.int64)
    for ez in range(n3):
        for ey in range(n2):
            for ex in range(n1):
                e = ex + n1 * (ey + n2 * ez)
                neighbor[e, 0] = (ex - 1) % n1 + n1 * (ey + n2 * ez)
                neighbor[e, 1] = (ex + 1) % n1 + n1 * (ey + n2 * ez)
                neighbor[e, 2] = ex + n1 * ((ey - 1) % n2 + n2 * ez)
                neighbor[e, 3] = ex + n1 * ((ey + 1) % n2 + n2 * ez)
                neighbor[e, 4] = ex + n1 * (ey + n2 * ((ez - 1) % n3))
                neighbor[e, 5] = ex + n1 * (ey + n2 * ((ez + 1) % n3))

    for a in (x, J, Jai, sh, normal, neighbor):
        a.setflags(write=False)
    return Mesh(config=config, op=op, x=x, J=J, Jai=Jai, sh=sh,
                normal=normal, neighbor=neighbor, period=lens)
