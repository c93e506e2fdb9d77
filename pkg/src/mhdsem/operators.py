"""One-dimensional Legendre-Gauss-Lobatto quadrature and SBP operators.

All tensor-product kernels of the solver are built from a single
:class:`Operator1D`: the LGL nodes and weights on [-1, 1], the nodal
polynomial derivative matrix D, the SBP matrix Q = diag(w) @ D and the
boundary matrix B = diag(-1, 0, ..., 0, 1).  Collocating interpolation and
quadrature at the LGL nodes makes Q + Q^T = B hold to machine precision,
which the energy/entropy estimates of the scheme rely on.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["Operator1D", "lgl_nodes_weights", "derivative_matrix",
           "barycentric_weights", "interpolate_1d"]

MAX_DEGREE = 10


def _legendre(n: int, x: np.ndarray) -> np.ndarray:
    """Evaluate the Legendre polynomial P_n at points x by recurrence."""
    if n == 0:
        return np.ones_like(x)
    pm, p = np.ones_like(x), np.asarray(x, dtype=float).copy()
    for k in range(1, n):
        pm, p = p, ((2 * k + 1) * x * p - k * pm) / (k + 1)
    return p


def lgl_nodes_weights(N: int) -> tuple[np.ndarray, np.ndarray]:
    """Legendre-Gauss-Lobatto nodes and weights on [-1, 1].

    The N+1 nodes are the roots of (1 - x^2) P'_N(x), computed by Newton
    iteration on q(x) = P_{N+1}(x) - P_{N-1}(x) (same root set) starting
    from Chebyshev-Gauss-Lobatto guesses.  Weights are
    w_i = 2 / (N (N+1) P_N(x_i)^2).  The quadrature is exact for
    polynomials of degree <= 2N - 1.

    Args:
        N: polynomial degree, 1 <= N <= 10.

    Returns:
        (nodes, weights), both shape (N+1,), nodes strictly increasing
        with nodes[0] = -1 and nodes[-1] = +1 exactly.
    """
    if not 1 <= N <= MAX_DEGREE:
        raise ValueError(f"degree N={N} outside supported range [1, {MAX_DEGREE}]")
    x = np.cos(np.pi * np.arange(N + 1) / N)  # CGL initial guess, descending
    for _ in range(50):
        # q' = P'_{N+1} - P'_{N-1} = (2N+1) P_N
        dx = (_legendre(N + 1, x) - _legendre(N - 1, x)) / ((2 * N + 1) * _legendre(N, x))
        x = x - dx
        if np.max(np.abs(dx)) < 1e-15:
            break
    x = x[::-1]
    # kill asymmetric roundoff, pin the endpoints
    x = 0.5 * (x - x[::-1])
    x[0], x[-1] = -1.0, 1.0
    if N % 2 == 0:
        x[N // 2] = 0.0
    w = 2.0 / (N * (N + 1) * _legendre(N, x) ** 2)
    w = 0.5 * (w + w[::-1])
    return x, w


def barycentric_weights(nodes: np.ndarray) -> np.ndarray:
    """Barycentric weights for Lagrange interpolation on the given nodes."""
    nodes = np.asarray(nodes, dtype=float)
    diff = nodes[:, None] - nodes[None, :]
    np.fill_diagonal(diff, 1.0)
    if np.min(np.abs(diff)) == 0.0:
        raise ValueError("duplicate interpolation nodes")
    return 1.0 / np.prod(diff, axis=1)


def derivative_matrix(nodes: np.ndarray) -> np.ndarray:
    """Nodal polynomial derivative matrix D_ij = l'_j(x_i).

    Assembled from barycentric weights; the diagonal uses the negative-sum
    trick so every row sums to zero exactly up to roundoff.
    """
    nodes = np.asarray(nodes, dtype=float)
    lam = barycentric_weights(nodes)
    n = nodes.size
    D = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if i != j:
                D[i, j] = (lam[j] / lam[i]) / (nodes[i] - nodes[j])
        D[i, i] = -np.sum(D[i, :])
    return D


def interpolate_1d(values: np.ndarray, nodes: np.ndarray, x: float) -> float:
    """Evaluate the Lagrange interpolant of nodal values at a point x.

    Uses the second barycentric formula; exact at the nodes themselves.
    """
    values = np.asarray(values, dtype=float)
    nodes = np.asarray(nodes, dtype=float)
    lam = barycentric_weights(nodes)
    d = x - nodes
    hit = np.nonzero(d == 0.0)[0]
    if hit.size:
        return float(values[hit[0]])
    t = lam / d
    return float(np.dot(t, values) / np.sum(t))


@dataclass(frozen=True)
class Operator1D:
    """Immutable bundle of 1D LGL operators for one polynomial degree.

    Attributes:
        N: polynomial degree.
        nodes: LGL nodes, shape (N+1,).
        weights: LGL quadrature weights, shape (N+1,).
        D: derivative matrix, shape (N+1, N+1).
        Q: SBP matrix diag(weights) @ D.
        B: boundary matrix diag(-1, 0, ..., 0, 1).
    """

    N: int
    nodes: np.ndarray
    weights: np.ndarray
    D: np.ndarray
    Q: np.ndarray
    B: np.ndarray

    @classmethod
    def build(cls, N: int) -> "Operator1D":
        nodes, weights = lgl_nodes_weights(N)
        D = derivative_matrix(nodes)
        Q = np.diag(weights) @ D
        B = np.zeros((N + 1, N + 1))
        B[0, 0], B[N, N] = -1.0, 1.0
        for a in (nodes, weights, D, Q, B):
            a.setflags(write=False)
        return cls(N=N, nodes=nodes, weights=weights, D=D, Q=Q, B=B)

    def interpolation_row(self, x: float) -> np.ndarray:
        """Row vector r with r @ values = interpolant evaluated at x."""
        lam = barycentric_weights(self.nodes)
        d = x - self.nodes
        hit = np.nonzero(d == 0.0)[0]
        r = np.zeros(self.N + 1)
        if hit.size:
            r[hit[0]] = 1.0
            return r
        t = lam / d
        return t / np.sum(t)
