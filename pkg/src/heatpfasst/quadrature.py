"""Gauss-Lobatto nodes and the collocation integration matrices.

A collocation set on one time step ``[t0, t1]`` holds the nodes and two
dimensionless weight matrices:

* ``qmat[m, i]`` approximates ``int_{t0}^{t_m} l_i(s) ds / (t1 - t0)`` where
  ``l_i`` is the Lagrange basis on the nodes, so ``(t1 - t0) * qmat @ f``
  gives the node integrals of the interpolant of ``f``.
* ``smat[m, i] = qmat[m+1, i] - qmat[m, i]`` are the node-to-node weights
  consumed by the sweeper's quadrature term.

Both matrices are built by analytic integration of the monomial expansion of
the Lagrange basis (a small Vandermonde solve in centered [-1, 1] reference
coordinates), which is exact to rounding for the node counts used here (<= 9).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import UnsupportedConfiguration

__all__ = [
    "CollocationSet",
    "lobatto_nodes",
    "build_collocation",
    "time_interp_matrix",
    "coincident_indices",
]

#: Absolute tolerance for the Newton iteration locating interior Lobatto nodes.
NODE_TOL = 1e-14

#: Tolerance for deciding that a coarse node coincides with a fine node.
COINCIDENCE_TOL = 1e-12


def _legendre_pair(degree: int, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Evaluate (P_degree, P_{degree-1}) by the Bonnet recurrence."""
    p_prev = np.ones_like(x)
    p = np.asarray(x, dtype=float).copy()
    for k in range(1, degree):
        p, p_prev = ((2 * k + 1) * x * p - k * p_prev) / (k + 1), p
    return p, p_prev


def _dlegendre(degree: int, x: np.ndarray) -> np.ndarray:
    """P'_degree(x) for |x| < 1."""
    p, p_prev = _legendre_pair(degree, x)
    return degree * (x * p - p_prev) / (x * x - 1.0)


def _d2legendre(degree: int, x: np.ndarray) -> np.ndarray:
    """P''_degree(x) for |x| < 1, from the Legendre differential equation."""
    p, _ = _legendre_pair(degree, x)
    dp = _dlegendre(degree, x)
    return (2.0 * x * dp - degree * (degree + 1) * p) / (1.0 - x * x)


def _interior_reference_nodes(num_nodes: int) -> np.ndarray:
    """Interior Lobatto points on [-1, 1]: the roots of P'_{num_nodes-1}.

    Brackets come from a sign scan of P' on a dense grid; each root is then
    polished by Newton iteration with bisection safeguarding to NODE_TOL.
    """
    degree = num_nodes - 1
    n_int = num_nodes - 2
    if n_int == 0:
        return np.empty(0)

    xs = np.cos(np.linspace(np.pi, 0.0, 80 * num_nodes)[1:-1])
    gs = _dlegendre(degree, xs)
    sign_flip = np.nonzero(np.sign(gs[:-1]) * np.sign(gs[1:]) < 0)[0]
    if len(sign_flip) != n_int:
        raise RuntimeError(f"expected {n_int} interior nodes, bracketed {len(sign_flip)}")

    roots = np.empty(n_int)
    for j, i in enumerate(sign_flip):
        lo, hi = xs[i], xs[i + 1]
        glo = gs[i]
        x = 0.5 * (lo + hi)
        for _ in range(100):
            g = _dlegendre(degree, np.array(x))
            dg = _d2legendre(degree, np.array(x))
            step = g / dg if dg != 0.0 else np.inf
            x_new = x - step
            if not (lo < x_new < hi):
                # Newton left the bracket: fall back to bisection.
                if np.sign(g) == np.sign(glo):
                    lo = x
                else:
                    hi = x
                x_new = 0.5 * (lo + hi)
            if abs(x_new - x) <= NODE_TOL:
                x = x_new
                break
            if np.sign(g) == np.sign(glo):
                lo = x
            else:
                hi = x
            x = x_new
        roots[j] = x

    roots.sort()
    # The node set is symmetric about 0; enforce it exactly so that nested
    # node families (e.g. 3 inside 5) coincide bitwise after mapping.
    return 0.5 * (roots - roots[::-1])


def lobatto_nodes(num_nodes: int, t0: float, t1: float) -> np.ndarray:
    """Gauss-Lobatto points of the given count mapped affinely to [t0, t1].

    Endpoints are included and exact; interior points are the roots of the
    derivative of the Legendre polynomial of degree ``num_nodes - 1``.
    """
    if num_nodes < 2:
        raise ValueError(f"need at least 2 nodes, got {num_nodes}")
    if not t1 > t0:
        raise ValueError(f"empty interval: t0={t0}, t1={t1}")
    ref = np.concatenate(([-1.0], _interior_reference_nodes(num_nodes), [1.0]))
    nodes = t0 + 0.5 * (ref + 1.0) * (t1 - t0)
    nodes[0] = t0
    nodes[-1] = t1
    return nodes


@dataclass(frozen=True)
class CollocationSet:
    """Nodes and quadrature matrices on one time step."""

    nodes: np.ndarray  # strictly increasing, endpoints included
    qmat: np.ndarray  # (M+1, M+1) dimensionless 0-to-node weights
    smat: np.ndarray  # (M, M+1) node-to-node weights, rows of qmat differenced
    dtau: np.ndarray  # (M,) substep lengths t_{m+1} - t_m

    @property
    def num_nodes(self) -> int:
        return len(self.nodes)

    @property
    def t0(self) -> float:
        return float(self.nodes[0])

    @property
    def dt(self) -> float:
        return float(self.nodes[-1] - self.nodes[0])


def build_collocation(nodes: np.ndarray) -> CollocationSet:
    """Build the Q/S matrices for the given nodes by exact Lagrange integration."""
    nodes = np.asarray(nodes, dtype=float)
    if nodes.ndim != 1 or len(nodes) < 2:
        raise ValueError("need a 1-d array of at least two nodes")
    if np.any(np.diff(nodes) <= 0.0):
        raise ValueError("nodes must be strictly increasing (duplicates not allowed)")

    nn = len(nodes)
    # Centered reference coordinates keep the Vandermonde solve accurate to
    # ~1e-15 for up to 9 nodes; one refinement pass sharpens the inverse.
    sigma = 2.0 * (nodes - nodes[0]) / (nodes[-1] - nodes[0]) - 1.0
    vander = np.vander(sigma, N=nn, increasing=True)
    coef = np.linalg.solve(vander, np.eye(nn))  # column i: monomial coefs of l_i
    coef += np.linalg.solve(vander, np.eye(nn) - vander @ coef)
    exps = np.arange(1, nn + 1)
    momenta = (sigma[:, None] ** exps - (-1.0) ** exps) / exps  # int_{-1}^sigma_m s^k ds
    qmat = (momenta @ coef) / 2.0
    qmat[0, :] = 0.0

    colloc = CollocationSet(
        nodes=nodes.copy(),
        qmat=qmat,
        smat=np.diff(qmat, axis=0),
        dtau=np.diff(nodes),
    )
    for arr in (colloc.nodes, colloc.qmat, colloc.smat, colloc.dtau):
        arr.flags.writeable = False
    return colloc


def coincident_indices(coarse_nodes: np.ndarray, fine_nodes: np.ndarray) -> list[int]:
    """Index of the fine node each coarse node coincides with.

    Raises UnsupportedConfiguration when a coarse node is not present in the
    fine set within COINCIDENCE_TOL (relative to the interval length).
    """
    coarse_nodes = np.asarray(coarse_nodes, dtype=float)
    fine_nodes = np.asarray(fine_nodes, dtype=float)
    scale = max(1.0, float(fine_nodes[-1] - fine_nodes[0]))
    indices = []
    for tc in coarse_nodes:
        hits = np.nonzero(np.abs(fine_nodes - tc) <= COINCIDENCE_TOL * scale)[0]
        if len(hits) != 1:
            raise UnsupportedConfiguration(
                f"coarse node {tc!r} is not nested in the fine node set"
            )
        indices.append(int(hits[0]))
    return indices


def time_interp_matrix(coarse_nodes: np.ndarray, fine_nodes: np.ndarray) -> np.ndarray:
    """Lagrange interpolation matrix mapping coarse-node values to fine nodes.

    Restriction in time is pointwise injection at the coincident nodes, so the
    coarse set must be nested in the fine set; rows at coincident fine nodes
    are exact unit rows by construction of the product formula.
    """
    coarse_nodes = np.asarray(coarse_nodes, dtype=float)
    fine_nodes = np.asarray(fine_nodes, dtype=float)
    coincident_indices(coarse_nodes, fine_nodes)

    nc = len(coarse_nodes)
    tmat = np.empty((len(fine_nodes), nc))
    for i in range(nc):
        num = np.ones_like(fine_nodes)
        for l in range(nc):
            if l != i:
                num *= (fine_nodes - coarse_nodes[l]) / (coarse_nodes[i] - coarse_nodes[l])
        tmat[:, i] = num
    return tmat
