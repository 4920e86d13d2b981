"""3D structured-grid fields and spatial operators.

A field is a plain ndarray of shape (n, n, n) holding the interior values of a
grid function on the unit cube with homogeneous Dirichlet boundary; the zero
boundary layer is implied, never stored, and the spacing is h = 1/(n+1).
Grid sizes are restricted to n = 2^k - 1 so that nested grids share points.

Two discrete Laplacians are provided: the classical 7-point stencil and the
4th-order 19-point compact (Mehrstellen) pair (A, B) with A u = B (Lap u).
Applying the compact operator therefore means solving B w = A u; B is a
constant-coefficient 7-point stencil with Dirichlet closure and is inverted
exactly in the discrete sine basis (DST-I), see _solve_b.
"""

from __future__ import annotations

from enum import Enum
from functools import lru_cache

import numpy as np
from scipy.fft import dstn, idstn

from . import kernels

__all__ = [
    "StencilKind",
    "spacing",
    "is_valid_size",
    "apply_laplacian",
    "restrict",
    "interpolate",
]


class StencilKind(Enum):
    SECOND_ORDER_7PT = "second2"
    FOURTH_ORDER_COMPACT = "compact4"


def spacing(n: int) -> float:
    return 1.0 / (n + 1)


def is_valid_size(n: int) -> bool:
    """True for n = 2^k - 1, the sizes whose coarsenings share grid points."""
    return n >= 1 and (n + 1) & n == 0


def _require_field(u: np.ndarray) -> int:
    if u.ndim != 3 or len(set(u.shape)) != 1:
        raise ValueError(f"expected a cubic (n, n, n) field, got shape {u.shape}")
    return u.shape[0]


def laplacian_7pt(u: np.ndarray) -> np.ndarray:
    n = _require_field(u)
    h2 = spacing(n) ** 2
    return kernels.apply_stencil(u, -6.0 / h2, 1.0 / h2, 0.0)


def apply_a(u: np.ndarray) -> np.ndarray:
    """19-point compact stencil A: center -24, faces +2, edges +1, over 6h^2."""
    n = _require_field(u)
    h2 = spacing(n) ** 2
    return kernels.apply_stencil(u, -4.0 / h2, 1.0 / (3.0 * h2), 1.0 / (6.0 * h2))


def apply_b(u: np.ndarray) -> np.ndarray:
    """Weighting operator B: center 1/2, face neighbours 1/12."""
    _require_field(u)
    return kernels.apply_stencil(u, 0.5, 1.0 / 12.0, 0.0)


@lru_cache(maxsize=None)
def _b_eigenvalues(n: int) -> np.ndarray:
    """Eigenvalues of B on the discrete sine basis, indexed by wavenumber triple."""
    c = np.cos(np.pi * spacing(n) * np.arange(1, n + 1))
    eig = 0.5 + (c[:, None, None] + c[None, :, None] + c[None, None, :]) / 6.0
    eig.flags.writeable = False
    return eig


def _solve_b(rhs: np.ndarray) -> np.ndarray:
    """Solve B w = rhs exactly via DST-I diagonalization."""
    n = rhs.shape[0]
    return idstn(dstn(rhs, type=1) / _b_eigenvalues(n), type=1)


def apply_laplacian(u: np.ndarray, kind: StencilKind) -> np.ndarray:
    """Discrete Laplacian of a field with zero Dirichlet closure."""
    if kind is StencilKind.SECOND_ORDER_7PT:
        return laplacian_7pt(u)
    if kind is StencilKind.FOURTH_ORDER_COMPACT:
        return _solve_b(apply_a(u))
    raise ValueError(f"unknown stencil kind: {kind!r}")


def restrict(fine: np.ndarray) -> np.ndarray:
    """Injection onto the nested coarse grid: coarse (I,J,K) = fine (2I+1, 2J+1, 2K+1)."""
    nf = _require_field(fine)
    nc = (nf - 1) // 2
    if nc < 1 or nf != 2 * nc + 1:
        raise ValueError(f"fine size {nf} has no nested coarse grid")
    return fine[1::2, 1::2, 1::2].copy()


def interpolate(coarse: np.ndarray) -> np.ndarray:
    """Trilinear interpolation onto the nested fine grid; zero boundary values.

    Exact at coincident points, so restrict(interpolate(c)) == c identically.
    """
    _require_field(coarse)
    return kernels.interpolate_trilinear(coarse)
