"""Geometric multigrid V-cycle for the implicit-Euler systems.

Solves, for lam = nu * dt_m >= 0,

    (I - lam * L2) u = rhs          (7-point kind), or
    (B - lam * A) u  = B rhs        (compact kind, pair form),

with red-black Gauss-Seidel smoothing for the 7-point system and weighted
Jacobi for the 19-point compact system (red-black two-coloring is invalid
there), full-weighting residual restriction, trilinear correction
interpolation, and re-discretized coarse operators down to a one-unknown
coarsest grid that is solved directly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import grid, kernels
from .errors import SolverDiverged
from .grid import StencilKind, apply_b, spacing

__all__ = ["MgConfig", "SolveReport", "solve_implicit"]


@dataclass(frozen=True)
class MgConfig:
    pre_smooth: int = 2
    post_smooth: int = 2
    max_cycles: int = 50
    tol: float = 1e-12  # relative residual, inf-norm
    coarsest_n: int = 1
    omega_jacobi: float = 0.85

    def __post_init__(self):
        if not self.tol > 0.0:
            raise ValueError("tol must be positive")
        if not grid.is_valid_size(self.coarsest_n):
            raise ValueError(f"coarsest_n must be 2^k - 1, got {self.coarsest_n}")


@dataclass
class SolveReport:
    u: np.ndarray
    cycles: int
    residual: float  # relative inf-norm residual after the last cycle
    history: list[float] = field(default_factory=list)
    converged: bool = True


def _coeffs(lam: float, n: int, kind: StencilKind) -> tuple[float, float, float]:
    """(center, face, edge) weights of the system operator at grid size n."""
    h2 = spacing(n) ** 2
    if kind is StencilKind.SECOND_ORDER_7PT:
        return 1.0 + 6.0 * lam / h2, -lam / h2, 0.0
    return 0.5 + 4.0 * lam / h2, 1.0 / 12.0 - lam / (3.0 * h2), -lam / (6.0 * h2)


def _apply(u, c0, cf, ce):
    return kernels.apply_stencil(u, c0, cf, ce)


def _smooth(u, b, c0, cf, ce, kind, cfg):
    if kind is StencilKind.SECOND_ORDER_7PT:
        kernels.gauss_seidel_color(u, b, c0, cf, 0)
        kernels.gauss_seidel_color(u, b, c0, cf, 1)
    else:
        u += (cfg.omega_jacobi / c0) * (b - _apply(u, c0, cf, ce))


def _direct_solve(b: np.ndarray, c0: float, cf: float, ce: float) -> np.ndarray:
    n = b.shape[0]
    if n == 1:
        return b / c0
    # Tiny coarsest grids (n = 3 at most in practice): assemble densely.
    size = n**3
    mat = np.empty((size, size))
    basis = np.zeros((n, n, n))
    for j in range(size):
        basis.flat[j] = 1.0
        mat[:, j] = _apply(basis, c0, cf, ce).ravel()
        basis.flat[j] = 0.0
    return np.linalg.solve(mat, b.ravel()).reshape(b.shape)


def _vcycle(u, b, lam, kind, cfg: MgConfig):
    n = u.shape[0]
    c0, cf, ce = _coeffs(lam, n, kind)
    if n <= cfg.coarsest_n:
        u[...] = _direct_solve(b, c0, cf, ce)
        return

    for _ in range(cfg.pre_smooth):
        _smooth(u, b, c0, cf, ce, kind, cfg)

    residual = b - _apply(u, c0, cf, ce)
    coarse_b = kernels.full_weighting(residual)
    coarse_u = np.zeros_like(coarse_b)
    _vcycle(coarse_u, coarse_b, lam, kind, cfg)
    u += kernels.interpolate_trilinear(coarse_u)

    for _ in range(cfg.post_smooth):
        _smooth(u, b, c0, cf, ce, kind, cfg)


def solve_implicit(
    lam: float,
    rhs: np.ndarray,
    kind: StencilKind,
    cfg: MgConfig | None = None,
) -> SolveReport:
    """Solve the implicit-Euler system for the given stencil kind.

    Returns the solution together with the number of V-cycles used and the
    final relative residual; raises SolverDiverged when the residual grows
    over three consecutive cycles.
    """
    if lam < 0.0:
        raise ValueError(f"lam must be non-negative, got {lam}")
    cfg = cfg or MgConfig()

    n = rhs.shape[0]
    if not grid.is_valid_size(n):
        raise ValueError(f"grid size must be 2^k - 1, got {n}")
    b = rhs if kind is StencilKind.SECOND_ORDER_7PT else apply_b(rhs)
    bnorm = float(np.abs(b).max())
    if not np.isfinite(bnorm):
        raise ValueError("right-hand side contains non-finite values")
    if bnorm == 0.0:
        return SolveReport(u=np.zeros_like(rhs), cycles=0, residual=0.0)

    c0, cf, ce = _coeffs(lam, n, kind)
    u = np.zeros_like(rhs)
    history: list[float] = []
    growth_streak = 0
    prev = np.inf
    for cycle in range(1, cfg.max_cycles + 1):
        _vcycle(u, b, lam, kind, cfg)
        res = float(np.abs(b - _apply(u, c0, cf, ce)).max() / bnorm)
        history.append(res)
        growth_streak = growth_streak + 1 if res > prev else 0
        if growth_streak >= 3:
            raise SolverDiverged(
                f"residual grew over 3 cycles (kind={kind.value}, lam={lam}, n={n}): "
                f"history={history}"
            )
        prev = res
        if res <= cfg.tol:
            return SolveReport(u=u, cycles=cycle, residual=res, history=history)
    return SolveReport(
        u=u, cycles=cfg.max_cycles, residual=history[-1], history=history, converged=False
    )
