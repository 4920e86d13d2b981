"""Two-level space-time hierarchy: restriction, FAS correction, MLSDC.

The coarse level uses fewer collocation nodes (nested in the fine set), a
coarser grid (injection restriction, trilinear interpolation) and possibly a
lower-order stencil. The FAS correction makes the coarse collocation problem
consistent with the fine one: on each coarse node interval m,

    tau_m = R_space( sum of fine node-to-node integrals spanned by interval m )
          - dt * sum_i smat_c[m, i] * F_c(restricted U_i),

and tau is added to the coarse sweep's quadrature term. At the fine
collocation solution the restricted state then solves the coarse problem,
which is what makes coarse sweeps useful corrections.

Identical fine/coarse levels are supported (spatial transfers degenerate to
copies), in which case tau vanishes to rounding.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import grid, sweeper
from .errors import UnsupportedConfiguration
from .heat import HeatProblem, LevelProblem
from .perfmodel import TimingRecord
from .pmg import MgConfig
from .quadrature import (
    CollocationSet,
    build_collocation,
    coincident_indices,
    lobatto_nodes,
    time_interp_matrix,
)
from .sweeper import StepResult, SweepState

__all__ = [
    "Level",
    "TwoLevelHierarchy",
    "make_hierarchy",
    "restrict_state",
    "fas_correction",
    "restrict_and_fas",
    "spatial_restrict",
    "coarse_correction",
    "mlsdc_iteration",
    "mlsdc_step",
]


@dataclass
class Level:
    index: int  # 0 = fine, 1 = coarse
    n: int
    ops: LevelProblem
    colloc: CollocationSet
    mg: MgConfig
    state: SweepState | None = None
    tau: list[np.ndarray] | None = None  # coarse level only


@dataclass
class TwoLevelHierarchy:
    fine: Level
    coarse: Level
    tmat: np.ndarray  # time interpolation, fine nodes x coarse nodes
    node_map: list[int]  # coarse node index -> coincident fine node index
    n_coarse_sweeps: int = 1
    coarse_old: list[np.ndarray] | None = None  # coarse U saved at restriction


def make_hierarchy(
    problem: HeatProblem,
    t0: float,
    dt: float,
    n_fine: int,
    n_coarse: int,
    nodes_fine: int,
    nodes_coarse: int,
    kind_fine: grid.StencilKind,
    kind_coarse: grid.StencilKind,
    mg: MgConfig | None = None,
    n_coarse_sweeps: int = 1,
) -> TwoLevelHierarchy:
    if not (n_coarse == n_fine or n_fine == 2 * n_coarse + 1):
        raise UnsupportedConfiguration(
            f"grids not nested: fine n={n_fine}, coarse n={n_coarse}"
        )
    mg = mg or MgConfig()
    fine_colloc = build_collocation(lobatto_nodes(nodes_fine, t0, t0 + dt))
    coarse_colloc = build_collocation(lobatto_nodes(nodes_coarse, t0, t0 + dt))
    fine = Level(0, n_fine, LevelProblem(problem, n_fine, kind_fine), fine_colloc, mg)
    coarse = Level(1, n_coarse, LevelProblem(problem, n_coarse, kind_coarse), coarse_colloc, mg)
    return TwoLevelHierarchy(
        fine=fine,
        coarse=coarse,
        tmat=time_interp_matrix(coarse_colloc.nodes, fine_colloc.nodes),
        node_map=coincident_indices(coarse_colloc.nodes, fine_colloc.nodes),
        n_coarse_sweeps=n_coarse_sweeps,
    )


def spatial_restrict(h: TwoLevelHierarchy, u: np.ndarray) -> np.ndarray:
    return u.copy() if h.fine.n == h.coarse.n else grid.restrict(u)


def _interp_space(h: TwoLevelHierarchy, u: np.ndarray) -> np.ndarray:
    return u.copy() if h.fine.n == h.coarse.n else grid.interpolate(u)


def restrict_state(h: TwoLevelHierarchy) -> None:
    """Coarse node values by spatial injection at the coincident time nodes.

    Coarse caches are re-evaluated with the coarse stencil and forcing (not
    restricted), as required when the levels differ in discretization order.
    """
    fine, coarse = h.fine, h.coarse
    u_coarse = [spatial_restrict(h, fine.state.U[j]) for j in h.node_map]
    coarse.state = SweepState(
        colloc=coarse.colloc,
        U=u_coarse,
        FE=[coarse.ops.f_explicit(u, t) for u, t in zip(u_coarse, coarse.colloc.nodes)],
        FI=[coarse.ops.f_implicit(u) for u in u_coarse],
        k=fine.state.k,
    )
    h.coarse_old = [u.copy() for u in u_coarse]


def fas_correction(h: TwoLevelHierarchy) -> list[np.ndarray]:
    """FAS tau fields, one per coarse node interval (restricted state required)."""
    fine, coarse = h.fine, h.coarse
    dt = fine.colloc.dt

    f_fine = [fe + fi for fe, fi in zip(fine.state.FE, fine.state.FI)]
    f_coarse = [fe + fi for fe, fi in zip(coarse.state.FE, coarse.state.FI)]

    nf = fine.colloc.num_nodes
    fine_integrals = [
        dt * sum(fine.colloc.smat[m, i] * f_fine[i] for i in range(nf))
        for m in range(nf - 1)
    ]

    tau = []
    nc = coarse.colloc.num_nodes
    for m in range(nc - 1):
        # Fine node-to-node integrals summed between consecutive coarse nodes.
        aggregated = sum(fine_integrals[h.node_map[m]: h.node_map[m + 1]])
        coarse_integral = dt * sum(coarse.colloc.smat[m, i] * f_coarse[i] for i in range(nc))
        tau.append(spatial_restrict(h, aggregated) - coarse_integral)
    h.coarse.tau = tau
    return tau


def restrict_and_fas(h: TwoLevelHierarchy, timing: TimingRecord | None = None) -> None:
    if timing is not None:
        with timing.measure("restrict_fas"):
            restrict_state(h)
            fas_correction(h)
    else:
        restrict_state(h)
        fas_correction(h)


def coarse_correction(h: TwoLevelHierarchy, timing: TimingRecord | None = None) -> None:
    """Add the interpolated coarse increment to every fine node and refresh caches."""
    if timing is not None:
        with timing.measure("interpolate"):
            _coarse_correction(h)
    else:
        _coarse_correction(h)


def _coarse_correction(h: TwoLevelHierarchy) -> None:
    fine, coarse = h.fine, h.coarse
    if h.coarse_old is None:
        raise RuntimeError("coarse_correction requires a preceding restriction")
    delta = [u - u_old for u, u_old in zip(coarse.state.U, h.coarse_old)]
    nc = coarse.colloc.num_nodes
    for m in range(fine.colloc.num_nodes):
        combined = sum(h.tmat[m, i] * delta[i] for i in range(nc))
        fine.state.U[m] = fine.state.U[m] + _interp_space(h, combined)
    sweeper.refresh_caches(fine.state, fine.ops)


def mlsdc_iteration(h: TwoLevelHierarchy, timing: TimingRecord | None = None) -> float:
    """Fine sweep, restrict + FAS, coarse sweep(s), coarse correction; returns fine residual."""
    sweeper.sweep(h.fine.state, h.fine.ops, h.fine.mg, timing=timing, phase="fine_sweep")
    restrict_and_fas(h, timing)
    for _ in range(h.n_coarse_sweeps):
        sweeper.sweep(
            h.coarse.state, h.coarse.ops, h.coarse.mg,
            tau=h.coarse.tau, timing=timing, phase="coarse_sweep",
        )
    coarse_correction(h, timing)
    return sweeper.residual(h.fine.state)


def predictor_pass(h: TwoLevelHierarchy, timing: TimingRecord | None = None) -> None:
    """Serial burn-in: restrict + FAS, one coarse sweep, interpolate back."""
    restrict_and_fas(h, timing)
    sweeper.sweep(
        h.coarse.state, h.coarse.ops, h.coarse.mg,
        tau=h.coarse.tau, timing=timing, phase="coarse_sweep",
    )
    coarse_correction(h, timing)


def mlsdc_step(
    u0: np.ndarray,
    h: TwoLevelHierarchy,
    tol: float,
    max_iter: int,
    timing: TimingRecord | None = None,
) -> StepResult:
    """One serial MLSDC time step on a freshly-built hierarchy."""
    if not tol > 0.0:
        raise ValueError("tol must be positive")
    h.fine.state = sweeper.spread_initial(u0, h.fine.colloc, h.fine.ops)
    predictor_pass(h, timing)
    res = np.inf
    for k in range(1, max_iter + 1):
        res = mlsdc_iteration(h, timing)
        if res <= tol:
            return StepResult(h.fine.state.U[-1], k, res, True, h.fine.state)
    return StepResult(h.fine.state.U[-1], max_iter, res, False, h.fine.state)
