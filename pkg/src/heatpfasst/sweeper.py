"""Single-level IMEX spectral deferred corrections.

One sweep applies the IMEX-Euler corrector over the collocation nodes,

    U_{m+1}^{k+1} = U_m^{k+1}
                  + dtau_m [ fE(U_m^{k+1}, t_m) - fE(U_m^k, t_m) ]
                  + dtau_m [ fI(U_{m+1}^{k+1}, t_{m+1}) - fI(U_{m+1}^k, t_{m+1}) ]
                  + dt * sum_i smat[m, i] (fE + fI)(U_i^k, t_i),

so each node update costs one implicit solve (I - dtau_m fI) U = rhs, done by
the multigrid module (the compact kind in pair form). The iteration converges
to the collocation solution; the residual measures the defect of the
collocation system, relative to ||U_0||_inf with an absolute fallback when the
initial value vanishes.

The explicit difference term is identically zero for a source that depends on
t only, but the code path is kept for general fE(u, t).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import pmg
from .heat import LevelProblem
from .perfmodel import TimingRecord
from .pmg import MgConfig
from .quadrature import CollocationSet, build_collocation, lobatto_nodes

__all__ = ["SweepState", "StepResult", "spread_initial", "sweep", "residual", "sdc_step"]


class _NullTimer:
    def __enter__(self):
        return self

    def __exit__(self, *exc):
        return False


_NULL_TIMER = _NullTimer()


@dataclass
class SweepState:
    colloc: CollocationSet
    U: list[np.ndarray]  # one field per node; U[0] is the step's initial value
    FE: list[np.ndarray]  # cached explicit right-hand sides at the nodes
    FI: list[np.ndarray]  # cached implicit right-hand sides at the nodes
    k: int = 0  # sweeps performed on this state


@dataclass
class StepResult:
    u_end: np.ndarray
    iterations: int
    residual: float
    converged: bool
    state: SweepState | None = None


def spread_initial(u0: np.ndarray, colloc: CollocationSet, ops: LevelProblem) -> SweepState:
    """Initialize all node values with u0 and evaluate the caches."""
    fi0 = ops.f_implicit(u0)
    return SweepState(
        colloc=colloc,
        U=[u0.copy() for _ in range(colloc.num_nodes)],
        FE=[ops.f_explicit(u0, t) for t in colloc.nodes],
        FI=[fi0] * colloc.num_nodes,
    )


def refresh_caches(state: SweepState, ops: LevelProblem) -> None:
    state.FE = [ops.f_explicit(u, t) for u, t in zip(state.U, state.colloc.nodes)]
    state.FI = [ops.f_implicit(u) for u in state.U]


def refresh_node0(state: SweepState, ops: LevelProblem) -> None:
    state.FE[0] = ops.f_explicit(state.U[0], state.colloc.nodes[0])
    state.FI[0] = ops.f_implicit(state.U[0])


def _s_terms(state: SweepState, tau: list[np.ndarray] | None) -> list[np.ndarray]:
    """dt * S-quadrature of fE + fI over the previous iterate, plus tau if given."""
    colloc = state.colloc
    f_vals = [fe + fi for fe, fi in zip(state.FE, state.FI)]
    terms = []
    for m in range(colloc.num_nodes - 1):
        term = colloc.dt * sum(colloc.smat[m, i] * f_vals[i] for i in range(colloc.num_nodes))
        if tau is not None:
            term = term + tau[m]
        terms.append(term)
    return terms


def sweep(
    state: SweepState,
    ops: LevelProblem,
    mg: MgConfig,
    tau: list[np.ndarray] | None = None,
    timing: TimingRecord | None = None,
    phase: str = "fine_sweep",
) -> None:
    """One IMEX sweep over all nodes, in place; caches end up consistent with U."""
    with_timer = timing.measure(phase) if timing is not None else _NULL_TIMER
    with with_timer:
        colloc = state.colloc
        nodes = colloc.nodes
        s_terms = _s_terms(state, tau)

        u_new = [state.U[0]]
        fe_new = [state.FE[0]]
        fi_new = [state.FI[0]]
        for m in range(colloc.num_nodes - 1):
            dtau = colloc.dtau[m]
            rhs = (
                u_new[m]
                + dtau * (fe_new[m] - state.FE[m])
                - dtau * state.FI[m + 1]
                + s_terms[m]
            )
            report = pmg.solve_implicit(ops.problem.nu * dtau, rhs, ops.kind, mg)
            u_new.append(report.u)
            fe_new.append(ops.f_explicit(report.u, nodes[m + 1]))
            fi_new.append(ops.f_implicit(report.u))

        state.U = u_new
        state.FE = fe_new
        state.FI = fi_new
        state.k += 1


def residual(state: SweepState, tau: list[np.ndarray] | None = None) -> float:
    """Defect of the collocation system at the current iterate.

    max over m >= 1 of ||U_0 + dt * (qmat @ f)_m (+ cumulative tau) - U_m||_inf,
    divided by ||U_0||_inf when that is nonzero.
    """
    colloc = state.colloc
    f_vals = [fe + fi for fe, fi in zip(state.FE, state.FI)]
    worst = 0.0
    tau_accum = None
    for m in range(1, colloc.num_nodes):
        integral = colloc.dt * sum(colloc.qmat[m, i] * f_vals[i] for i in range(colloc.num_nodes))
        if tau is not None:
            tau_accum = tau[m - 1] if tau_accum is None else tau_accum + tau[m - 1]
            integral = integral + tau_accum
        defect = state.U[0] + integral - state.U[m]
        worst = max(worst, float(np.abs(defect).max()))
    scale = float(np.abs(state.U[0]).max())
    return worst / scale if scale > 0.0 else worst


def sdc_step(
    u0: np.ndarray,
    t0: float,
    dt: float,
    num_nodes: int,
    ops: LevelProblem,
    tol: float,
    max_iter: int,
    mg: MgConfig | None = None,
    timing: TimingRecord | None = None,
) -> StepResult:
    """Spread, then sweep until the residual drops below tol (at least one sweep)."""
    if not tol > 0.0:
        raise ValueError("tol must be positive")
    mg = mg or MgConfig()
    colloc = build_collocation(lobatto_nodes(num_nodes, t0, t0 + dt))
    state = spread_initial(u0, colloc, ops)
    res = np.inf
    for k in range(1, max_iter + 1):
        sweep(state, ops, mg, timing=timing)
        res = residual(state)
        if res <= tol:
            return StepResult(state.U[-1], k, res, True, state)
    return StepResult(state.U[-1], max_iter, res, False, state)

