"""Run configurations and the three simulation drivers (sdc | mlsdc | pfasst).

All modes integrate the forced heat problem from t=0 to t_end in fixed steps,
starting from the reference profile at t=0, and record per step: iterations
to tolerance, the final residual, and the relative max error against the
reference solution at the step end. The pfasst driver executes consecutive
blocks of `ranks` steps serially, passing the last rank's end value to the
next block.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from pathlib import Path

from . import heat, hierarchy, pfasst, sweeper
from .grid import StencilKind, is_valid_size
from .heat import ForcingMode, HeatProblem, LevelProblem
from .perfmodel import SpeedupParams, TimingRecord, measure_alpha, measure_beta, model_speedup
from .pmg import MgConfig

__all__ = ["RunConfig", "StepRecord", "SimulationResult", "run_simulation", "measure_k_serial",
           "CURVE_RANKS"]

CURVE_RANKS = (1, 2, 4, 8, 16, 32)


@dataclass
class RunConfig:
    mode: str = "sdc"
    n_fine: int = 31
    n_coarse: int = 15
    nodes_fine: int = 5
    nodes_coarse: int = 3
    dt: float = 0.1875
    t_end: float = 6.0
    nu: float = 0.1
    tol: float = 1e-10
    ranks: int = 1
    forcing: ForcingMode = ForcingMode.CORRECTED
    kind_fine: StencilKind = StencilKind.FOURTH_ORDER_COMPACT
    kind_coarse: StencilKind = StencilKind.SECOND_ORDER_7PT
    backend: str = "sequential"
    out: Path = Path("out")
    max_iter: int = 100
    seed: int | None = None  # reserved; the numerics consume no randomness
    figures: bool = True

    def validate(self) -> None:
        if self.mode not in ("sdc", "mlsdc", "pfasst"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if not (self.dt > 0.0 and self.t_end > 0.0 and self.tol > 0.0 and self.nu > 0.0):
            raise ValueError("dt, tend, tol and nu must be positive")
        steps = self.t_end / self.dt
        if abs(steps - round(steps)) > 1e-9 or round(steps) < 1:
            raise ValueError(f"tend/dt = {steps} is not a whole number of steps")
        if self.nodes_fine < 2 or self.nodes_coarse < 2:
            raise ValueError("need at least 2 collocation nodes per level")
        if not is_valid_size(self.n_fine) or not is_valid_size(self.n_coarse):
            raise ValueError("grid sizes must be of the form 2^k - 1")
        if not (self.n_coarse == self.n_fine or self.n_fine == 2 * self.n_coarse + 1):
            raise ValueError(f"grids not nested: {self.n_fine}/{self.n_coarse}")
        if self.num_steps() % self.ranks != 0:
            raise ValueError(f"{self.num_steps()} steps not divisible by {self.ranks} ranks")
        if self.backend not in ("sequential", "concurrent"):
            raise ValueError(f"unknown backend {self.backend!r}")

    def num_steps(self) -> int:
        return int(round(self.t_end / self.dt))

    def problem(self) -> HeatProblem:
        return HeatProblem(nu=self.nu, forcing=self.forcing)


@dataclass
class StepRecord:
    step: int
    iterations: int
    residual: float
    rel_max_error: float


@dataclass
class SimulationResult:
    mode: str
    ranks: int
    steps: list[StepRecord]
    k: int  # max iterations over the steps (K_S or K_P)
    alpha: float
    beta: float
    total_seconds: float
    timing: TimingRecord
    converged: bool
    k_serial: int | None = None  # filled by the reporting layer when probed

    @property
    def error_at_end(self) -> float:
        return self.steps[-1].rel_max_error

    def model_curve(self, k_serial: float | None = None) -> list[tuple[int, float]]:
        """Speedup-model curve over CURVE_RANKS from this run's measurements."""
        ks = k_serial if k_serial is not None else (self.k_serial or self.k)
        return [
            (p, model_speedup(SpeedupParams(ks, self.k, self.alpha, self.beta, p)))
            for p in CURVE_RANKS
        ]


def _alpha_beta(timing: TimingRecord) -> tuple[float, float]:
    try:
        return measure_alpha(timing), measure_beta(timing)
    except ValueError:
        return 0.0, 0.0


def _run_sdc(cfg: RunConfig) -> SimulationResult:
    ops = LevelProblem(cfg.problem(), cfg.n_fine, cfg.kind_fine)
    timing = TimingRecord()
    records: list[StepRecord] = []
    converged = True
    u = heat.exact_solution(0.0, cfg.n_fine)

    start = time.perf_counter()
    for s in range(cfg.num_steps()):
        result = sweeper.sdc_step(
            u, s * cfg.dt, cfg.dt, cfg.nodes_fine, ops, cfg.tol, cfg.max_iter,
            MgConfig(), timing,
        )
        u = result.u_end
        converged = converged and result.converged
        records.append(StepRecord(
            s, result.iterations, result.residual,
            heat.rel_max_error(u, (s + 1) * cfg.dt),
        ))
    total = time.perf_counter() - start

    alpha, beta = _alpha_beta(timing)
    return SimulationResult("sdc", 1, records, max(r.iterations for r in records),
                            alpha, beta, total, timing, converged)


def _make_hierarchy(cfg: RunConfig, t0: float) -> hierarchy.TwoLevelHierarchy:
    return hierarchy.make_hierarchy(
        cfg.problem(), t0, cfg.dt,
        cfg.n_fine, cfg.n_coarse, cfg.nodes_fine, cfg.nodes_coarse,
        cfg.kind_fine, cfg.kind_coarse, MgConfig(),
    )


def _run_mlsdc(cfg: RunConfig) -> SimulationResult:
    timing = TimingRecord()
    records: list[StepRecord] = []
    converged = True
    u = heat.exact_solution(0.0, cfg.n_fine)

    start = time.perf_counter()
    for s in range(cfg.num_steps()):
        h = _make_hierarchy(cfg, s * cfg.dt)
        result = hierarchy.mlsdc_step(u, h, cfg.tol, cfg.max_iter, timing)
        u = result.u_end
        converged = converged and result.converged
        records.append(StepRecord(
            s, result.iterations, result.residual,
            heat.rel_max_error(u, (s + 1) * cfg.dt),
        ))
    total = time.perf_counter() - start

    alpha, beta = _alpha_beta(timing)
    return SimulationResult("mlsdc", 1, records, max(r.iterations for r in records),
                            alpha, beta, total, timing, converged)


def _run_pfasst(cfg: RunConfig) -> SimulationResult:
    schedule = pfasst.BlockSchedule(cfg.num_steps(), cfg.ranks)
    timing = TimingRecord()
    records: list[StepRecord] = []
    converged = True
    u = heat.exact_solution(0.0, cfg.n_fine)

    start = time.perf_counter()
    for b in range(schedule.num_blocks):
        base = b * cfg.ranks
        block = pfasst.run_block(
            lambda p: _make_hierarchy(cfg, (base + p) * cfg.dt),
            u, cfg.ranks, cfg.tol, cfg.max_iter, cfg.backend,
        )
        converged = converged and block.converged
        for p in range(cfg.ranks):
            step = base + p
            records.append(StepRecord(
                step, block.iterations, block.residuals[p],
                heat.rel_max_error(block.u_end[p], (step + 1) * cfg.dt),
            ))
        u = block.u_end[-1]
        for rank_timing in block.timings:
            timing.merge(rank_timing)
    total = time.perf_counter() - start

    alpha, beta = _alpha_beta(timing)
    return SimulationResult("pfasst", cfg.ranks, records, max(r.iterations for r in records),
                            alpha, beta, total, timing, converged)


def run_simulation(cfg: RunConfig) -> SimulationResult:
    cfg.validate()
    runner = {"sdc": _run_sdc, "mlsdc": _run_mlsdc, "pfasst": _run_pfasst}[cfg.mode]
    return runner(cfg)


def measure_k_serial(cfg: RunConfig) -> int:
    """Sweep count of one serial SDC step at this configuration (K_S probe)."""
    ops = LevelProblem(cfg.problem(), cfg.n_fine, cfg.kind_fine)
    u0 = heat.exact_solution(0.0, cfg.n_fine)
    result = sweeper.sdc_step(u0, 0.0, cfg.dt, cfg.nodes_fine, ops, cfg.tol, cfg.max_iter)
    return result.iterations
