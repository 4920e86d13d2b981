"""Speedup model, timing instrumentation, and efficiency arithmetic.

The two-level time-parallel speedup over P_T ranks is modeled as

    s(P_T) = K_S * P_T / (P_T * alpha + K_P * (1 + alpha + beta))

with K_S the serial sweep count to tolerance, K_P the parallel iteration
count, alpha the coarse-to-fine sweep runtime ratio, and beta the overhead
(restriction + FAS + interpolation + communication wait) per fine sweep.
Alpha and beta are measured from instrumented runs with monotonic-clock
timers at call granularity; no published values exist for K_S, K_P or beta,
so desk runs substitute their own measurements.
"""

from __future__ import annotations

import time
from contextlib import contextmanager
from dataclasses import dataclass, field

__all__ = [
    "SpeedupParams",
    "TimingRecord",
    "model_speedup",
    "measure_alpha",
    "measure_beta",
    "observed_speedup",
    "efficiency_table",
    "REFERENCE_RUNS",
]

PHASES = ("fine_sweep", "coarse_sweep", "restrict_fas", "interpolate", "comm_wait")


@dataclass(frozen=True)
class SpeedupParams:
    k_serial: float
    k_parallel: float
    alpha: float
    beta: float
    ranks: int

    def __post_init__(self):
        if min(self.k_serial, self.k_parallel, self.alpha, self.beta) < 0:
            raise ValueError("speedup parameters must be non-negative")
        if self.ranks < 1:
            raise ValueError("need at least one time rank")


def model_speedup(p: SpeedupParams) -> float:
    denom = p.ranks * p.alpha + p.k_parallel * (1.0 + p.alpha + p.beta)
    if denom <= 0.0:
        raise ValueError("speedup model denominator is zero")
    return p.k_serial * p.ranks / denom


@dataclass
class TimingRecord:
    """Per-phase accumulated wall time and call counts for one worker."""

    seconds: dict[str, float] = field(default_factory=lambda: {p: 0.0 for p in PHASES})
    counts: dict[str, int] = field(default_factory=lambda: {p: 0 for p in PHASES})

    def add(self, phase: str, elapsed: float) -> None:
        self.seconds[phase] += elapsed
        self.counts[phase] += 1

    @contextmanager
    def measure(self, phase: str):
        start = time.perf_counter()
        try:
            yield self
        finally:
            self.add(phase, time.perf_counter() - start)

    def merge(self, other: "TimingRecord") -> None:
        for phase in PHASES:
            self.seconds[phase] += other.seconds[phase]
            self.counts[phase] += other.counts[phase]

    @staticmethod
    def merged(records: list["TimingRecord"]) -> "TimingRecord":
        total = TimingRecord()
        for rec in records:
            total.merge(rec)
        return total


def measure_alpha(timing: TimingRecord) -> float:
    """Mean coarse-sweep wall time over mean fine-sweep wall time."""
    if timing.counts["fine_sweep"] == 0 or timing.counts["coarse_sweep"] == 0:
        raise ValueError("insufficient data: need at least one fine and one coarse sweep")
    mean_fine = timing.seconds["fine_sweep"] / timing.counts["fine_sweep"]
    mean_coarse = timing.seconds["coarse_sweep"] / timing.counts["coarse_sweep"]
    return mean_coarse / mean_fine


def measure_beta(timing: TimingRecord) -> float:
    """(restriction+FAS + interpolation + communication wait) per unit of fine-sweep time."""
    if timing.seconds["fine_sweep"] <= 0.0:
        raise ValueError("insufficient data: no fine sweeps recorded")
    overhead = (
        timing.seconds["restrict_fas"]
        + timing.seconds["interpolate"]
        + timing.seconds["comm_wait"]
    )
    return overhead / timing.seconds["fine_sweep"]


def observed_speedup(serial_step_seconds: float, steps: int, parallel_seconds: float) -> float:
    """(serial time per step * steps) / total parallel time."""
    if serial_step_seconds <= 0.0 or steps <= 0:
        raise ValueError("serial timing inputs must be positive")
    if parallel_seconds <= 0.0:
        raise ValueError("parallel total time must be positive")
    return serial_step_seconds * steps / parallel_seconds


def efficiency_table(speedups, ranks) -> list[tuple[int, float, float]]:
    """Rows of (ranks, speedup, efficiency in percent)."""
    if len(speedups) != len(ranks):
        raise ValueError("speedups and ranks must have equal length")
    return [(int(p), float(s), 100.0 * float(s) / int(p)) for s, p in zip(speedups, ranks)]


@dataclass(frozen=True)
class ReferenceRun:
    """Published timings of one machine/run pair, for the table-check replay."""

    label: str
    serial_step_seconds: float
    parallel_seconds: float
    steps: int
    ranks: tuple[int, ...]
    speedups: tuple[float, ...]


REFERENCE_RUNS = {
    "ibm-small": ReferenceRun(
        label="IBM Blue Gene/Q, small run (256 cores in space)",
        serial_step_seconds=129.04,
        parallel_seconds=247.61,
        steps=32,
        ranks=(1, 2, 4, 8, 16, 32),
        speedups=(0.97, 1.82, 3.45, 6.18, 9.43, 16.68),
    ),
    "ibm-large": ReferenceRun(
        label="IBM Blue Gene/Q, large run (2048 cores in space)",
        serial_step_seconds=25.73,
        parallel_seconds=74.44,
        steps=32,
        ranks=(1, 2, 4, 8, 16, 32),
        speedups=(0.75, 1.23, 2.24, 4.11, 6.73, 11.06),
    ),
    "cray-small": ReferenceRun(
        label="Cray XE6, small run (128 cores in space)",
        serial_step_seconds=73.42,
        parallel_seconds=132.09,
        steps=32,
        ranks=(1, 2, 4, 8, 16, 32),
        speedups=(0.95, 1.79, 3.36, 6.28, 9.82, 17.72),
    ),
    "cray-large": ReferenceRun(
        label="Cray XE6, large run (512 cores in space)",
        serial_step_seconds=26.88,
        parallel_seconds=76.64,
        steps=32,
        ranks=(1, 2, 4, 8, 16, 32),
        speedups=(0.73, 1.13, 1.89, 3.68, 6.00, 11.22),
    ),
}
