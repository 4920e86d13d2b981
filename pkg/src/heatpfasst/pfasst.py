"""Time-parallel controller: pipelined two-level iterations over a block.

Each of P_T virtual ranks owns one time step of a block and runs the same
iteration; ranks communicate only with their nearest neighbours in time, and
every consumed message is identified by (level, iteration, sender), never by
arrival timing, so results are identical under the sequential round-based
scheduler and under concurrent workers with mailboxes.

Per iteration k, rank p executes, in order:

  1. fine sweep
  2. send the fine end value forward               (send never waits)
  3. restrict + FAS correction (saving the pre-sweep coarse values)
  4. blocking receive of the coarse initial value from rank p-1
     (rank 0 keeps the block initial value)
  5. coarse sweep(s)
  6. send the coarse end value forward             (consumed in step 4)
  7. receive the fine value rank p-1 sent in step 2 into the fine U_0
     (it seeds the *next* fine sweep, combined through step 8)
  8. interpolate the coarse increment onto all fine nodes, refresh caches

The only blocking receive is step 4, on the coarse level. The predictor is a
staged coarse burn-in: in stage q, ranks p >= q sweep the coarse level once
and pass end values forward, so rank p accumulates p+1 sweeps of information
before the first fine sweep; afterwards each rank interpolates its coarse
state to the fine level.

A block converges when every rank's fine residual is at or below tolerance;
ranks keep iterating until then, which preserves the dataflow.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import hierarchy as hmod
from . import sweeper
from .errors import ProtocolViolation
from .hierarchy import TwoLevelHierarchy
from .perfmodel import TimingRecord

__all__ = ["Tag", "Mailbox", "Rank", "BlockSchedule", "BlockResult", "run_block"]

#: Safety net for blocking receives in the concurrent backend, seconds.
RECV_TIMEOUT = 120.0


@dataclass(frozen=True)
class Tag:
    level: str  # "fine" | "coarse" | "predictor"
    iteration: int  # iteration number, or predictor stage
    sender: int


class Mailbox:
    """Keyed single-slot message store shared by the ranks of one block.

    Each (level, iteration, sender) tag is posted at most once and consumed
    exactly once; values are copied on post so messages are immutable. A
    receive on a tag whose sender has terminated without posting it raises
    ProtocolViolation, as does a timeout.
    """

    def __init__(self, timeout: float = RECV_TIMEOUT):
        self._slots: dict[Tag, np.ndarray] = {}
        self._done: set[int] = set()
        self._cond = threading.Condition()
        self._timeout = timeout

    def post(self, tag: Tag, value: np.ndarray) -> None:
        with self._cond:
            if tag in self._slots:
                raise ProtocolViolation(f"duplicate message for {tag}")
            self._slots[tag] = value.copy()
            self._cond.notify_all()

    def collect(self, tag: Tag, blocking: bool = True) -> np.ndarray:
        with self._cond:
            if tag not in self._slots:
                if tag.sender in self._done:
                    raise ProtocolViolation(f"sender {tag.sender} terminated without sending {tag}")
                if not blocking:
                    raise ProtocolViolation(f"message {tag} not available in non-blocking receive")
                arrived = self._cond.wait_for(
                    lambda: tag in self._slots or tag.sender in self._done,
                    timeout=self._timeout,
                )
                if not arrived:
                    raise ProtocolViolation(f"timed out waiting for {tag}")
                if tag not in self._slots:
                    raise ProtocolViolation(f"sender {tag.sender} terminated without sending {tag}")
            return self._slots.pop(tag)

    def mark_done(self, rank: int) -> None:
        with self._cond:
            self._done.add(rank)
            self._cond.notify_all()


class Rank:
    """One virtual time rank: a hierarchy plus its communication endpoints."""

    def __init__(self, index: int, count: int, h: TwoLevelHierarchy, mailbox: Mailbox):
        self.p = index
        self.count = count
        self.h = h
        self.mailbox = mailbox
        self.timing = TimingRecord()
        self.consumed: list[Tag] = []

    def _post(self, level: str, iteration: int, value: np.ndarray) -> None:
        if self.p < self.count - 1:
            self.mailbox.post(Tag(level, iteration, self.p), value)

    def _collect(self, level: str, iteration: int) -> np.ndarray:
        tag = Tag(level, iteration, self.p - 1)
        with self.timing.measure("comm_wait"):
            value = self.mailbox.collect(tag)
        self.consumed.append(tag)
        return value

    # -- predictor ---------------------------------------------------------

    def setup(self, u0: np.ndarray) -> None:
        self.h.fine.state = sweeper.spread_initial(u0, self.h.fine.colloc, self.h.fine.ops)
        hmod.restrict_and_fas(self.h, self.timing)

    def predictor_sweep(self, stage: int) -> None:
        coarse = self.h.coarse
        sweeper.sweep(coarse.state, coarse.ops, coarse.mg, tau=coarse.tau,
                      timing=self.timing, phase="coarse_sweep")
        self._post("predictor", stage, coarse.state.U[-1])

    def predictor_recv(self, stage: int) -> None:
        coarse = self.h.coarse
        coarse.state.U[0] = self._collect("predictor", stage)
        sweeper.refresh_node0(coarse.state, coarse.ops)

    def predictor_finish(self) -> None:
        hmod.coarse_correction(self.h, self.timing)

    # -- one pfasst iteration (steps 1-8 of the module docstring) ----------

    def iter_fine(self, k: int) -> None:
        fine = self.h.fine
        sweeper.sweep(fine.state, fine.ops, fine.mg, timing=self.timing, phase="fine_sweep")
        self._post("fine", k, fine.state.U[-1])
        hmod.restrict_and_fas(self.h, self.timing)

    def iter_coarse(self, k: int) -> None:
        coarse = self.h.coarse
        if self.p > 0:
            coarse.state.U[0] = self._collect("coarse", k)
            sweeper.refresh_node0(coarse.state, coarse.ops)
        for _ in range(self.h.n_coarse_sweeps):
            sweeper.sweep(coarse.state, coarse.ops, coarse.mg, tau=coarse.tau,
                          timing=self.timing, phase="coarse_sweep")
        self._post("coarse", k, coarse.state.U[-1])

    def iter_update(self, k: int) -> float:
        if self.p > 0:
            u0_new = self._collect("fine", k)
            self.h.fine.state.U[0] = u0_new
            # The node-0 coarse increment must be taken against the incoming
            # fine value, not the pre-sweep one: differencing against the
            # stale initial value feeds U_0 back into itself with a unit-
            # modulus factor and the block stalls instead of converging.
            self.h.coarse_old[0] = hmod.spatial_restrict(self.h, u0_new)
        hmod.coarse_correction(self.h, self.timing)  # also refreshes fine caches
        return sweeper.residual(self.h.fine.state)


@dataclass(frozen=True)
class BlockSchedule:
    """Consecutive blocks of `ranks` steps each, executed block-serially."""

    total_steps: int
    ranks: int

    def __post_init__(self):
        if self.ranks < 1:
            raise ValueError("need at least one time rank")
        if self.total_steps < 1 or self.total_steps % self.ranks != 0:
            raise ValueError(
                f"step count {self.total_steps} is not divisible by {self.ranks} ranks"
            )

    @property
    def num_blocks(self) -> int:
        return self.total_steps // self.ranks


@dataclass
class BlockResult:
    u_end: list[np.ndarray]  # per rank, fine value at the step end
    residuals: list[float]  # per rank, final fine residual
    iterations: int  # pfasst iterations executed (same for all ranks)
    converged: bool
    timings: list[TimingRecord]
    consumed: list[list[Tag]]  # per rank, tags in consumption order


def _run_sequential(ranks: list[Rank], u0, tol, max_iter) -> tuple[int, list[float], bool]:
    count = len(ranks)
    for r in ranks:
        r.setup(u0)
    for stage in range(count):
        for p in range(stage, count):
            ranks[p].predictor_sweep(stage)
        for p in range(stage + 1, count):
            ranks[p].predictor_recv(stage)
    for r in ranks:
        r.predictor_finish()

    residuals = [np.inf] * count
    for k in range(1, max_iter + 1):
        for r in ranks:
            r.iter_fine(k)
        for r in ranks:  # ascending rank order serializes the coarse pipeline
            r.iter_coarse(k)
        residuals = [r.iter_update(k) for r in ranks]
        if max(residuals) <= tol:
            return k, residuals, True
    return max_iter, residuals, False


def _rank_body(rank: Rank, u0, tol, max_iter, board, barrier, results) -> None:
    rank.setup(u0)
    for stage in range(rank.p + 1):
        rank.predictor_sweep(stage)
        if stage < rank.p:
            rank.predictor_recv(stage)
    rank.predictor_finish()

    iterations, res, converged = 0, np.inf, False
    for k in range(1, max_iter + 1):
        rank.iter_fine(k)
        rank.iter_coarse(k)
        res = rank.iter_update(k)
        board[k - 1][rank.p] = res
        with rank.timing.measure("comm_wait"):
            barrier.wait()
        iterations = k
        if max(board[k - 1]) <= tol:
            converged = True
            break
    results[rank.p] = (iterations, res, converged)


def _run_concurrent(ranks: list[Rank], u0, tol, max_iter) -> tuple[int, list[float], bool]:
    count = len(ranks)
    board = [[np.inf] * count for _ in range(max_iter)]
    barrier = threading.Barrier(count)
    results: list[tuple[int, float, bool] | None] = [None] * count
    failures: list[BaseException | None] = [None] * count

    def worker(rank: Rank):
        try:
            _rank_body(rank, u0, tol, max_iter, board, barrier, results)
        except BaseException as exc:  # propagate to the caller after join
            failures[rank.p] = exc
            rank.mailbox.mark_done(rank.p)
            barrier.abort()

    threads = [threading.Thread(target=worker, args=(r,), name=f"time-rank-{r.p}") for r in ranks]
    for t in threads:
        t.start()
    for t in threads:
        t.join()

    primary = [e for e in failures if e is not None and not isinstance(e, threading.BrokenBarrierError)]
    if primary:
        raise primary[0]
    if any(e is not None for e in failures):
        raise next(e for e in failures if e is not None)

    iterations = results[0][0]
    converged = results[0][2]
    return iterations, [results[p][1] for p in range(count)], converged


def run_block(
    hier_factory: Callable[[int], TwoLevelHierarchy],
    u0: np.ndarray,
    ranks: int,
    tol: float,
    max_iter: int,
    backend: str = "sequential",
) -> BlockResult:
    """Run one block of `ranks` simultaneous steps from the initial value u0.

    hier_factory(p) must build the hierarchy of rank p, i.e. for the step
    starting at the block's t0 + p*dt.
    """
    if not tol > 0.0:
        raise ValueError("tol must be positive")
    mailbox = Mailbox()
    rank_objs = [Rank(p, ranks, hier_factory(p), mailbox) for p in range(ranks)]

    if backend == "sequential":
        iterations, residuals, converged = _run_sequential(rank_objs, u0, tol, max_iter)
    elif backend == "concurrent":
        iterations, residuals, converged = _run_concurrent(rank_objs, u0, tol, max_iter)
    else:
        raise ValueError(f"unknown backend: {backend!r}")

    return BlockResult(
        u_end=[r.h.fine.state.U[-1].copy() for r in rank_objs],
        residuals=residuals,
        iterations=iterations,
        converged=converged,
        timings=[r.timing for r in rank_objs],
        consumed=[r.consumed for r in rank_objs],
    )
