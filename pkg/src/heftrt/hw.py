"""Cycle-level behavioral model of the hardware HEFT_RT scheduler.

The model has three parts that mirror the datapath:

* a shift-register priority queue of ``d`` cells holding ``(qid, avg)``.
  Tasks enter and leave through the front (cell 0).  Sorting alternates
  odd and even compare-swap phases, one phase per cycle, and stops after
  two consecutive swap-free cycles;
* an execution-time store addressed by qid (``d`` rows by ``p`` columns)
  plus a qid to tid table;
* ``p`` PE handlers with availability registers and a minimum-comparator
  EFT selector.

A mapping event over ``n`` tasks takes ``n`` fill cycles, at most ``n + 2``
sort cycles and exactly ``n + 1`` drain cycles.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .core import UNSUPPORTED, HeftError, MappingDecision, TaskRecord


class WrongPhase(HeftError):
    pass


class QueueFull(HeftError):
    pass


class EventTooLarge(HeftError):
    pass


class Phase(enum.Enum):
    IDLE = "Idle"
    FILL = "Fill"
    SORT_ODD = "SortOdd"
    SORT_EVEN = "SortEven"
    DRAIN = "Drain"


@dataclass(frozen=True)
class HwConfig:
    """Scheduler geometry and timing.

    Defaults are the 4-PE, 512-deep, 16-bit build with a 3.048 ns clock;
    one scheduler time unit is 1 us.
    """

    p: int = 4
    d: int = 512
    w_avg: int = 16
    clock_period_ps: int = 3048
    time_unit_ns: int = 1000

    def __post_init__(self):
        if self.p < 1:
            raise ValueError("p must be >= 1")
        if self.d < 1:
            raise ValueError("d must be >= 1")
        if not 4 <= self.w_avg <= 64:
            raise ValueError("w_avg must be in [4, 64]")
        if self.clock_period_ps <= 0:
            raise ValueError("clock_period_ps must be positive")
        if self.time_unit_ns < 1:
            raise ValueError("time_unit_ns must be >= 1")

    @property
    def w_qid(self) -> int:
        # ceil(log2(d)) for d >= 1
        return (self.d - 1).bit_length()

    @property
    def w_accum(self) -> int:
        return self.w_avg + 16

    @property
    def max_value(self) -> int:
        return (1 << self.w_avg) - 1

    @property
    def accum_max(self) -> int:
        return (1 << self.w_accum) - 1


def quantize(t: Optional[int], config: HwConfig) -> int:
    """Nanoseconds to scheduler units, rounded half up and saturated.

    ``UNSUPPORTED`` maps to the all-ones value.
    """
    if t is UNSUPPORTED:
        return config.max_value
    if t < 0:
        raise ValueError("time must be non-negative")
    u = config.time_unit_ns
    return min((2 * t + u) // (2 * u), config.max_value)


def saturates(t: Optional[int], config: HwConfig) -> bool:
    if t is UNSUPPORTED:
        return False
    u = config.time_unit_ns
    return (2 * t + u) // (2 * u) > config.max_value


def quantize_record(rec: TaskRecord, config: HwConfig) -> TaskRecord:
    """The task as the scheduler sees it, in scheduler time units."""
    exec_q = tuple(UNSUPPORTED if t is UNSUPPORTED else quantize(t, config) for t in rec.exec)
    return TaskRecord(rec.tid, exec_q, quantize(rec.avg, config))


def quantize_avail(t_ns: int, config: HwConfig) -> int:
    """Availability time to scheduler units, saturated at the register width."""
    u = config.time_unit_ns
    return min((2 * t_ns + u) // (2 * u), config.accum_max)


@dataclass(frozen=True)
class QueueCell:
    valid: bool
    qid: int
    avg: int


@dataclass
class CycleStats:
    fill_cycles: int = 0
    sort_cycles: int = 0
    drain_cycles: int = 0
    first_decision_cycle: Optional[int] = None
    n_tasks: int = 0

    @property
    def total_cycles(self) -> int:
        return self.fill_cycles + self.sort_cycles + self.drain_cycles


class HwScheduler:
    """Mutable microarchitectural state of one scheduler instance.

    Drive it either cycle by cycle (:meth:`sync_avail`, :meth:`enqueue_task`,
    :meth:`tick`) or one whole mapping event at a time with :meth:`run_event`.
    Set ``trace`` to a list to record one row per cycle.
    """

    def __init__(self, config: HwConfig = HwConfig(), trace: Optional[list] = None):
        self.config = config
        d, p = config.d, config.p
        # Live cells are the contiguous run [_head, _head + n_live); the head
        # only moves during drain, so it is 0 while filling and sorting.
        # Each cell is packed as avg << w_qid | (qid_max - qid): a larger key leaves
        # first, and equal avgs leave in qid (enqueue) order.
        self._w_qid = config.w_qid
        self._qid_mask = (1 << self._w_qid) - 1
        self._top = config.max_value
        self._cap = config.accum_max
        wide = config.w_avg + config.w_qid > 64
        self._key = np.zeros(d, dtype=object if wide else np.uint64)
        if wide:
            self._key[:] = 0
        self.n_live = 0
        self._head = 0
        self.exec_store = [[0] * p for _ in range(d)]
        self.supported = [[False] * p for _ in range(d)]
        self.row_valid = [False] * d
        self.tid_table = [None] * d
        self.avail = [0] * p
        self.phase = Phase.IDLE
        self.quiet_count = 0
        self.cycle = 0
        self.next_qid = 0
        self.stats = CycleStats()
        self.saturation_events = 0
        self.trace = trace
        self._pipe: Optional[int] = None  # qid waiting for the handler/selector stage
        self._next_sort = Phase.SORT_ODD

    # -- inspection ---------------------------------------------------------

    @property
    def cells(self) -> list:
        out = []
        for i in range(self.config.d):
            if i < self.n_live:
                qid, avg = self._unpack(self._key[self._head + i])
                out.append(QueueCell(True, qid, avg))
            else:
                out.append(QueueCell(False, 0, 0))
        return out

    def queue_avgs(self) -> list:
        """Live cell averages, front (output end) first."""
        return [self._unpack(k)[1] for k in self._key[self._head : self._head + self.n_live]]

    def _unpack(self, key) -> tuple:
        key = int(key)
        return self._qid_mask - (key & self._qid_mask), key >> self._w_qid

    # -- operations ---------------------------------------------------------

    def sync_avail(self, times: Sequence[int]) -> None:
        if self.phase is not Phase.IDLE:
            raise WrongPhase(f"sync_avail requires Idle, scheduler is in {self.phase.value}")
        if len(times) != self.config.p:
            raise ValueError(f"expected {self.config.p} availability times, got {len(times)}")
        cap = self.config.accum_max
        for i, t in enumerate(times):
            if t < 0:
                raise ValueError("availability times must be non-negative")
            if t > cap:
                self.saturation_events += 1
                t = cap
            self.avail[i] = int(t)

    def enqueue_task(self, rec: TaskRecord) -> int:
        cfg = self.config
        if self.phase is Phase.IDLE:
            self._begin_event()
        elif self.phase is not Phase.FILL:
            raise WrongPhase(f"enqueue_task requires Idle or Fill, scheduler is in {self.phase.value}")
        if self.n_live >= cfg.d:
            raise QueueFull(f"priority queue holds {cfg.d} tasks")
        if len(rec.exec) != cfg.p:
            raise ValueError(f"task {rec.tid} has {len(rec.exec)} exec entries, expected {cfg.p}")
        qid = self.next_qid
        self.next_qid += 1
        n = self.n_live
        avg_q = self._store_row(qid, rec)
        # shift toward the back, insert at the front
        self._key[1 : n + 1] = self._key[0:n]
        self._key[0] = (avg_q << self._w_qid) | (self._qid_mask - qid)
        self.n_live = n + 1
        self.phase = Phase.FILL
        self.stats.fill_cycles += 1
        self.stats.n_tasks += 1
        self._record(Phase.FILL, 0, None)
        return qid

    def tick(self) -> Optional[MappingDecision]:
        """Advance one clock cycle; returns the decision emitted this cycle, if any."""
        if self.phase is Phase.IDLE:
            raise WrongPhase("tick requires an active mapping event")
        if self.phase is Phase.DRAIN:
            return self._drain_cycle()
        parity = self._next_sort
        swaps = self._compare_swap(1 if parity is Phase.SORT_ODD else 0)
        self.quiet_count = 0 if swaps else self.quiet_count + 1
        self.stats.sort_cycles += 1
        self._record(parity, swaps, None)
        if self.quiet_count == 2:
            self.phase = Phase.DRAIN
        else:
            self._next_sort = Phase.SORT_EVEN if parity is Phase.SORT_ODD else Phase.SORT_ODD
            self.phase = self._next_sort
        return None

    def run_event(self, avail: Sequence[int], tasks: Sequence[TaskRecord]):
        """Sync, fill, sort and drain one ready queue.

        Returns ``(decisions, stats)`` with decisions in drain order.
        """
        if not 1 <= len(tasks) <= self.config.d:
            raise EventTooLarge(f"event of {len(tasks)} tasks, queue depth is {self.config.d}")
        self.sync_avail(avail)
        self._fill_all(tasks)
        decisions = []
        while self.phase is not Phase.IDLE:
            dec = self.tick()
            if dec is not None:
                decisions.append(dec)
        return decisions, self.stats

    # -- internals ----------------------------------------------------------

    def _store_row(self, qid: int, rec: TaskRecord) -> int:
        """Write the task's quantized exec row and tid; returns its quantized avg."""
        cfg = self.config
        if len(rec.exec) != cfg.p:
            raise ValueError(f"task {rec.tid} has {len(rec.exec)} exec entries, expected {cfg.p}")
        half, u2, top = cfg.time_unit_ns, 2 * cfg.time_unit_ns, self._top
        avg_q = (2 * rec.avg + half) // u2
        sat = avg_q > top
        row = self.exec_store[qid]
        sup = self.supported[qid]
        for i, t in enumerate(rec.exec):
            if t is UNSUPPORTED:
                row[i] = top
                sup[i] = False
            else:
                q = (2 * t + half) // u2
                if q > top:
                    sat += 1
                    q = top
                row[i] = q
                sup[i] = True
        self.saturation_events += sat
        self.row_valid[qid] = True
        self.tid_table[qid] = rec.tid
        return min(avg_q, top)

    def _fill_all(self, tasks: Sequence[TaskRecord]) -> None:
        """``len(tasks)`` fill cycles at once; same end state as enqueuing one by one."""
        self._begin_event()
        n = len(tasks)
        w, mask = self._w_qid, self._qid_mask
        keys = [(self._store_row(qid, rec) << w) | (mask - qid) for qid, rec in enumerate(tasks)]
        keys.reverse()  # the last task enqueued sits at the front
        self._key[:n] = keys if self._key.dtype == object else np.array(keys, dtype=np.uint64)
        self.n_live = n
        self.next_qid = n
        self.phase = Phase.FILL
        self.stats.fill_cycles = n
        self.stats.n_tasks = n
        if self.trace is not None:
            self.trace.extend((c, Phase.FILL.value, 0, "", "", "") for c in range(n))
        self.cycle = n

    def _begin_event(self):
        self._head = 0
        self.next_qid = 0
        self.cycle = 0
        self.quiet_count = 0
        self.stats = CycleStats()
        self._next_sort = Phase.SORT_ODD
        self._pipe = None

    def _compare_swap(self, start: int) -> int:
        n = self.n_live
        if n - start < 2:
            return 0
        stop = start + 2 * ((n - start) // 2)
        k = self._key[start:stop]
        left, right = k[0::2], k[1::2]
        # the cell nearer the output must hold the larger key
        swaps = int(np.count_nonzero(left < right))
        if swaps:
            hi = np.maximum(left, right)
            lo = np.minimum(left, right)
            k[0::2] = hi
            k[1::2] = lo
        return swaps

    def _drain_cycle(self) -> Optional[MappingDecision]:
        decision = None
        if self._pipe is not None:
            decision = self._select(self._pipe)
            if self.stats.first_decision_cycle is None:
                self.stats.first_decision_cycle = self.cycle
        if self.n_live:
            self._pipe = self._qid_mask - (int(self._key[self._head]) & self._qid_mask)
            self._head += 1
            self.n_live -= 1
        else:
            self._pipe = None
        self.stats.drain_cycles += 1
        self._record(Phase.DRAIN, 0, decision)
        if self._pipe is None:
            self.phase = Phase.IDLE
        return decision

    def _select(self, qid: int) -> MappingDecision:
        cap = self._cap
        row, sup = self.exec_store[qid], self.supported[qid]
        best_pe, best = -1, None
        for i in range(len(row)):
            if not sup[i]:
                continue
            f = self.avail[i] + row[i]
            if f > cap:
                f = cap
            if best is None or f < best:
                best_pe, best = i, f
        self.avail[best_pe] = best
        self.row_valid[qid] = False
        return MappingDecision(self.tid_table[qid], best_pe, best)

    def _record(self, phase: Phase, swaps: int, decision: Optional[MappingDecision]):
        if self.trace is not None:
            if decision is None:
                self.trace.append((self.cycle, phase.value, swaps, "", "", ""))
            else:
                self.trace.append(
                    (self.cycle, phase.value, swaps, decision.tid, decision.pe_id,
                     decision.predicted_finish)
                )
        self.cycle += 1


TRACE_HEADER = ("cycle", "phase", "swaps", "tid", "pe", "finish")


def run_event(state: HwScheduler, avail: Sequence[int], tasks: Sequence[TaskRecord]):
    return state.run_event(avail, tasks)


def event_latency_ns(stats: CycleStats, config: HwConfig) -> tuple:
    """``(event_ns, per_task_ns)`` for a completed event."""
    total = stats.total_cycles * config.clock_period_ps / 1000
    return total, total / max(stats.n_tasks, 1)


def worst_case_cycles(n: int) -> int:
    return 3 * n + 3


def asymptotic_latency_ns(config: HwConfig) -> Fraction:
    """Per-decision latency as n grows without bound: exactly 3 clock periods."""
    # lim (3n + 3) / n = 3
    return Fraction(3) * Fraction(config.clock_period_ps, 1000)


def adversarial_tasks(n: int, config: HwConfig = HwConfig(), first_tid: int = 0) -> list:
    """Tasks whose fill leaves the queue ascending toward the output end.

    Fill inserts at the front, so feeding strictly decreasing averages puts the
    smallest one at the output; this forces the full ``n + 2`` sort cycles.
    """
    unit = config.time_unit_ns
    if n > config.max_value:
        raise ValueError("n exceeds the distinct values representable in w_avg bits")
    return [
        TaskRecord.from_exec(first_tid + k, [(n - k) * unit] * config.p)
        for k in range(n)
    ]
