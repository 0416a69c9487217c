"""Software schedulers: the HEFT_RT reference, a FIFO baseline, and a
brute-force makespan oracle for small ready queues."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Optional, Sequence

from .core import UNSUPPORTED, HeftError, MappingDecision, TaskRecord


class TooLarge(HeftError):
    pass


@dataclass(frozen=True)
class SchedulerInput:
    """Ready queue in arrival order plus the current PE availability times."""

    ready: tuple
    avail: tuple

    def __post_init__(self):
        if len(self.ready) < 1:
            raise ValueError("ready queue must hold at least one task")
        object.__setattr__(self, "ready", tuple(self.ready))
        object.__setattr__(self, "avail", tuple(self.avail))
        p = len(self.avail)
        for rec in self.ready:
            if len(rec.exec) != p:
                raise ValueError(
                    f"task {rec.tid} has {len(rec.exec)} exec entries, expected {p}"
                )


def eft_select(avail: Sequence[int], exec_times: Sequence[Optional[int]],
               finish_cap: Optional[int] = None) -> tuple:
    """Return ``(pe, finish)`` minimizing ``avail[pe] + exec[pe]``.

    Unsupported PEs are skipped; ties go to the lowest PE index.  When
    ``finish_cap`` is given, finish times saturate at that value.
    """
    best_pe, best = -1, None
    for pe, (a, e) in enumerate(zip(avail, exec_times)):
        if e is UNSUPPORTED:
            continue
        f = a + e
        if finish_cap is not None and f > finish_cap:
            f = finish_cap
        if best is None or f < best:
            best_pe, best = pe, f
    return best_pe, best


def _list_schedule(order: Sequence[TaskRecord], avail, finish_cap):
    avail = list(avail)
    decisions = []
    for rec in order:
        pe, finish = eft_select(avail, rec.exec, finish_cap)
        avail[pe] = finish
        decisions.append(MappingDecision(rec.tid, pe, finish))
    return decisions, tuple(avail)


def heft_rt_schedule(inp: SchedulerInput, finish_cap: Optional[int] = None):
    """Map a ready queue with HEFT_RT.

    Tasks are taken in descending average execution time (a stable sort, so
    equal averages keep their queue order) and each goes to the PE giving
    the earliest finish time.  Returns ``(decisions, final_avail)``.
    """
    order = sorted(inp.ready, key=lambda r: -r.avg)
    return _list_schedule(order, inp.avail, finish_cap)


def fifo_schedule(inp: SchedulerInput, finish_cap: Optional[int] = None):
    """Earliest-finish-time mapping in plain queue order."""
    return _list_schedule(inp.ready, inp.avail, finish_cap)


def makespan(decisions: Sequence[MappingDecision]) -> int:
    return max(d.predicted_finish for d in decisions)


def brute_force_best_assignment(inp: SchedulerInput, max_tasks: int = 8, max_pes: int = 4):
    """Exhaustive minimum makespan over every task-to-PE assignment.

    Under list-schedule semantics a task's finish time on a PE is the PE's
    availability plus the execution times of everything placed on it, so the
    last finish on each PE does not depend on the priority order; enumerating
    assignments alone covers every (order, assignment) schedule.
    """
    n, p = len(inp.ready), len(inp.avail)
    if n > max_tasks or p > max_pes:
        raise TooLarge(f"brute force limited to n <= {max_tasks}, P <= {max_pes}; got n={n}, P={p}")
    choices = [rec.supported for rec in inp.ready]
    best_assign, best = None, None
    for assign in itertools.product(*choices):
        load = list(inp.avail)
        used = [False] * p
        for rec, pe in zip(inp.ready, assign):
            load[pe] += rec.exec[pe]
            used[pe] = True
        span = max(load[pe] for pe in range(p) if used[pe])
        if best is None or span < best:
            best_assign, best = assign, span
    return best_assign, best


@dataclass(frozen=True)
class SoftwareCoeffs:
    """Analytic cost of one software mapping event, ``a + b*n + c*n*log2(n)`` ns."""

    a: float = 15000.0
    b: float = 7000.0
    c: float = 1000.0

    def __post_init__(self):
        if min(self.a, self.b, self.c) < 0:
            raise ValueError("overhead coefficients must be non-negative")


def sw_overhead_model(n: int, coeffs: SoftwareCoeffs = SoftwareCoeffs()) -> int:
    if n < 1:
        raise ValueError("queue size must be >= 1")
    t = coeffs.a + coeffs.b * n + coeffs.c * n * math.log2(n)
    return math.floor(t + 0.5)
