"""Experiment drivers and summary analytics behind the command line.

CSV schemas (version 1), one header row each:

``run``     instance_id, template, arrival_ns, cumulative_exec_ns, app_exec_ns
``events``  event_time_ns, n, overhead_ns, scheduler
``sweep``   row_type, target_fps, repetition, achieved_fps_mean, app_exec_ns_mean,
            overhead_ns_mean  (``row_type`` is ``rep`` or ``summary``; summary
            rows leave ``repetition`` empty and average the rep rows)
``cycles``  n, order, fill_cycles, sort_cycles, drain_cycles, total_cycles, bound_3n3,
            first_decision_cycle, bound_2n3, event_ns, per_task_ns
``trace``   event, cycle, phase, swaps, tid, pe, finish
"""

from __future__ import annotations

import csv
import io
import random
import statistics
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .core import HeftError, TaskRecord
from .hw import HwConfig, HwScheduler, adversarial_tasks, event_latency_ns, quantize_record
from .sim import MetricsReport, OverheadModel, simulate
from .sw import SchedulerInput, heft_rt_schedule
from .workload import WorkloadSpec

CSV_SCHEMA_VERSION = 1

RUN_COLUMNS = ("instance_id", "template", "arrival_ns", "cumulative_exec_ns", "app_exec_ns")
EVENT_COLUMNS = ("event_time_ns", "n", "overhead_ns", "scheduler")
SWEEP_COLUMNS = ("row_type", "target_fps", "repetition", "achieved_fps_mean",
                 "app_exec_ns_mean", "overhead_ns_mean")
CYCLE_COLUMNS = ("n", "order", "fill_cycles", "sort_cycles", "drain_cycles", "total_cycles",
                 "bound_3n3", "first_decision_cycle", "bound_2n3", "event_ns", "per_task_ns")
TRACE_COLUMNS = ("event", "cycle", "phase", "swaps", "tid", "pe", "finish")


class TooFewPoints(HeftError):
    pass


class DomainMismatch(HeftError):
    pass


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.6f}"
    return v


def to_csv(columns: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


# -- analytics ----------------------------------------------------------------


def detect_saturation(series: Sequence[tuple], epsilon: float = 0.05, k: int = 3) -> Optional[float]:
    """Plateau value of an achieved-vs-target frame-rate curve, or ``None``.

    The relative slope is the least-squares slope of log(achieved) against
    log(target) over the last ``k`` points (1 for a proportional series,
    0 for a flat one).  Below ``epsilon`` the curve is saturated and the mean
    achieved rate over those points is returned.
    """
    if k < 2 or len(series) < k + 1:
        raise TooFewPoints(f"need at least k + 1 = {k + 1} points, got {len(series)}")
    tail = sorted(series)[-k:]
    x = np.log([t for t, _ in tail])
    y = np.log([a for _, a in tail])
    slope = np.polyfit(x, y, 1)[0]
    if abs(slope) < epsilon:
        return float(np.mean([a for _, a in tail]))
    return None


def detect_crossover(sw_series: Sequence[tuple], hw_series: Sequence[tuple]) -> Optional[int]:
    """Smallest queue size from which hardware overhead stays below software."""
    sw, hw = dict(sw_series), dict(hw_series)
    if not sw or set(sw) != set(hw):
        raise DomainMismatch("overhead series must cover the same queue sizes")
    ns = sorted(sw)
    best = None
    for n in reversed(ns):
        if hw[n] < sw[n]:
            best = n
        else:
            break
    return best


def overhead_curves(ns: Sequence[int], overhead: OverheadModel = OverheadModel(),
                    config: HwConfig = HwConfig(), include_transfer: bool = True):
    """Worst-case analytic overhead per queue size for both engines.

    Queues deeper than ``config.d`` are split into batches, each paying the
    transfer terms.
    """
    sw, hw = [], []
    for n in ns:
        sw.append((n, overhead.software_ns(n)))
        total = 0
        for lo in range(0, n, config.d):
            m = min(config.d, n - lo)
            cycles = 3 * m + 3
            if include_transfer:
                total += overhead.hardware_ns(m, cycles, config)
            else:
                total += overhead.hardware_compute_ns(cycles, config)
        hw.append((n, total))
    return sw, hw


# -- single runs and sweeps ------------------------------------------------------


def run_rows(report: MetricsReport) -> list:
    return [
        (r.instance_id, r.template, r.arrival_ns, r.cumulative_exec_ns, r.app_exec_ns)
        for r in sorted(report.instances, key=lambda r: r.instance_id)
    ]


def event_rows(report: MetricsReport) -> list:
    return [(e.time_ns, e.n, e.overhead_ns, report.scheduler) for e in report.events]


@dataclass
class SweepResult:
    rep_rows: list = field(default_factory=list)
    summary_rows: list = field(default_factory=list)

    def rows(self) -> list:
        return [("rep", *r) for r in self.rep_rows] + [("summary", t, "", *v) for t, *v in self.summary_rows]

    def achieved_series(self) -> list:
        return [(t, fps) for t, fps, _, _ in self.summary_rows]


def sweep(spec: WorkloadSpec, scheduler: str, rates: Sequence[float], repeats: int,
          hw_config: HwConfig = HwConfig(), overhead: OverheadModel = OverheadModel(),
          seed: int = 0, process: str = "poisson", quantize_sw: bool = False) -> SweepResult:
    """Simulate every (rate, repetition) pair and average per rate.

    Repetition ``r`` uses seed ``seed + r`` at every rate, so arrival
    patterns differ between repetitions but are shared across rates.
    """
    if not rates:
        raise ValueError("rates must be non-empty")
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    res = SweepResult()
    for rate in sorted(rates):
        s = spec.with_target_rate(rate, process)
        reps = []
        for r in range(repeats):
            rep = simulate(s, scheduler, hw_config, overhead, seed + r, quantize_sw)
            row = (
                float(rate),
                r,
                rep.achieved_frame_rate,
                statistics.fmean(i.app_exec_ns for i in rep.instances),
                statistics.fmean(e.overhead_ns for e in rep.events),
            )
            reps.append(row)
        res.rep_rows.extend(reps)
        res.summary_rows.append((
            float(rate),
            statistics.fmean(r[2] for r in reps),
            statistics.fmean(r[3] for r in reps),
            statistics.fmean(r[4] for r in reps),
        ))
    return res


# -- hardware/software verification ------------------------------------------------


@dataclass
class VerifyResult:
    trials: int = 0
    mismatches: int = 0
    avail_mismatches: int = 0
    bound_violations: int = 0
    max_total_ratio: float = 0.0  # max over trials of total_cycles / (3n + 3)
    max_first_ratio: float = 0.0  # max over trials of first_decision / (2n + 3)
    failures: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.mismatches == 0 and self.avail_mismatches == 0 and self.bound_violations == 0

    def rows(self) -> list:
        return [
            ("trials", self.trials),
            ("mismatches", self.mismatches),
            ("avail_mismatches", self.avail_mismatches),
            ("bound_violations", self.bound_violations),
            ("max_total_over_3n3", self.max_total_ratio),
            ("max_first_over_2n3", self.max_first_ratio),
            ("status", "ok" if self.ok else "FAIL"),
        ]


def random_event(rng: random.Random, n: int, p: int, exec_max_ns: int = 70_000_000,
                 unsupported_prob: float = 0.1, avail_max: int = 100_000):
    """Random tasks (ns) and availability vector (scheduler units) for one event.

    Execution times are drawn from a small pool so equal averages are common.
    """
    pool = [rng.randint(1, exec_max_ns) for _ in range(max(4, n // 4))]
    tasks = []
    for tid in range(n):
        row = [rng.choice(pool) if rng.random() < 0.5 else rng.randint(1, exec_max_ns) for _ in range(p)]
        for i in range(p):
            if rng.random() < unsupported_prob:
                row[i] = None
        if all(t is None for t in row):
            row[rng.randrange(p)] = rng.choice(pool)
        tasks.append(TaskRecord.from_exec(tid, row))
    avail = [rng.randint(0, avail_max) for _ in range(p)]
    return tasks, avail


def verify_event(tasks, avail, config: HwConfig):
    """Run one event through both engines; returns (hw_decisions, sw_decisions,
    hw_avail, sw_avail, stats)."""
    hw = HwScheduler(config)
    hw_dec, stats = hw.run_event(avail, tasks)
    inp = SchedulerInput(tuple(quantize_record(t, config) for t in tasks), tuple(avail))
    sw_dec, sw_avail = heft_rt_schedule(inp, finish_cap=config.accum_max)
    return hw_dec, sw_dec, tuple(hw.avail), sw_avail, stats


def verify(trials: int = 1000, n_range: tuple = (1, 512), pe_choices: Sequence[int] = (2, 4, 8, 16),
           seed: int = 0, base_config: HwConfig = HwConfig()) -> VerifyResult:
    lo, hi = n_range
    if not 1 <= lo <= hi <= base_config.d:
        raise ValueError(f"size range must lie within [1, {base_config.d}]")
    rng = random.Random(seed)
    res = VerifyResult()
    configs = {}
    for trial in range(trials):
        p = rng.choice(list(pe_choices))
        n = rng.randint(lo, hi)
        cfg = configs.setdefault(p, HwConfig(p=p, d=base_config.d, w_avg=base_config.w_avg,
                                             clock_period_ps=base_config.clock_period_ps,
                                             time_unit_ns=base_config.time_unit_ns))
        tasks, avail = random_event(rng, n, p)
        hw_dec, sw_dec, hw_av, sw_av, st = verify_event(tasks, avail, cfg)
        res.trials += 1
        if hw_dec != sw_dec:
            res.mismatches += 1
            res.failures.append((trial, "decisions"))
        if hw_av != sw_av:
            res.avail_mismatches += 1
            res.failures.append((trial, "avail"))
        if st.total_cycles > 3 * n + 3 or st.first_decision_cycle > 2 * n + 3:
            res.bound_violations += 1
            res.failures.append((trial, "cycles"))
        res.max_total_ratio = max(res.max_total_ratio, st.total_cycles / (3 * n + 3))
        res.max_first_ratio = max(res.max_first_ratio, st.first_decision_cycle / (2 * n + 3))
    return res


def cycle_rows(ns: Sequence[int], config: HwConfig = HwConfig(), order: str = "worst",
               seed: int = 0, trace: Optional[list] = None) -> list:
    """Cycle statistics per queue size, for worst-case or random task order."""
    rng = random.Random(seed)
    rows = []
    for idx, n in enumerate(ns):
        if order == "worst":
            tasks = adversarial_tasks(n, config)
        else:
            tasks, _ = random_event(rng, n, config.p, unsupported_prob=0.0)
        cycle_trace = [] if trace is not None else None
        hw = HwScheduler(config, trace=cycle_trace)
        _, st = hw.run_event([0] * config.p, tasks)
        if trace is not None:
            trace.extend((idx, *row) for row in cycle_trace)
        ev_ns, per_task = event_latency_ns(st, config)
        rows.append((n, order, st.fill_cycles, st.sort_cycles, st.drain_cycles, st.total_cycles,
                     3 * n + 3, st.first_decision_cycle, 2 * n + 3, ev_ns, per_task))
    return rows
