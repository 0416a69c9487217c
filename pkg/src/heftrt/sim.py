"""Deterministic discrete-event model of the runtime.

The runtime tracks application instances, keeps a ready queue of tasks whose
dependencies are resolved, and invokes a scheduler in mapping events.  A
mapping event takes the whole ready queue, costs an analytic overhead, and
on completion appends every task to the FIFO of the PE it was mapped to.
Tasks that become ready while an event is in progress wait for the next one.
"""

from __future__ import annotations

import heapq
from collections import deque
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import (
    AppInstance,
    HeftError,
    Incomplete,
    NodeState,
    TaskRecord,
    add_time,
)
from .hw import HwConfig, HwScheduler, quantize_avail, quantize_record
from .sw import SchedulerInput, SoftwareCoeffs, fifo_schedule, heft_rt_schedule, sw_overhead_model
from .workload import WorkloadSpec, generate_arrivals, validate_spec

SCHEDULERS = ("sw", "hw", "fifo")


class NoCompletions(HeftError):
    pass


@dataclass(frozen=True)
class OverheadModel:
    """Cost of a mapping event in ns.

    Software engines pay ``sw.a + sw.b*n + sw.c*n*log2(n)``.  The hardware
    engine pays, per batch of at most ``d`` tasks, the transfer terms plus
    its cycle count times the clock period.  The transfer defaults make
    software cheaper up to five ready tasks and hardware cheaper from six.
    """

    sw: SoftwareCoeffs = SoftwareCoeffs()
    transfer_fixed_ns: int = 25000
    transfer_per_task_ns: int = 6550
    result_fixed_ns: int = 5450

    def __post_init__(self):
        if min(self.transfer_fixed_ns, self.transfer_per_task_ns, self.result_fixed_ns) < 0:
            raise ValueError("transfer terms must be non-negative")

    @classmethod
    def zero(cls) -> "OverheadModel":
        return cls(SoftwareCoeffs(0, 0, 0), 0, 0, 0)

    def software_ns(self, n: int) -> int:
        return sw_overhead_model(n, self.sw)

    def hardware_ns(self, n: int, cycles: int, config: HwConfig) -> int:
        """One hardware batch: transfer in, compute, results out."""
        compute = (cycles * config.clock_period_ps + 500) // 1000
        return self.transfer_fixed_ns + self.transfer_per_task_ns * n + self.result_fixed_ns + compute

    def hardware_compute_ns(self, cycles: int, config: HwConfig) -> int:
        return (cycles * config.clock_period_ps + 500) // 1000


@dataclass
class PeState:
    busy_until: int = 0
    assigned: deque = field(default_factory=deque)
    running: Optional[tuple] = None
    log: list = field(default_factory=list)  # (instance_id, node, start, finish)


@dataclass(frozen=True)
class InstanceMetrics:
    instance_id: int
    template: str
    arrival_ns: int
    start_ns: int
    finish_ns: int
    cumulative_exec_ns: int
    app_exec_ns: int


@dataclass(frozen=True)
class EventRecord:
    time_ns: int
    n: int
    overhead_ns: int
    decisions: tuple  # (instance_id, node, pe)
    cycles: int = 0


@dataclass
class MetricsReport:
    scheduler: str
    instances: list
    events: list
    pe_logs: list
    saturation_events: int = 0
    first_arrival_ns: int = 0
    last_completion_ns: int = 0

    @property
    def achieved_frame_rate(self) -> float:
        return achieved_frame_rate(self)


class _Sim:
    # heap entry kinds; at equal times completions precede arrivals, which
    # precede mapping-event ends
    FINISH, ARRIVAL, MAP_END = 0, 1, 2

    def __init__(self, spec, scheduler, hw_config, overhead, seed, quantize_sw, trace, cycle_trace):
        self.spec = spec
        self.kind = scheduler
        self.cfg = hw_config
        self.ovh = overhead
        self.quantize_sw = quantize_sw
        self.trace = trace
        self.cycle_trace = cycle_trace
        self.p = spec.p
        self.pes = [PeState() for _ in range(self.p)]
        self.heap = []
        self.seq = 0
        self.ready = []  # (instance_id, node) in the order they became ready
        self.mapping = False
        self.events = []
        self.saturation = 0
        self.hw = None
        if scheduler == "hw":
            self.hw = HwScheduler(hw_config, trace=[] if cycle_trace is not None else None)
        if self.hw is not None and hw_config.p != self.p:
            raise ValueError(f"hardware config has p={hw_config.p}, workload declares {self.p} PEs")

        arrivals = []
        for idx, entry in enumerate(spec.schedule):
            sub_seed = int(np.random.SeedSequence([seed, idx, entry.seed]).generate_state(1)[0])
            for k, t in enumerate(generate_arrivals(entry, sub_seed)):
                arrivals.append((t, idx, k, entry.template))
        arrivals.sort()
        self.instances = []
        self.tid_base = []
        base = 0
        for iid, (t, _, _, name) in enumerate(arrivals):
            dag = spec.template(name)
            self.instances.append(AppInstance(iid, dag, t))
            self.tid_base.append(base)
            base += dag.n_nodes
            self.push(t, self.ARRIVAL, iid)
        self.succs = {d.template_name: d.successors() for d in spec.templates}
        self.preds = {d.template_name: d.predecessors() for d in spec.templates}
        self.first_event_start = [None] * len(self.instances)

    def push(self, t, kind, payload):
        heapq.heappush(self.heap, (t, kind, self.seq, payload))
        self.seq += 1

    def run(self):
        while self.heap:
            now = self.heap[0][0]
            while self.heap and self.heap[0][0] == now:
                _, kind, _, payload = heapq.heappop(self.heap)
                if kind == self.FINISH:
                    self.on_finish(now, payload)
                elif kind == self.ARRIVAL:
                    self.on_arrival(now, payload)
                else:
                    self.on_map_end(now, payload)
            if self.ready and not self.mapping:
                self.start_mapping(now)

    def make_ready(self, inst, node):
        inst.advance(node, NodeState.READY)
        self.ready.append((inst.instance_id, node))

    def on_arrival(self, now, iid):
        inst = self.instances[iid]
        preds = self.preds[inst.dag.template_name]
        for v in range(inst.dag.n_nodes):
            if not preds[v]:
                self.make_ready(inst, v)

    def on_finish(self, now, pe_id):
        pe = self.pes[pe_id]
        iid, node = pe.running
        pe.running = None
        inst = self.instances[iid]
        inst.advance(node, NodeState.DONE)
        inst.finish[node] = now
        preds = self.preds[inst.dag.template_name]
        for v in self.succs[inst.dag.template_name][node]:
            if all(inst.state[u] == NodeState.DONE for u in preds[v]):
                self.make_ready(inst, v)
        self.start_next(now, pe_id)

    def start_next(self, now, pe_id):
        pe = self.pes[pe_id]
        if pe.running is not None or not pe.assigned:
            return
        iid, node = pe.assigned.popleft()
        inst = self.instances[iid]
        start = max(now, pe.busy_until)
        dur = inst.dag.nodes[node].exec[pe_id]
        finish = add_time(start, dur)
        inst.advance(node, NodeState.RUNNING)
        inst.start[node] = start
        pe.running = (iid, node)
        pe.busy_until = finish
        pe.log.append((iid, node, start, finish))
        self.push(finish, self.FINISH, pe_id)

    def record(self, iid, node) -> TaskRecord:
        inst = self.instances[iid]
        return TaskRecord.from_exec(self.tid_base[iid] + node, inst.dag.nodes[node].exec)

    def est_avail_ns(self, now):
        """Estimated time until each PE drains its FIFO, relative to ``now``."""
        out = []
        for pe_id, pe in enumerate(self.pes):
            t = max(now, pe.busy_until)
            for iid, node in pe.assigned:
                t += self.instances[iid].dag.nodes[node].exec[pe_id]
            out.append(t - now)
        return out

    def start_mapping(self, now):
        batch = self.ready
        self.ready = []
        self.mapping = True
        for iid, node in batch:
            inst = self.instances[iid]
            inst.advance(node, NodeState.SCHEDULED)
            if self.first_event_start[iid] is None:
                self.first_event_start[iid] = now
        by_tid = {self.tid_base[iid] + node: (iid, node) for iid, node in batch}
        records = [self.record(iid, node) for iid, node in batch]
        avail_ns = self.est_avail_ns(now)
        n = len(records)
        cycles = 0
        if self.kind == "hw":
            cfg = self.cfg
            decisions = []
            overhead = 0
            self.hw.avail = [quantize_avail(a, cfg) for a in avail_ns]
            self.saturation += sum(quantize_avail(a, cfg) == cfg.accum_max for a in avail_ns)
            for lo in range(0, n, cfg.d):
                chunk = records[lo:lo + cfg.d]
                before = self.hw.saturation_events
                decs, stats = self.hw.run_event(list(self.hw.avail), chunk)
                self.saturation += self.hw.saturation_events - before
                decisions.extend(decs)
                if self.cycle_trace is not None:
                    ev = len(self.events)
                    self.cycle_trace.extend((ev, *row) for row in self.hw.trace)
                    self.hw.trace.clear()
                cycles += stats.total_cycles
                overhead += self.ovh.hardware_ns(len(chunk), stats.total_cycles, cfg)
        else:
            if self.quantize_sw:
                cfg = self.cfg
                recs = [quantize_record(r, cfg) for r in records]
                avail = tuple(quantize_avail(a, cfg) for a in avail_ns)
                cap = cfg.accum_max
            else:
                recs, avail, cap = records, tuple(avail_ns), None
            inp = SchedulerInput(tuple(recs), avail)
            fn = heft_rt_schedule if self.kind == "sw" else fifo_schedule
            decisions, _ = fn(inp, finish_cap=cap)
            overhead = self.ovh.software_ns(n)
        mapped = tuple((*by_tid[d.tid], d.pe_id) for d in decisions)
        self.events.append(EventRecord(now, n, overhead, mapped, cycles))
        if self.trace is not None:
            self.trace.append((now, n, overhead, ";".join(f"{d.tid}:{d.pe_id}" for d in decisions)))
        self.push(add_time(now, overhead), self.MAP_END, mapped)

    def on_map_end(self, now, mapped):
        self.mapping = False
        touched = []
        for iid, node, pe_id in mapped:
            self.instances[iid].pe[node] = pe_id
            self.pes[pe_id].assigned.append((iid, node))
            touched.append(pe_id)
        for pe_id in sorted(set(touched)):
            self.start_next(now, pe_id)

    def report(self) -> MetricsReport:
        rows = []
        for inst in self.instances:
            if not inst.complete:
                raise Incomplete(f"instance {inst.instance_id} did not complete")
            rows.append(_instance_metrics(inst, self.first_event_start[inst.instance_id]))
        return MetricsReport(
            scheduler=self.kind,
            instances=rows,
            events=self.events,
            pe_logs=[pe.log for pe in self.pes],
            saturation_events=self.saturation,
            first_arrival_ns=min(i.arrival_time for i in self.instances),
            last_completion_ns=max(r.finish_ns for r in rows),
        )


def _instance_metrics(inst: AppInstance, start_ns: int) -> InstanceMetrics:
    finish = max(inst.finish)
    return InstanceMetrics(
        instance_id=inst.instance_id,
        template=inst.dag.template_name,
        arrival_ns=inst.arrival_time,
        start_ns=start_ns,
        finish_ns=finish,
        cumulative_exec_ns=cumulative_exec_time(inst),
        app_exec_ns=finish - start_ns,
    )


def simulate(
    spec: WorkloadSpec,
    scheduler: str = "sw",
    hw_config: HwConfig = HwConfig(),
    overhead: OverheadModel = OverheadModel(),
    seed: int = 0,
    quantize_sw: bool = False,
    trace: Optional[list] = None,
    cycle_trace: Optional[list] = None,
) -> MetricsReport:
    """Run one workload to completion and collect metrics.

    ``quantize_sw`` makes the software engines see the same quantized inputs
    as the hardware model.  ``trace`` collects one row per mapping event and
    ``cycle_trace`` one row per hardware scheduler cycle.
    """
    if scheduler not in SCHEDULERS:
        raise ValueError(f"unknown scheduler {scheduler!r}; choose from {SCHEDULERS}")
    validate_spec(spec)
    sim = _Sim(spec, scheduler, hw_config, overhead, seed, quantize_sw, trace, cycle_trace)
    sim.run()
    return sim.report()


def cumulative_exec_time(inst: AppInstance) -> int:
    """Sum of task execution times on the PEs that ran them, overhead excluded."""
    if not inst.complete:
        raise Incomplete(f"instance {inst.instance_id} is not complete")
    return sum(inst.finish[v] - inst.start[v] for v in range(inst.dag.n_nodes))


def app_exec_time(inst: AppInstance, start_ns: Optional[int] = None) -> int:
    """Last task finish minus the instance start.

    The start defaults to the first task start; the simulator passes the start
    of the mapping event that dispatched the instance's first tasks, so the
    first scheduling decision is included.
    """
    if not inst.complete:
        raise Incomplete(f"instance {inst.instance_id} is not complete")
    if start_ns is None:
        start_ns = min(inst.start)
    return max(inst.finish) - start_ns


def achieved_frame_rate(report: MetricsReport, window: Optional[tuple] = None) -> float:
    """Completed instances per second between first arrival and last completion.

    ``window`` optionally restricts to instances arriving in ``[lo, hi)`` ns.
    """
    rows = report.instances
    if window is not None:
        lo, hi = window
        rows = [r for r in rows if lo <= r.arrival_ns < hi]
    if not rows:
        raise NoCompletions("no completed instances")
    span = max(r.finish_ns for r in rows) - min(r.arrival_ns for r in rows)
    return len(rows) * 1e9 / span


def scheduling_overhead_series(report: MetricsReport) -> list:
    return [(e.n, e.overhead_ns) for e in report.events]
