"""Domain types shared by the schedulers and the runtime simulator.

All runtime times are integer nanoseconds.  A PE that cannot run a task is
marked with :data:`UNSUPPORTED` in that task's execution-time table.
"""

from __future__ import annotations

import enum
import heapq
from dataclasses import dataclass, field
from typing import Optional, Sequence

# Largest representable simulation time; sums beyond it are a hard error.
TIME_MAX = 2**63 - 1

UNSUPPORTED = None

ExecTable = tuple  # tuple[int | None, ...], one entry per PE


class HeftError(Exception):
    """Base class for errors raised by this package."""


class TimeOverflow(HeftError):
    pass


class NoSupportedPe(HeftError):
    pass


class DagError(HeftError):
    pass


class CycleDetected(DagError):
    def __init__(self, node: int):
        super().__init__(f"cycle detected through node {node}")
        self.node = node


class DanglingEdge(DagError):
    pass


class EmptyDag(DagError):
    pass


class Incomplete(HeftError):
    pass


def add_time(a: int, b: int) -> int:
    """Checked addition of two simulation times."""
    s = a + b
    if s > TIME_MAX or s < 0:
        raise TimeOverflow(f"{a} + {b} leaves the representable time range")
    return s


def task_average(exec_times: Sequence[Optional[int]]) -> int:
    """Mean over supported PEs, rounded half up to an integer.

    >>> task_average([3, 4])
    4
    >>> task_average([10, None])
    10
    """
    supported = [t for t in exec_times if t is not UNSUPPORTED]
    if not supported:
        raise NoSupportedPe("task has no supported PE")
    total, count = sum(supported), len(supported)
    # floor(total / count + 1/2) in exact integer arithmetic
    return (2 * total + count) // (2 * count)


@dataclass(frozen=True)
class PeDescriptor:
    pe_id: int
    name: str


@dataclass(frozen=True)
class TaskRecord:
    """One schedulable task: per-PE execution times and their average.

    ``exec`` and ``avg`` share a unit: nanoseconds for runtime records, scheduler
    time units for quantized records.  Use :meth:`from_exec` to build a runtime
    record with the average derived from the table.
    """

    tid: int
    exec: ExecTable
    avg: int

    def __post_init__(self):
        if all(t is UNSUPPORTED for t in self.exec):
            raise NoSupportedPe(f"task {self.tid} has no supported PE")
        if any(t is not UNSUPPORTED and t < 0 for t in self.exec):
            raise ValueError(f"task {self.tid} has a negative execution time")

    @classmethod
    def from_exec(cls, tid: int, exec_times: Sequence[Optional[int]]) -> "TaskRecord":
        exec_times = tuple(exec_times)
        if any(t is not UNSUPPORTED and t < 1 for t in exec_times):
            raise ValueError(f"task {tid}: execution times must be >= 1 ns")
        return cls(tid, exec_times, task_average(exec_times))

    @property
    def supported(self) -> tuple:
        return tuple(i for i, t in enumerate(self.exec) if t is not UNSUPPORTED)


@dataclass(frozen=True)
class MappingDecision:
    tid: int
    pe_id: int
    predicted_finish: int


@dataclass(frozen=True)
class TaskTemplate:
    node_id: int
    name: str
    exec: ExecTable


@dataclass(frozen=True)
class AppDag:
    template_name: str
    nodes: tuple  # tuple[TaskTemplate, ...]
    edges: tuple  # tuple[tuple[int, int], ...]

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    def predecessors(self) -> list:
        preds = [[] for _ in self.nodes]
        for u, v in self.edges:
            preds[v].append(u)
        return preds

    def successors(self) -> list:
        succs = [[] for _ in self.nodes]
        for u, v in self.edges:
            succs[u].append(v)
        return succs


def validate_dag(dag: AppDag) -> list:
    """Check structure and return the deterministic topological order.

    Kahn's algorithm, always releasing the lowest ready node id first.
    Raises :class:`EmptyDag`, :class:`DanglingEdge` or :class:`CycleDetected`.
    """
    n = len(dag.nodes)
    if n == 0:
        raise EmptyDag(f"template {dag.template_name!r} has no nodes")
    for i, node in enumerate(dag.nodes):
        if node.node_id != i:
            raise DagError(
                f"template {dag.template_name!r}: node ids must be dense from 0, "
                f"found {node.node_id} at position {i}"
            )
    indeg = [0] * n
    succs = [[] for _ in range(n)]
    for u, v in dag.edges:
        if not (0 <= u < n and 0 <= v < n):
            raise DanglingEdge(f"edge ({u}, {v}) references a missing node")
        succs[u].append(v)
        indeg[v] += 1
    heap = [i for i in range(n) if indeg[i] == 0]
    heapq.heapify(heap)
    order = []
    while heap:
        u = heapq.heappop(heap)
        order.append(u)
        for v in succs[u]:
            indeg[v] -= 1
            if indeg[v] == 0:
                heapq.heappush(heap, v)
    if len(order) < n:
        raise CycleDetected(_node_on_cycle(n, succs, indeg))
    return order


def _node_on_cycle(n, succs, indeg) -> int:
    # Every leftover node has a leftover predecessor, so walking predecessors
    # must revisit a node; that node lies on a cycle.
    left = {i for i in range(n) if indeg[i] > 0}
    preds = {v: [] for v in left}
    for u in left:
        for v in succs[u]:
            if v in left:
                preds[v].append(u)
    u = min(left)
    seen = set()
    while u not in seen:
        seen.add(u)
        u = min(preds[u])
    return u


class NodeState(enum.IntEnum):
    WAITING = 0
    READY = 1
    SCHEDULED = 2
    RUNNING = 3
    DONE = 4


@dataclass
class AppInstance:
    """A live application instance; node states only ever move forward."""

    instance_id: int
    dag: AppDag
    arrival_time: int
    state: list = field(default=None)
    start: list = field(default=None)
    finish: list = field(default=None)
    pe: list = field(default=None)

    def __post_init__(self):
        n = self.dag.n_nodes
        if self.state is None:
            self.state = [NodeState.WAITING] * n
        self.start = self.start or [None] * n
        self.finish = self.finish or [None] * n
        self.pe = self.pe or [None] * n
        self._preds = self.dag.predecessors()

    def advance(self, node: int, new_state: NodeState) -> None:
        if new_state <= self.state[node]:
            raise ValueError(
                f"instance {self.instance_id} node {node}: illegal transition "
                f"{self.state[node].name} -> {new_state.name}"
            )
        self.state[node] = new_state

    @property
    def complete(self) -> bool:
        return all(s == NodeState.DONE for s in self.state)


def ready_nodes(instance: AppInstance) -> set:
    """Unscheduled nodes whose predecessors are all done."""
    preds = instance._preds
    st = instance.state
    return {
        v
        for v in range(instance.dag.n_nodes)
        if st[v] <= NodeState.READY and all(st[u] == NodeState.DONE for u in preds[v])
    }
