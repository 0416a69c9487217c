"""Discrete-event simulation of a heterogeneous runtime with software and
cycle-level hardware HEFT_RT schedulers."""

from .core import (
    UNSUPPORTED,
    AppDag,
    AppInstance,
    MappingDecision,
    PeDescriptor,
    TaskRecord,
    TaskTemplate,
    ready_nodes,
    task_average,
    validate_dag,
)
from .hw import HwConfig, HwScheduler, event_latency_ns, quantize
from .sim import OverheadModel, simulate
from .sw import SchedulerInput, SoftwareCoeffs, fifo_schedule, heft_rt_schedule
from .workload import builtin_spec, load_spec, save_spec

__version__ = "0.1.0"
