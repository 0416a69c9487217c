"""Workload specifications, built-in application templates and arrival times.

Workload files are YAML with an explicit ``schema_version``::

    schema_version: 1
    pes:
      - {id: 0, name: A53-0}
      - {id: 1, name: FFT}
    templates:
      RC:
        frame_size_kb: 1280
        nodes:
          - {id: 0, name: lfm, exec: {A53-0: 40000, FFT: null}}
          - {id: 1, name: fft, exec: {A53-0: 90000, FFT: 9000}}
        edges: [[0, 1]]
    schedule:
      - {template: RC, count: 20, rate_fps: 100, process: periodic, seed: 0}

Execution times are integer nanoseconds; ``null`` marks a PE that cannot
run the node.  Every node must list every declared PE.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np
import yaml

from .core import AppDag, DagError, HeftError, PeDescriptor, TaskTemplate, validate_dag

SCHEMA_VERSION = 1
PROCESSES = ("periodic", "poisson")


class ParseError(HeftError):
    def __init__(self, message: str, line: Optional[int] = None, field: Optional[str] = None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)
        self.line = line
        self.field = field


class ValidationError(HeftError):
    def __init__(self, message: str, template: Optional[str] = None):
        super().__init__(f"template {template!r}: {message}" if template else message)
        self.template = template


@dataclass(frozen=True)
class ScheduleEntry:
    template: str
    count: int
    rate_fps: float
    process: str = "periodic"
    seed: int = 0


@dataclass(frozen=True)
class WorkloadSpec:
    pes: tuple
    templates: tuple
    schedule: tuple
    frame_size_kb: dict = field(default_factory=dict, compare=True)

    @property
    def p(self) -> int:
        return len(self.pes)

    def template(self, name: str) -> AppDag:
        for t in self.templates:
            if t.template_name == name:
                return t
        raise KeyError(name)

    @property
    def total_instances(self) -> int:
        return sum(e.count for e in self.schedule)

    def with_target_rate(self, target_fps: float, process: Optional[str] = None) -> "WorkloadSpec":
        """Split a total target frame rate across entries in proportion to count."""
        total = self.total_instances
        sched = tuple(
            replace(e, rate_fps=target_fps * e.count / total, process=process or e.process)
            for e in self.schedule
        )
        return replace(self, schedule=sched)


def validate_spec(spec: WorkloadSpec) -> None:
    ids = [pe.pe_id for pe in spec.pes]
    if not ids or ids != list(range(len(ids))):
        raise ValidationError("PE ids must be dense from 0")
    names = [pe.name for pe in spec.pes]
    if len(set(names)) != len(names):
        raise ValidationError("PE names must be unique")
    seen = set()
    for dag in spec.templates:
        if dag.template_name in seen:
            raise ValidationError("duplicate template", dag.template_name)
        seen.add(dag.template_name)
        try:
            validate_dag(dag)
        except DagError as exc:
            raise ValidationError(str(exc), dag.template_name) from exc
        for node in dag.nodes:
            if len(node.exec) != spec.p:
                raise ValidationError(
                    f"node {node.node_id} exec table has {len(node.exec)} entries for {spec.p} PEs",
                    dag.template_name,
                )
            if all(t is None for t in node.exec):
                raise ValidationError(f"node {node.node_id} has no supported PE", dag.template_name)
            if any(t is not None and (not isinstance(t, int) or t < 1) for t in node.exec):
                raise ValidationError(
                    f"node {node.node_id} exec times must be integers >= 1 ns", dag.template_name
                )
    for e in spec.schedule:
        if e.template not in seen:
            raise ValidationError("schedule references an unknown template", e.template)
        if e.count < 1:
            raise ValidationError("instance count must be >= 1", e.template)
        if not e.rate_fps > 0:
            raise ValidationError("rate must be > 0", e.template)
        if e.process not in PROCESSES:
            raise ValidationError(f"unknown arrival process {e.process!r}", e.template)


# -- file format ---------------------------------------------------------------


def _require(mapping, key, path):
    if not isinstance(mapping, dict):
        raise ParseError("expected a mapping", field=path)
    if key not in mapping:
        raise ParseError("missing required key", field=f"{path}.{key}" if path else key)
    return mapping[key]


def _as_int(value, path):
    if isinstance(value, bool) or not isinstance(value, int):
        raise ParseError(f"expected an integer, got {value!r}", field=path)
    return value


def spec_from_dict(doc) -> WorkloadSpec:
    version = _require(doc, "schema_version", "")
    if version != SCHEMA_VERSION:
        raise ParseError(f"unsupported schema_version {version!r}", field="schema_version")

    pes = []
    for i, pe in enumerate(_require(doc, "pes", "") or []):
        pes.append(PeDescriptor(_as_int(_require(pe, "id", f"pes[{i}]"), f"pes[{i}].id"),
                                str(_require(pe, "name", f"pes[{i}]"))))
    pe_names = [pe.name for pe in pes]

    templates, frame_sizes = [], {}
    tdoc = _require(doc, "templates", "")
    if not isinstance(tdoc, dict):
        raise ParseError("expected a mapping of templates", field="templates")
    for name, body in tdoc.items():
        path = f"templates.{name}"
        nodes = []
        for j, nd in enumerate(_require(body, "nodes", path) or []):
            npath = f"{path}.nodes[{j}]"
            exec_map = _require(nd, "exec", npath)
            if not isinstance(exec_map, dict):
                raise ParseError("exec must map PE name to nanoseconds", field=f"{npath}.exec")
            unknown = set(exec_map) - set(pe_names)
            if unknown:
                raise ValidationError(
                    f"node {j} references undeclared PE(s) {sorted(map(str, unknown))}", name
                )
            missing = [pn for pn in pe_names if pn not in exec_map]
            if missing:
                raise ValidationError(f"node {j} exec table does not cover PE(s) {missing}", name)
            table = tuple(
                None if exec_map[pn] is None else _as_int(exec_map[pn], f"{npath}.exec.{pn}")
                for pn in pe_names
            )
            nodes.append(TaskTemplate(_as_int(_require(nd, "id", npath), f"{npath}.id"),
                                      str(nd.get("name", f"n{j}")), table))
        edges = []
        for k, e in enumerate(body.get("edges") or []):
            if not isinstance(e, (list, tuple)) or len(e) != 2:
                raise ParseError("edge must be a [pred, succ] pair", field=f"{path}.edges[{k}]")
            edges.append((_as_int(e[0], f"{path}.edges[{k}]"), _as_int(e[1], f"{path}.edges[{k}]")))
        templates.append(AppDag(str(name), tuple(nodes), tuple(edges)))
        if "frame_size_kb" in body:
            frame_sizes[str(name)] = body["frame_size_kb"]

    schedule = []
    for i, ent in enumerate(_require(doc, "schedule", "") or []):
        path = f"schedule[{i}]"
        rate = _require(ent, "rate_fps", path)
        if isinstance(rate, bool) or not isinstance(rate, (int, float)):
            raise ParseError(f"expected a number, got {rate!r}", field=f"{path}.rate_fps")
        schedule.append(ScheduleEntry(
            template=str(_require(ent, "template", path)),
            count=_as_int(_require(ent, "count", path), f"{path}.count"),
            rate_fps=float(rate),
            process=str(ent.get("process", "periodic")),
            seed=_as_int(ent.get("seed", 0), f"{path}.seed"),
        ))

    spec = WorkloadSpec(tuple(pes), tuple(templates), tuple(schedule), frame_sizes)
    validate_spec(spec)
    return spec


def spec_to_dict(spec: WorkloadSpec) -> dict:
    names = [pe.name for pe in spec.pes]
    templates = {}
    for dag in spec.templates:
        body = {}
        if dag.template_name in spec.frame_size_kb:
            body["frame_size_kb"] = spec.frame_size_kb[dag.template_name]
        body["nodes"] = [
            {"id": n.node_id, "name": n.name, "exec": dict(zip(names, n.exec))} for n in dag.nodes
        ]
        body["edges"] = [list(e) for e in dag.edges]
        templates[dag.template_name] = body
    return {
        "schema_version": SCHEMA_VERSION,
        "pes": [{"id": pe.pe_id, "name": pe.name} for pe in spec.pes],
        "templates": templates,
        "schedule": [
            {"template": e.template, "count": e.count, "rate_fps": e.rate_fps,
             "process": e.process, "seed": e.seed}
            for e in spec.schedule
        ],
    }


def loads_spec(text: str) -> WorkloadSpec:
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ParseError(f"malformed YAML: {getattr(exc, 'problem', exc)}",
                         line=mark.line + 1 if mark else None) from exc
    return spec_from_dict(doc)


def dumps_spec(spec: WorkloadSpec) -> str:
    return yaml.safe_dump(spec_to_dict(spec), sort_keys=False, default_flow_style=None)


def load_spec(path) -> WorkloadSpec:
    """Parse and validate a workload file, or a built-in name (``low``/``high``)."""
    if str(path) in BUILTIN_SPECS:
        return builtin_spec(str(path))
    return loads_spec(Path(path).read_text())


def save_spec(spec: WorkloadSpec, path) -> None:
    Path(path).write_text(dumps_spec(spec))


# -- arrivals -----------------------------------------------------------------


def generate_arrivals(entry: ScheduleEntry, seed: Optional[int] = None) -> list:
    """Arrival times in ns for one schedule entry, starting at 0.

    Poisson arrivals draw exponential gaps from a generator seeded by
    ``seed`` (default: the entry's own seed).  The gaps are a fixed unit
    draw scaled by ``1/rate``, so one seed gives proportional arrival
    patterns across rates.
    """
    period_ns = 1e9 / entry.rate_fps
    if entry.process == "periodic":
        return [math.floor(k * period_ns + 0.5) for k in range(entry.count)]
    rng = np.random.default_rng(entry.seed if seed is None else seed)
    gaps = rng.standard_exponential(entry.count - 1) * period_ns
    times = np.concatenate(([0.0], np.cumsum(gaps)))
    return [math.floor(t + 0.5) for t in times]


# -- built-in templates --------------------------------------------------------

BUILTIN_PES = (
    PeDescriptor(0, "A53-0"),
    PeDescriptor(1, "A53-1"),
    PeDescriptor(2, "A53-2"),
    PeDescriptor(3, "FFT"),
)

def _cpu(t_ns):
    # plain CPU kernel: same cost on each core, no accelerator support
    return (t_ns, t_ns, t_ns, None)


def _fft(cpu_ns, speedup):
    return (cpu_ns, cpu_ns, cpu_ns, round(cpu_ns / speedup))


def _dag(name, nodes, edges):
    return AppDag(name, tuple(TaskTemplate(i, n, e) for i, (n, e) in enumerate(nodes)), tuple(edges))


def builtin_templates() -> tuple:
    """Radar correlator, temporal interference mitigation, pulse Doppler and
    WiFi TX shaped DAGs over three CPU cores and one FFT accelerator.

    The execution tables are synthetic fixtures: RC and TM are short, PD and
    TX several times longer, and FFT nodes run 5-20x faster on the accelerator.
    Kernels are microsecond-scale, so per-event scheduling cost is not
    negligible next to task execution.
    """
    rc = _dag("RC", [
        ("lfm_gen", _cpu(1_200)),
        ("fft_rx", _fft(6_000, 8)),
        ("fft_ref", _fft(6_000, 8)),
        ("mult", _cpu(1_500)),
        ("ifft", _fft(6_000, 8)),
        ("peak", _cpu(1_000)),
    ], [(0, 1), (0, 2), (1, 3), (2, 3), (3, 4), (4, 5)])

    tm = _dag("TM", [("split", _cpu(800))]
              + [(f"fft_{i}", _fft(3_000, 6)) for i in range(3)]
              + [(f"mitigate_{i}", _cpu(2_000)) for i in range(3)]
              + [(f"ifft_{i}", _fft(3_000, 6)) for i in range(3)]
              + [("merge", _cpu(800))],
              [(0, 1), (0, 2), (0, 3)]
              + [(1 + i, 4 + i) for i in range(3)]
              + [(4 + i, 7 + i) for i in range(3)]
              + [(7 + i, 10) for i in range(3)])

    pd = _dag("PD", [("init", _cpu(4_000))]
              + [(f"fft_pulse_{i}", _fft(40_000, 12)) for i in range(4)]
              + [(f"mult_{i}", _cpu(18_000)) for i in range(4)]
              + [(f"ifft_pulse_{i}", _fft(40_000, 12)) for i in range(4)]
              + [("doppler_fft", _fft(90_000, 15)), ("detect", _cpu(25_000))],
              [(0, 1 + i) for i in range(4)]
              + [(1 + i, 5 + i) for i in range(4)]
              + [(5 + i, 9 + i) for i in range(4)]
              + [(9 + i, 13) for i in range(4)]
              + [(13, 14)])

    tx = _dag("TX", [("scramble", _cpu(12_000)), ("encode", _cpu(30_000)),
                     ("interleave", _cpu(15_000))]
              + [(f"modulate_{i}", _cpu(16_000)) for i in range(3)]
              + [(f"ifft_sym_{i}", _fft(35_000, 10)) for i in range(3)]
              + [("cyclic_prefix", _cpu(20_000))],
              [(0, 1), (1, 2)]
              + [(2, 3 + i) for i in range(3)]
              + [(3 + i, 6 + i) for i in range(3)]
              + [(6 + i, 9) for i in range(3)])
    return rc, tm, pd, tx


FRAME_SIZE_KB = {"RC": 1280, "TM": 1280, "PD": 1037, "TX": 1037}

BUILTIN_SPECS = ("low", "high")


def builtin_spec(name: str, rate_fps: float = 100.0, process: str = "periodic") -> WorkloadSpec:
    """``low``: 20 RC + 20 TM frames.  ``high``: 10 PD + 10 TX frames.

    ``rate_fps`` is the total target frame rate across the workload.
    """
    if name == "low":
        counts = {"RC": 20, "TM": 20}
    elif name == "high":
        counts = {"PD": 10, "TX": 10}
    else:
        raise KeyError(f"unknown built-in workload {name!r}; choose from {BUILTIN_SPECS}")
    schedule = tuple(
        ScheduleEntry(t, c, rate_fps * c / sum(counts.values()), process, seed=i)
        for i, (t, c) in enumerate(counts.items())
    )
    spec = WorkloadSpec(BUILTIN_PES, builtin_templates(), schedule, dict(FRAME_SIZE_KB))
    validate_spec(spec)
    return spec


def paper29_rates(lo: float = 20.0, hi: float = 200_000.0) -> list:
    """29 log-spaced target frame rates, from light load to heavy oversubscription."""
    return [float(r) for r in np.geomspace(lo, hi, 29)]
