import random

import pytest

from heftrt.core import AppDag, PeDescriptor, TaskTemplate
from heftrt.workload import ScheduleEntry, WorkloadSpec

_ACCEPTANCE = []


def record_criterion(number, name, passed, detail=""):
    _ACCEPTANCE.append((number, name, passed, detail))


@pytest.fixture
def criterion():
    return record_criterion


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, name, passed, detail in sorted(_ACCEPTANCE, key=lambda r: r[0]):
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{status}] {number}. {name}: {detail}")


def chain_dag(times, name="chain"):
    nodes = tuple(TaskTemplate(i, f"t{i}", tuple(t) if isinstance(t, (list, tuple)) else (t,))
                  for i, t in enumerate(times))
    edges = tuple((i, i + 1) for i in range(len(times) - 1))
    return AppDag(name, nodes, edges)


def single_template_spec(dag, count=1, rate=10.0, p=1, process="periodic"):
    pes = tuple(PeDescriptor(i, f"pe{i}") for i in range(p))
    return WorkloadSpec(pes, (dag,), (ScheduleEntry(dag.template_name, count, rate, process),), {})


def random_dag(rng: random.Random, n_nodes, p, name="rand", edge_prob=0.35, unsupported_prob=0.15,
               exec_range=(1_000, 80_000)):
    nodes = []
    for i in range(n_nodes):
        row = [rng.randint(*exec_range) for _ in range(p)]
        for k in range(p):
            if rng.random() < unsupported_prob:
                row[k] = None
        if all(t is None for t in row):
            row[rng.randrange(p)] = rng.randint(*exec_range)
        nodes.append(TaskTemplate(i, f"n{i}", tuple(row)))
    edges = tuple((u, v) for v in range(n_nodes) for u in range(v) if rng.random() < edge_prob)
    return AppDag(name, tuple(nodes), edges)


def random_workload(rng: random.Random):
    p = rng.randint(1, 4)
    pes = tuple(PeDescriptor(i, f"pe{i}") for i in range(p))
    n_templates = rng.randint(1, 3)
    templates = tuple(random_dag(rng, rng.randint(1, 8), p, name=f"T{k}") for k in range(n_templates))
    schedule = tuple(
        ScheduleEntry(t.template_name, rng.randint(1, 6), rng.choice([500.0, 5_000.0, 50_000.0]),
                      rng.choice(["periodic", "poisson"]), seed=rng.randint(0, 99))
        for t in templates
    )
    return WorkloadSpec(pes, templates, schedule, {})


def check_invariants(spec, report):
    """Causality, PE exclusivity and conservation for a finished run.

    Returns a list of violation messages (empty when all hold).
    """
    problems = []
    dags = {d.template_name: d for d in spec.templates}
    templates = {r.instance_id: r.template for r in report.instances}
    arrivals = {r.instance_id: r.arrival_ns for r in report.instances}
    runs = {}
    for pe_id, log in enumerate(report.pe_logs):
        prev_finish = None
        for iid, node, start, finish in sorted(log, key=lambda r: r[2]):
            if (iid, node) in runs:
                problems.append(f"task {(iid, node)} ran twice")
            runs[(iid, node)] = (pe_id, start, finish)
            dag = dags[templates[iid]]
            if finish - start != dag.nodes[node].exec[pe_id]:
                problems.append(f"task {(iid, node)} duration mismatch on PE {pe_id}")
            if prev_finish is not None and start < prev_finish:
                problems.append(f"PE {pe_id} overlaps at {start}")
            prev_finish = finish
    mapped_end = {}
    for ev in report.events:
        for iid, node, pe in ev.decisions:
            if (iid, node) in mapped_end:
                problems.append(f"task {(iid, node)} mapped twice")
            mapped_end[(iid, node)] = (ev.time_ns + ev.overhead_ns, pe, ev.time_ns)
    expected = {(iid, v) for iid, t in templates.items() for v in range(dags[t].n_nodes)}
    if set(runs) != expected:
        problems.append("executed task set differs from the submitted task set")
    if set(mapped_end) != expected:
        problems.append("mapped task set differs from the submitted task set")
    for (iid, node), (pe, start, finish) in runs.items():
        dag = dags[templates[iid]]
        end, mapped_pe, ev_time = mapped_end.get((iid, node), (None, None, None))
        if end is None:
            continue
        if mapped_pe != pe:
            problems.append(f"task {(iid, node)} ran on {pe}, mapped to {mapped_pe}")
        if start < end:
            problems.append(f"task {(iid, node)} started before its mapping event ended")
        if ev_time < arrivals[iid]:
            problems.append(f"task {(iid, node)} mapped before its instance arrived")
        for u, v in dag.edges:
            if v == node and (iid, u) in runs:
                u_finish = runs[(iid, u)][2]
                if ev_time < u_finish:
                    problems.append(f"task {(iid, node)} mapped before predecessor {u} finished")
    return problems
