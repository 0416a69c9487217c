"""Acceptance criteria, one test per criterion.

Each test records a PASS/FAIL line that is printed in the terminal summary.
"""

import random
import time
from fractions import Fraction

import numpy as np
import pytest

from heftrt.cli import main
from heftrt.core import TaskRecord
from heftrt.hw import (
    HwConfig,
    HwScheduler,
    adversarial_tasks,
    asymptotic_latency_ns,
    event_latency_ns,
    quantize,
)
from heftrt.report import (
    detect_crossover,
    detect_saturation,
    overhead_curves,
    random_event,
    sweep,
    verify,
)
from heftrt.sim import OverheadModel, simulate
from heftrt.workload import builtin_spec, paper29_rates

from conftest import check_invariants, random_workload


@pytest.fixture(scope="module")
def verify_result():
    t0 = time.perf_counter()
    res = verify(1000, (1, 512), (2, 4, 8, 16), seed=0)
    return res, time.perf_counter() - t0


def test_1_decision_equivalence(verify_result, criterion):
    res, elapsed = verify_result
    ok = res.trials == 1000 and res.mismatches == 0 and res.avail_mismatches == 0 and elapsed < 30
    criterion(1, "decision equivalence", ok,
              f"{res.trials} events, {res.mismatches} mapping mismatches, "
              f"{res.avail_mismatches} availability mismatches, {elapsed:.1f} s (limit 30 s)")
    assert ok


def test_2_cycle_bounds(verify_result, criterion):
    res, _ = verify_result
    exact = {}
    for n in (2, 10, 100, 512):
        cfg = HwConfig(p=4)
        _, st = HwScheduler(cfg).run_event([0] * 4, adversarial_tasks(n, cfg))
        exact[n] = st.total_cycles
    ok = res.bound_violations == 0 and all(exact[n] == 3 * n + 3 for n in exact)
    criterion(2, "cycle bounds", ok,
              f"{res.bound_violations} bound violations in {res.trials} events; "
              f"adversarial totals {exact} vs 3n+3")
    assert ok


def test_3_decision_latency(criterion):
    n = 1000
    cfg = HwConfig(p=4, d=1024)
    _, st = HwScheduler(cfg).run_event([0] * 4, adversarial_tasks(n, cfg))
    _, per_task = event_latency_ns(st, cfg)
    expected = (3 * n + 3) / n * 3.048
    limit = asymptotic_latency_ns(cfg)
    rel = abs(per_task - 9.144) / 9.144
    ok = (st.total_cycles == 3 * n + 3 and abs(per_task - expected) < 1e-9 and rel <= 0.002
          and limit == Fraction("9.144"))
    criterion(3, "average decision latency", ok,
              f"per-task {per_task:.4f} ns at n={n} ({rel:.3%} from 9.144), limit {float(limit)} ns exact")
    assert ok


def test_4_sort_correctness(criterion):
    cfg = HwConfig(p=1)
    unit = cfg.time_unit_ns
    rng = random.Random(4)
    hw = HwScheduler(cfg)
    failures = 0
    t0 = time.perf_counter()
    for _ in range(10_000):
        n = rng.randint(1, 512)
        pool = [rng.randint(1, 65_535) * unit for _ in range(rng.randint(1, max(1, n // 8)))]
        tasks = []
        for tid in range(n):
            v = rng.choice(pool)
            tasks.append(TaskRecord(tid, (v,), v))
        decisions, _ = hw.run_event([0], tasks)
        ref = sorted(tasks, key=lambda r: -quantize(r.avg, cfg))
        if [d.tid for d in decisions] != [r.tid for r in ref]:
            failures += 1
    elapsed = time.perf_counter() - t0
    ok = failures == 0 and elapsed < 60
    criterion(4, "sort correctness", ok,
              f"10000 queues, {failures} order mismatches vs stable sort, {elapsed:.1f} s (limit 60 s)")
    assert ok


def test_5_overhead_scaling(criterion):
    cfg = HwConfig(p=4)
    ovh = OverheadModel()
    rng = random.Random(5)
    hw = HwScheduler(cfg)
    ns = np.arange(1, 513)
    compute = []
    measured_hw = {}
    for n in ns:
        tasks, avail = random_event(rng, int(n), cfg.p)
        _, st = hw.run_event(avail, tasks)
        compute.append(ovh.hardware_compute_ns(st.total_cycles, cfg))
        measured_hw[int(n)] = ovh.hardware_ns(int(n), st.total_cycles, cfg)
    compute = np.array(compute, dtype=float)
    slope, icpt = np.polyfit(ns, compute, 1)
    resid = compute - (slope * ns + icpt)
    r2 = 1 - resid.var() / compute.var()

    sw_series = [(n, ovh.software_ns(n)) for n in range(1, 513)]
    hw_series = [(n, measured_hw[n]) for n in range(1, 513)]
    n_star = detect_crossover(sw_series, hw_series)

    sw_a, hw_a = overhead_curves(range(1, 1331), ovh, cfg)
    ratio = [s / h for (_, s), (_, h) in zip(sw_a, hw_a)]
    lo = n_star or 1
    monotone = all(ratio[n - 1] > ratio[n - 2] for n in range(lo + 1, cfg.d + 1))
    dips = [n for n in range(lo + 1, 1331) if ratio[n - 1] <= ratio[n - 2]]

    sw_c, hw_c = overhead_curves([1330], ovh, cfg, include_transfer=False)
    compute_ratio = sw_c[0][1] / hw_c[0][1]
    ok = r2 >= 0.999 and n_star is not None and abs(n_star - 6) <= 1 and monotone and compute_ratio > 50
    criterion(5, "overhead scaling", ok,
              f"R2={r2:.5f}, n*={n_star}, sw/hw ratio monotone on [n*, {cfg.d}]={monotone} "
              f"(batch-boundary dips at {dips}), overall ratio at 1330={ratio[-1]:.2f}x, "
              f"compute-only ratio at 1330={compute_ratio:.0f}x")
    assert ok


def test_6_saturation(criterion):
    spec = builtin_spec("high")
    rates = paper29_rates()
    k, eps = 5, 0.05
    t0 = time.perf_counter()
    runs = {s: sweep(spec, s, rates, 5, HwConfig(p=spec.p), OverheadModel(), seed=0, process="poisson")
            for s in ("sw", "hw")}
    elapsed = time.perf_counter() - t0
    parts = []
    ok = elapsed < 300
    plateau = {}
    for s, res in runs.items():
        achieved = [a for _, a in res.achieved_series()]
        worst_drop = max(0.0, max((a - b) / a for a, b in zip(achieved, achieved[1:])))
        plateau[s] = detect_saturation(res.achieved_series(), eps, k)
        ok = ok and worst_drop <= 0.02 and plateau[s] is not None
        parts.append(f"{s}: worst adjacent drop {worst_drop:.2%}, plateau "
                     f"{'none' if plateau[s] is None else f'{plateau[s]:.1f} fps'}")
    sat_rates = sorted(rates)[-k:]
    app = {s: np.mean([row[2] for row in runs[s].summary_rows if row[0] in sat_rates]) for s in runs}
    if None not in plateau.values():
        ok = ok and plateau["hw"] >= plateau["sw"]
    ok = ok and app["hw"] < app["sw"]
    parts.append(f"saturated mean app exec sw {app['sw'] / 1e3:.1f} us vs hw {app['hw'] / 1e3:.1f} us")
    parts.append(f"{elapsed:.1f} s (limit 300 s)")
    criterion(6, "saturation properties", ok, "; ".join(parts))
    assert ok


def test_7_simulator_invariants(criterion):
    rng = random.Random(7)
    bad = 0
    runs = 0
    for _ in range(100):
        spec = random_workload(rng)
        seed = rng.randint(0, 1000)
        for s in ("sw", "hw", "fifo"):
            rep = simulate(spec, s, HwConfig(p=spec.p), seed=seed)
            runs += 1
            if check_invariants(spec, rep):
                bad += 1
    ok = bad == 0
    criterion(7, "simulator invariants", ok, f"100 workloads x 3 schedulers, {bad} of {runs} runs violated")
    assert ok


def _cli_outputs(args, tmp_path, tag, capsys):
    files = {}
    extra = []
    if args[0] == "run":
        extra = ["--events-out", str(tmp_path / f"{tag}_ev.csv"), "--cycle-trace", str(tmp_path / f"{tag}_cy.csv")]
    elif args[0] == "cycles":
        extra = ["--cycle-trace", str(tmp_path / f"{tag}_cy.csv")]
    code = main(args + extra)
    out, _ = capsys.readouterr()
    for p in sorted(tmp_path.glob(f"{tag}_*.csv")):
        files[p.name.split("_", 1)[1]] = p.read_bytes()
    return code, out.encode(), files


def test_8_determinism(tmp_path, capsys, criterion):
    commands = [
        ["run", "high", "--scheduler", "hw", "--rate", "5000", "--process", "poisson", "--seed", "3"],
        ["run", "low", "--scheduler", "sw", "--seed", "1"],
        ["run", "low", "--scheduler", "fifo", "--rate", "900", "--process", "poisson"],
        ["sweep", "high", "--scheduler", "sw", "--rates", "50,5000,50000", "--repeats", "3", "--seed", "9"],
        ["verify", "--trials", "40", "--n-max", "128", "--seed", "2"],
        ["cycles", "--n", "1,7,64", "--order", "random", "--seed", "5"],
    ]
    differing = []
    for i, args in enumerate(commands):
        a = _cli_outputs(args, tmp_path, f"a{i}", capsys)
        b = _cli_outputs(args, tmp_path, f"b{i}", capsys)
        if a != b or a[0] != 0:
            differing.append(" ".join(args[:2]))
    ok = not differing
    criterion(8, "determinism", ok,
              f"{len(commands)} commands run twice, byte-identical CSV: "
              f"{'all' if ok else 'differs for ' + ', '.join(differing)}")
    assert ok
