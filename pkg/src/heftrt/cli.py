"""Command line: ``heftrt {run,sweep,verify,cycles}``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import report
from .core import HeftError
from .hw import HwConfig
from .sim import SCHEDULERS, OverheadModel, simulate
from .sw import SoftwareCoeffs
from .workload import load_spec, paper29_rates


def _add_hw_flags(p: argparse.ArgumentParser, with_p: bool = False) -> None:
    d = HwConfig()
    g = p.add_argument_group("hardware scheduler")
    if with_p:
        g.add_argument("--p", type=int, default=d.p, help="PE count")
    g.add_argument("--d", type=int, default=d.d, help="priority queue depth")
    g.add_argument("--w-avg", type=int, default=d.w_avg, help="bit width of time values")
    g.add_argument("--clock-ps", type=int, default=d.clock_period_ps, help="clock period in ps")
    g.add_argument("--time-unit-ns", type=int, default=d.time_unit_ns,
                   help="nanoseconds per scheduler time unit")


def _add_overhead_flags(p: argparse.ArgumentParser) -> None:
    d = OverheadModel()
    g = p.add_argument_group("overhead model")
    g.add_argument("--sw-a", type=float, default=d.sw.a, help="software fixed cost (ns)")
    g.add_argument("--sw-b", type=float, default=d.sw.b, help="software cost per task (ns)")
    g.add_argument("--sw-c", type=float, default=d.sw.c, help="software n*log2(n) coefficient (ns)")
    g.add_argument("--transfer-fixed-ns", type=int, default=d.transfer_fixed_ns)
    g.add_argument("--transfer-per-task-ns", type=int, default=d.transfer_per_task_ns)
    g.add_argument("--result-fixed-ns", type=int, default=d.result_fixed_ns)


def _hw_config(args, p: int) -> HwConfig:
    return HwConfig(p=p, d=args.d, w_avg=args.w_avg, clock_period_ps=args.clock_ps,
                    time_unit_ns=args.time_unit_ns)


def _overhead(args) -> OverheadModel:
    return OverheadModel(SoftwareCoeffs(args.sw_a, args.sw_b, args.sw_c),
                         args.transfer_fixed_ns, args.transfer_per_task_ns, args.result_fixed_ns)


def _emit(text: str, path) -> None:
    if path is None or str(path) == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def cmd_run(args) -> int:
    spec = load_spec(args.spec)
    if args.rate is not None:
        spec = spec.with_target_rate(args.rate, args.process)
    trace = [] if args.events_out else None
    cycle_trace = [] if args.cycle_trace else None
    rep = simulate(spec, args.scheduler, _hw_config(args, spec.p), _overhead(args), args.seed,
                   args.quantize_sw, trace=trace, cycle_trace=cycle_trace)
    _emit(report.to_csv(report.RUN_COLUMNS, report.run_rows(rep)), args.out)
    if args.events_out:
        _emit(report.to_csv(report.EVENT_COLUMNS, report.event_rows(rep)), args.events_out)
    if args.cycle_trace:
        if args.scheduler != "hw":
            print("note: --cycle-trace only records the hw scheduler", file=sys.stderr)
        _emit(report.to_csv(report.TRACE_COLUMNS, cycle_trace), args.cycle_trace)
    return 0


def _parse_rates(text: str) -> list:
    if text == "paper29":
        return paper29_rates()
    rates = [float(x) for x in text.split(",") if x.strip()]
    if not rates:
        raise argparse.ArgumentTypeError("rates must be non-empty")
    return rates


def cmd_sweep(args) -> int:
    spec = load_spec(args.spec)
    res = report.sweep(spec, args.scheduler, args.rates, args.repeats, _hw_config(args, spec.p),
                       _overhead(args), args.seed, args.process, args.quantize_sw)
    _emit(report.to_csv(report.SWEEP_COLUMNS, res.rows()), args.out)
    if args.saturation:
        plateau = report.detect_saturation(res.achieved_series(), args.epsilon, args.k)
        msg = "none" if plateau is None else f"{plateau:.3f}"
        print(f"saturation_fps,{msg}", file=sys.stderr)
    return 0


def cmd_verify(args) -> int:
    base = HwConfig(d=args.d, w_avg=args.w_avg, clock_period_ps=args.clock_ps,
                    time_unit_ns=args.time_unit_ns)
    res = report.verify(args.trials, (args.n_min, args.n_max), args.pes, args.seed, base)
    _emit(report.to_csv(("metric", "value"), res.rows()), args.out)
    return 0 if res.ok else 1


def cmd_cycles(args) -> int:
    cfg = _hw_config(args, args.p)
    trace = [] if args.cycle_trace else None
    rows = report.cycle_rows(args.n, cfg, args.order, args.seed, trace)
    _emit(report.to_csv(report.CYCLE_COLUMNS, rows), args.out)
    if trace is not None:
        _emit(report.to_csv(report.TRACE_COLUMNS, trace), args.cycle_trace)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="heftrt", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", default=None, help="output CSV path (default stdout)")

    run = sub.add_parser("run", help="simulate one workload and emit per-instance metrics")
    run.add_argument("spec", help="workload file, or 'low' / 'high'")
    run.add_argument("--scheduler", choices=SCHEDULERS, default="sw")
    run.add_argument("--rate", type=float, default=None,
                     help="override the total target frame rate (frames/s)")
    run.add_argument("--process", choices=("periodic", "poisson"), default=None)
    run.add_argument("--quantize-sw", action="store_true",
                     help="feed software engines the hardware's quantized inputs")
    run.add_argument("--events-out", default=None, help="per-event CSV path")
    run.add_argument("--cycle-trace", default=None, help="per-cycle hw trace CSV path")
    common(run)
    _add_hw_flags(run)
    _add_overhead_flags(run)
    run.set_defaults(func=cmd_run)

    sw = sub.add_parser("sweep", help="injection-rate sweep with repetitions")
    sw.add_argument("spec")
    sw.add_argument("--scheduler", choices=SCHEDULERS, default="sw")
    sw.add_argument("--rates", type=_parse_rates, default=paper29_rates(),
                    help="comma-separated frame rates or 'paper29'")
    sw.add_argument("--repeats", type=int, default=25)
    sw.add_argument("--process", choices=("periodic", "poisson"), default="poisson")
    sw.add_argument("--quantize-sw", action="store_true")
    sw.add_argument("--saturation", action="store_true",
                    help="report the detected plateau on stderr")
    sw.add_argument("--epsilon", type=float, default=0.05)
    sw.add_argument("--k", type=int, default=5)
    common(sw)
    _add_hw_flags(sw)
    _add_overhead_flags(sw)
    sw.set_defaults(func=cmd_sweep)

    ve = sub.add_parser("verify", help="compare hardware and software decisions on random events")
    ve.add_argument("--trials", type=int, default=1000)
    ve.add_argument("--n-min", type=int, default=1)
    ve.add_argument("--n-max", type=int, default=512)
    ve.add_argument("--pes", type=lambda s: [int(x) for x in s.split(",")], default=[2, 4, 8, 16],
                    help="comma-separated PE counts to draw from")
    common(ve)
    _add_hw_flags(ve)
    ve.set_defaults(func=cmd_verify)

    cy = sub.add_parser("cycles", help="cycle counts per queue size")
    cy.add_argument("--n", type=lambda s: [int(x) for x in s.split(",")],
                    default=[1, 2, 5, 10, 100, 512], help="comma-separated queue sizes")
    cy.add_argument("--order", choices=("worst", "random"), default="worst")
    cy.add_argument("--cycle-trace", default=None, help="per-cycle trace CSV path")
    common(cy)
    _add_hw_flags(cy, with_p=True)
    cy.set_defaults(func=cmd_cycles)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except (HeftError, ValueError, OSError) as exc:
        print(f"heftrt: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
