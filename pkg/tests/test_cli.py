import subprocess
import sys
from pathlib import Path

import pytest

from heftrt.cli import main

GOLDEN = Path(__file__).parent / "golden"
REPO = Path(__file__).resolve().parents[1]

GOLDEN_CASES = {
    "run_low_sw.csv": ["run", "low", "--scheduler", "sw"],
    "run_high_hw.csv": ["run", "high", "--scheduler", "hw", "--rate", "2000", "--process", "poisson",
                        "--seed", "4"],
    "cycles.csv": ["cycles", "--n", "1,2,5,10,512"],
    "sweep_high_hw.csv": ["sweep", "high", "--scheduler", "hw", "--rates", "100,1000,10000",
                          "--repeats", "2"],
    "verify.csv": ["verify", "--trials", "20", "--n-max", "64"],
}


def run_cli(args, capsys):
    code = main(args)
    out, err = capsys.readouterr()
    return code, out, err


@pytest.mark.parametrize("name", sorted(GOLDEN_CASES))
def test_golden(name, capsys):
    code, out, _ = run_cli(GOLDEN_CASES[name], capsys)
    assert code == 0
    assert out == (GOLDEN / name).read_text()


def test_events_golden(tmp_path, capsys):
    events = tmp_path / "events.csv"
    run_cli(GOLDEN_CASES["run_high_hw.csv"] + ["--events-out", str(events)], capsys)
    assert events.read_text() == (GOLDEN / "events_high_hw.csv").read_text()


def test_run_low_has_40_rows(capsys):
    _, out, _ = run_cli(["run", "low"], capsys)
    assert len(out.splitlines()) == 41


def test_run_accepts_workload_file(capsys):
    _, from_file, _ = run_cli(["run", str(REPO / "workloads" / "low.yaml")], capsys)
    _, builtin, _ = run_cli(["run", "low"], capsys)
    assert from_file == builtin


def test_unknown_scheduler_is_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["run", "low", "--scheduler", "bogus"])
    assert exc.value.code == 2


def test_invalid_spec_exits_nonzero(tmp_path, capsys):
    bad = tmp_path / "bad.yaml"
    bad.write_text("schema_version: 1\npes: []\ntemplates: {}\nschedule: []\n")
    code, _, err = run_cli(["run", str(bad)], capsys)
    assert code == 1 and "error" in err


def test_missing_file_exits_nonzero(tmp_path, capsys):
    code, _, _ = run_cli(["run", str(tmp_path / "nope.yaml")], capsys)
    assert code == 1


def test_verify_out_of_range_exits_nonzero(capsys):
    code, _, _ = run_cli(["verify", "--trials", "1", "--n-max", "600"], capsys)
    assert code == 1


def test_sweep_paper29_row_count(capsys, monkeypatch):
    # Row layout only: stub the simulator so 29 x 25 runs stay cheap.
    import heftrt.report as report
    from heftrt.sim import MetricsReport

    class Row:
        app_exec_ns = 1
        arrival_ns = 0
        finish_ns = 1

    class Event:
        overhead_ns = 1

    fake = MetricsReport("sw", [Row()], [Event()], [])
    monkeypatch.setattr(report, "simulate", lambda *a, **k: fake)
    _, out, _ = run_cli(["sweep", "high", "--rates", "paper29", "--repeats", "25"], capsys)
    lines = out.splitlines()[1:]
    assert sum(l.startswith("rep,") for l in lines) == 29 * 25
    assert sum(l.startswith("summary,") for l in lines) == 29


def test_saturation_flag(capsys):
    code, _, err = run_cli(["sweep", "high", "--rates", "1000,50000,100000,200000", "--repeats", "1",
                            "--saturation", "--k", "3"], capsys)
    assert code == 0 and err.startswith("saturation_fps,")


def test_cycle_trace(tmp_path, capsys):
    trace = tmp_path / "t.csv"
    run_cli(["cycles", "--n", "1", "--p", "1", "--cycle-trace", str(trace)], capsys)
    lines = trace.read_text().splitlines()
    assert lines[0] == "event,cycle,phase,swaps,tid,pe,finish"
    assert [l.split(",")[2] for l in lines[1:]] == ["Fill", "SortOdd", "SortEven", "Drain", "Drain"]


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "heftrt", "cycles", "--n", "3"],
                          capture_output=True, text=True, check=True)
    assert proc.stdout.splitlines()[1].startswith("3,worst,3,5,4,12,12,")
