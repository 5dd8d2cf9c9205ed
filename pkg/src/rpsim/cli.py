"""Command-line entry point.

Exit codes: 0 on success, 2 when the configuration is infeasible, 1 on any
other error.  Errors are reported as JSON naming the pipeline stage that
raised them.
"""

from __future__ import annotations

import argparse
import json
import math
import re
import sys
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__
from .arch import DEFAULT_BUDGET, LARGE_SEGMENT_CAP, SMALL_SEGMENT_CAP, ArchConfig, build_machine, load_arch_config, segment_qubits
from .circuits import LogicalCircuit, expand_fault_tolerant
from .device import BASELINE, DeviceParams, load_device_params
from .errors import InfeasibleConfig, InvalidParameter, RPSimError
from .explorer import FIVE_MONTHS_S, SECONDS_PER_DAY, SHOR_ADDER_CALLS, Benchmark, Grid, estimate_shor_runtime, optimize, sweep
from .failure import FailureReport, circuit_failure, dominant_source
from .mapper import map_circuit
from .scheduler import Schedule, insert_error_correction, schedule_best
from .tiles import OpKind, TilePerfDatabase, calibrate_database
from .timeline import render_timeline

EXIT_OK, EXIT_ERROR, EXIT_INFEASIBLE = 0, 1, 2
DEFAULT_ANC, DEFAULT_COMM = 4, 1
P_MAX = math.nextafter(1.0, 0.0)


@contextmanager
def stage(name: str):
    """Tag any simulator error raised inside the block with ``name``."""
    try:
        yield
    except RPSimError as exc:
        if exc.stage is None:
            exc.stage = name
        raise


def default_arch(n_qubits: int, seg_cap: int, budget: int) -> ArchConfig:
    """All-computational machine with the widest segments the cap allows."""
    spare = seg_cap - segment_qubits(0, DEFAULT_ANC, DEFAULT_COMM)
    widest = spare // segment_qubits(1, 0, 0, 0)
    if widest < 3:
        raise InfeasibleConfig(f"segment cap {seg_cap} leaves room for fewer than 3 Data tiles")
    d = min(max(n_qubits, 3), widest)
    n_seg = -(-n_qubits // d)
    return ArchConfig(n_seg, n_seg, (d, DEFAULT_ANC, DEFAULT_COMM), seg_qubit_cap=seg_cap, budget_ntq=budget)


@dataclass
class RunReport:
    benchmark: dict
    arch: dict
    device: dict
    t_total_us: float
    breakdown: dict
    failure: dict
    physical_qubits: int
    version: str = __version__
    runtime_s: float = 0.0
    seed: int | None = None
    warnings: list[str] = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps(self.__dict__, indent=1, sort_keys=True) + "\n"


def _clamped(report: FailureReport, warnings: list[str]) -> dict:
    out = report.to_dict()
    if out["p_fail"] >= 1.0:
        warnings.append("p_fail reached 1 in floating point and was clamped below 1")
        out["p_fail"] = P_MAX
    for k, v in out["components"].items():
        if v >= 1.0:
            warnings.append(f"{k} component reached 1 in floating point and was clamped below 1")
            out["components"][k] = P_MAX
    try:
        src, share = dominant_source(report)
        out["dominant"] = {"source": src.value, "share": share}
    except RPSimError:
        out["dominant"] = None
    return out


@dataclass
class PipelineResult:
    report: RunReport
    schedule: Schedule


def run_staged(
    bench: Benchmark,
    cfg: ArchConfig | None,
    db: TilePerfDatabase,
    params: DeviceParams,
    seg_cap: int = LARGE_SEGMENT_CAP,
    budget: int = DEFAULT_BUDGET,
    seed: int | None = None,
) -> PipelineResult:
    """generate, expand, map, schedule, insert error correction, analyze."""
    t_start = time.perf_counter()
    with stage("generate"):
        logical: LogicalCircuit = bench.logical()
    with stage("expand"):
        circuit = expand_fault_tolerant(logical)
    with stage("build"):
        cfg = cfg or default_arch(circuit.n_qubits, seg_cap, budget)
        machine = build_machine(cfg, db, params)
    with stage("map"):
        qmap = map_circuit(circuit, machine)
    with stage("schedule"):
        sched = schedule_best(circuit, machine, qmap)
    with stage("ec-insert"):
        sched = insert_error_correction(sched, machine)
    with stage("analyze"):
        failure = circuit_failure(sched, db, params)
    warnings: list[str] = []
    report = RunReport(
        benchmark={
            "circuit": bench.circuit,
            "bits": bench.bits,
            "logical_qubits": circuit.n_qubits,
            "logical_gates": len(logical.gates),
            "expanded_gates": len(circuit.gates),
            **({"k_max": bench.k_max, "seq_len": bench.seq_len, "t_count": bench.t_count}
               if bench.circuit == "aqft" else {}),
        },
        arch={**cfg.to_dict(), "switch_height": machine.switch_height},
        device={"digest": params.digest(), "params": params.to_dict()},
        t_total_us=sched.t_total,
        breakdown=sched.breakdown.to_dict(),
        failure=_clamped(failure, warnings),
        physical_qubits=machine.qubit_count(),
        seed=seed,
        warnings=warnings,
    )
    report.runtime_s = time.perf_counter() - t_start
    return PipelineResult(report, sched)


# ------------------------------------------------------------------ parsing

_DURATION = re.compile(r"^\s*([0-9]*\.?[0-9]+(?:[eE][-+]?[0-9]+)?)\s*(us|ms|s|min|h|d|days?)?\s*$")
_UNIT_S = {"us": 1e-6, "ms": 1e-3, "s": 1.0, "min": 60.0, "h": 3600.0, "d": SECONDS_PER_DAY,
           "day": SECONDS_PER_DAY, "days": SECONDS_PER_DAY}


def parse_duration(text: str) -> float:
    """Seconds from strings like ``0.68s``, ``680ms`` or ``1d``; bare numbers are seconds."""
    m = _DURATION.match(text)
    if not m:
        raise argparse.ArgumentTypeError(f"cannot parse duration {text!r}")
    return float(m.group(1)) * _UNIT_S[m.group(2) or "s"]


def _int_list(text: str) -> tuple[int, ...]:
    try:
        values = tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    return values


def _common(p: argparse.ArgumentParser, circuit: bool = True) -> None:
    if circuit:
        p.add_argument("--circuit", choices=("qcla", "qrca", "aqft"), required=True)
        p.add_argument("--bits", type=int, required=True)
        p.add_argument("--k-max", type=int, default=8, help="AQFT rotation cutoff")
    p.add_argument("--dp", type=Path, help="device-parameter JSON file (baseline if omitted)")
    p.add_argument("--out", type=Path, help="output file (stdout if omitted)")
    p.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    p.add_argument("--seg-cap", type=int, choices=(SMALL_SEGMENT_CAP, LARGE_SEGMENT_CAP), default=LARGE_SEGMENT_CAP)
    p.add_argument("--seed", type=int, help="accepted for reproducibility records; the pipeline is deterministic")


def _grid_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--data", type=_int_list, help="Data tiles per segment, e.g. 1,2,4")
    p.add_argument("--anc", type=_int_list, help="Ancilla tiles per computational segment")
    p.add_argument("--comm", type=_int_list, help="Communication tiles per segment")
    p.add_argument("--ncs", type=_int_list, help="computational segment counts (default: all segments)")
    p.add_argument("--nseg", type=int, help="fixed segment count (default: fitted to the circuit)")
    p.add_argument("--workers", type=int, default=1)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rpsim", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"rpsim {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("tiles", help="calibrate and print the tile performance database")
    _common(p, circuit=False)

    p = sub.add_parser("run", help="run the full pipeline on one configuration")
    _common(p)
    p.add_argument("--arch", type=Path, help="architecture JSON file (a fitted default if omitted)")
    p.add_argument("--schedule-out", type=Path, help="also write the schedule records")
    p.add_argument("--viz", type=Path, help="also write the timeline SVG")

    p = sub.add_parser("sweep", help="run every configuration of a grid")
    _common(p)
    _grid_args(p)
    p.add_argument("--csv", type=Path, help="CSV twin of the JSON output")

    p = sub.add_parser("optimize", help="fastest feasible configuration of a grid")
    _common(p)
    _grid_args(p)

    p = sub.add_parser("shor-estimate", help="Shor runtime from adder and AQFT durations")
    p.add_argument("n_bits", type=int, choices=sorted(SHOR_ADDER_CALLS))
    p.add_argument("adder_time", type=parse_duration, help="one adder call, e.g. 0.68s")
    p.add_argument("aqft_time", type=parse_duration, nargs="?", default=0.0, help="one AQFT, e.g. 1d")
    p.add_argument("--out", type=Path)

    p = sub.add_parser("viz", help="render the utilization timeline as SVG")
    _common(p, circuit=False)
    p.add_argument("--schedule", type=Path, help="schedule file written by run --schedule-out")
    p.add_argument("--circuit", choices=("qcla", "qrca", "aqft"))
    p.add_argument("--bits", type=int)
    p.add_argument("--k-max", type=int, default=8)
    p.add_argument("--arch", type=Path)
    return parser


# ----------------------------------------------------------------- commands

def _emit(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        with stage("output"):
            try:
                out.write_text(text)
            except OSError as exc:
                raise InvalidParameter(f"cannot write {out}: {exc}") from exc


def _params(args) -> DeviceParams:
    with stage("config"):
        return BASELINE if args.dp is None else load_device_params(args.dp)


def _bench(args) -> Benchmark:
    with stage("config"):
        return Benchmark(args.circuit, args.bits, k_max=args.k_max)


def _grid(args) -> Grid | None:
    if not any((args.data, args.anc, args.comm, args.ncs, args.nseg)):
        return None
    with stage("config"):
        if args.data is None or args.anc is None or args.comm is None:
            raise InvalidParameter("a custom grid needs --data, --anc and --comm")
        return Grid(args.data, args.anc, args.comm, args.ncs or (None,), args.nseg)


def cmd_tiles(args, db: TilePerfDatabase) -> int:
    params = _params(args)
    if args.out is not None and args.out.suffix == ".json":
        with stage("output"):
            db.save(args.out)
        return EXIT_OK
    lines = [f"{'operation':<24}{'latency_us':>14}{'p_fail':>14}"]
    for kind in OpKind:
        e = db[kind]
        lines.append(f"{kind.value:<24}{e.latency(params):>14.6g}{e.p_fail(params):>14.4g}")
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def cmd_run(args, db: TilePerfDatabase) -> int:
    params = _params(args)
    bench = _bench(args)
    cfg = None
    if args.arch is not None:
        with stage("config"):
            cfg = load_arch_config(args.arch)
    res = run_staged(bench, cfg, db, params, args.seg_cap, args.budget, args.seed)
    if args.schedule_out is not None:
        _emit(res.schedule.to_text(), args.schedule_out)
    if args.viz is not None:
        with stage("viz"):
            render_timeline(res.schedule, args.viz)
    _emit(res.report.to_json(), args.out)
    return EXIT_OK


def cmd_sweep(args, db: TilePerfDatabase) -> int:
    params = _params(args)
    bench = _bench(args)
    grid = _grid(args)
    if grid is None:
        from .explorer import default_grid

        grid = default_grid(bench.expanded().n_qubits)
    with stage("sweep"):
        result = sweep(bench, grid, args.budget, args.seg_cap, db, params, args.workers)
    _emit(result.to_json(), args.out)
    if args.csv is not None:
        _emit(result.to_csv(), args.csv)
    return EXIT_OK


def cmd_optimize(args, db: TilePerfDatabase) -> int:
    params = _params(args)
    bench = _bench(args)
    with stage("optimize"):
        cfg, best = optimize(bench, args.budget, args.seg_cap, _grid(args), db, params, args.workers)
    res = run_staged(bench, cfg, db, params, args.seg_cap, args.budget, args.seed)
    _emit(res.report.to_json(), args.out)
    return EXIT_OK


def cmd_shor(args, db: TilePerfDatabase) -> int:
    with stage("estimate"):
        total, feasible = estimate_shor_runtime(args.n_bits, args.adder_time, args.aqft_time)
    out = {
        "n_bits": args.n_bits,
        "adder_calls": SHOR_ADDER_CALLS[args.n_bits],
        "adder_time_s": args.adder_time,
        "aqft_time_s": args.aqft_time,
        "total_s": total,
        "total_days": total / SECONDS_PER_DAY,
        "limit_s": FIVE_MONTHS_S,
        "feasible": feasible,
    }
    _emit(json.dumps(out, indent=1, sort_keys=True) + "\n", args.out)
    return EXIT_OK


def cmd_viz(args, db: TilePerfDatabase) -> int:
    if args.out is None:
        with stage("config"):
            raise InvalidParameter("viz needs --out FILE.svg")
    if args.schedule is not None:
        with stage("config"):
            try:
                sched = Schedule.from_text(args.schedule.read_text())
            except OSError as exc:
                raise InvalidParameter(f"cannot read {args.schedule}: {exc}") from exc
    else:
        if args.circuit is None or args.bits is None:
            with stage("config"):
                raise InvalidParameter("viz needs --schedule or --circuit and --bits")
        params = _params(args)
        cfg = None
        if args.arch is not None:
            with stage("config"):
                cfg = load_arch_config(args.arch)
        sched = run_staged(_bench(args), cfg, db, params, args.seg_cap, args.budget).schedule
    with stage("viz"):
        render_timeline(sched, args.out)
    return EXIT_OK


COMMANDS = {
    "tiles": cmd_tiles,
    "run": cmd_run,
    "sweep": cmd_sweep,
    "optimize": cmd_optimize,
    "shor-estimate": cmd_shor,
    "viz": cmd_viz,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        db = calibrate_database()
        return COMMANDS[args.command](args, db)
    except RPSimError as exc:
        err = {"error": {"stage": exc.stage, "type": type(exc).__name__, "message": str(exc)}}
        sys.stderr.write(json.dumps(err, sort_keys=True) + "\n")
        return EXIT_INFEASIBLE if isinstance(exc, InfeasibleConfig) else EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
