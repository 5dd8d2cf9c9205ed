"""Design-space search over architecture configurations and Shor runtime estimates."""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

from .arch import LARGE_SEGMENT_CAP, ArchConfig, build_machine, qubit_count
from .circuits import LogicalCircuit, expand_fault_tolerant, gen_aqft, gen_qcla, gen_qrca
from .device import BASELINE, DeviceParams
from .errors import InfeasibleConfig, InvalidParameter, NoFeasibleConfig
from .failure import SOURCES, FailureReport, circuit_failure
from .mapper import map_circuit
from .scheduler import COMPONENTS, CriticalPathBreakdown, Schedule, insert_error_correction, schedule_best
from .tiles import TilePerfDatabase, calibrate_database

GENERATORS = {"qcla": gen_qcla, "qrca": gen_qrca, "aqft": gen_aqft}


@dataclass(frozen=True)
class Benchmark:
    circuit: str
    bits: int
    k_max: int = 8
    seq_len: int = 375
    t_count: int = 150

    def __post_init__(self) -> None:
        if self.circuit not in GENERATORS:
            raise InvalidParameter(f"unknown circuit {self.circuit!r}; expected one of {sorted(GENERATORS)}")

    def logical(self) -> LogicalCircuit:
        if self.circuit == "aqft":
            return gen_aqft(self.bits, self.k_max, self.seq_len, self.t_count)
        return GENERATORS[self.circuit](self.bits)

    def expanded(self) -> LogicalCircuit:
        return _expanded(self)

    def label(self) -> str:
        return f"{self.circuit}{self.bits}"


@lru_cache(maxsize=8)
def _expanded(bench: Benchmark) -> LogicalCircuit:
    return expand_fault_tolerant(bench.logical())


@dataclass
class RunResult:
    config: ArchConfig
    t_total: float = math.nan
    p_fail: float = math.nan
    breakdown: CriticalPathBreakdown | None = None
    failure: FailureReport | None = None
    qubits: int = 0
    violation: str = ""
    schedule: Schedule | None = field(default=None, repr=False, compare=False)

    @property
    def feasible(self) -> bool:
        return not self.violation

    def metrics(self) -> tuple:
        comps = () if self.failure is None else tuple(self.failure.components[s] for s in SOURCES)
        parts = () if self.breakdown is None else self.breakdown.components()
        return (self.t_total, self.p_fail, *parts, *comps)


def run_pipeline(
    bench: Benchmark,
    cfg: ArchConfig,
    db: TilePerfDatabase | None = None,
    params: DeviceParams | None = None,
    keep_schedule: bool = False,
) -> RunResult:
    """Map, schedule, insert error correction and analyze one configuration."""
    db = db or calibrate_database()
    params = params or BASELINE
    circuit = bench.expanded()
    try:
        machine = build_machine(cfg, db, params)
        qmap = map_circuit(circuit, machine)
        sched = insert_error_correction(schedule_best(circuit, machine, qmap), machine)
    except InfeasibleConfig as exc:
        return RunResult(cfg, qubits=qubit_count(cfg), violation=f"{type(exc).__name__}: {exc}")
    report = circuit_failure(sched, db, params)
    return RunResult(
        cfg, sched.t_total, report.p_fail, sched.breakdown, report, machine.qubit_count(),
        schedule=sched if keep_schedule else None,
    )


def fit_segments(n_qubits: int, n_cs: int, cs_config, ss_config=None) -> int:
    """Fewest segments holding ``n_qubits`` Data tiles with ``n_cs`` computational ones."""
    d, a, _ = cs_config
    ss_data = d + 2 * a if ss_config is None else ss_config[0]
    rest = max(0, n_qubits - n_cs * d)
    return max(1, n_cs + -(-rest // ss_data))


@dataclass
class Grid:
    """Parameter ranges.  ``n_cs`` values of ``None`` mean every segment is
    computational; ``n_seg`` of ``None`` fits the segment count to the circuit."""

    n_data: tuple[int, ...]
    n_anc: tuple[int, ...]
    n_comm: tuple[int, ...]
    n_cs: tuple[int | None, ...] = (None,)
    n_seg: int | None = None

    def configs(self, n_qubits: int, budget: int, seg_cap: int) -> list[ArchConfig]:
        """Valid configurations of the grid; combinations with more CS than segments are skipped."""
        out = []
        for d, a, c, ncs in itertools.product(self.n_data, self.n_anc, self.n_comm, self.n_cs):
            if ncs is None:
                nseg = self.n_seg or -(-n_qubits // d)
                ncs_v = nseg
            else:
                ncs_v = ncs
                nseg = self.n_seg or fit_segments(n_qubits, ncs, (d, a, c))
            if ncs_v <= nseg:
                out.append(ArchConfig(nseg, ncs_v, (d, a, c), seg_qubit_cap=seg_cap, budget_ntq=budget))
        return out


def default_grid(n_qubits: int) -> Grid:
    """Coarse ladder over the interesting range; dominated points are pruned by the caps."""
    return Grid(
        n_data=(1, 2, 3, 4, 6, 8, 12, 16, 24, 32, 48),
        n_anc=(1, 2, 4, 8, 16, 24),
        n_comm=(1, 2, 4, 8),
    )


@dataclass
class SweepResult:
    benchmark: Benchmark
    rows: list[RunResult]

    def feasible(self) -> list[RunResult]:
        return [r for r in self.rows if r.feasible]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(
            ["n_seg", "n_cs", "n_data", "n_anc", "n_comm", "ss_data", "ss_comm", "qubits",
             "t_total_us", "p_fail", *COMPONENTS, *(f"p_{s.value.lower()}" for s in SOURCES),
             "violation"]
        )
        blank = [""] * (2 + len(COMPONENTS) + len(SOURCES))
        for r in self.rows:
            c = r.config
            values = [repr(x) for x in r.metrics()] if r.feasible else blank
            w.writerow([c.n_seg, c.n_cs, *c.cs_config, *c.ss_config, r.qubits, *values, r.violation])
        return buf.getvalue()

    def to_json(self) -> str:
        rows = []
        for r in self.rows:
            row = {"config": r.config.to_dict(), "qubits": r.qubits, "violation": r.violation}
            if r.feasible:
                row.update(
                    t_total_us=r.t_total,
                    p_fail=r.p_fail,
                    breakdown=r.breakdown.to_dict(),
                    failure=r.failure.to_dict(),
                )
            rows.append(row)
        return json.dumps({"benchmark": self.benchmark.label(), "rows": rows}, indent=1) + "\n"


def _eval(args):
    bench, cfg, db, params = args
    return run_pipeline(bench, cfg, db, params)


def sweep(
    bench: Benchmark,
    grid: Grid,
    budget: int,
    seg_cap: int = LARGE_SEGMENT_CAP,
    db: TilePerfDatabase | None = None,
    params: DeviceParams | None = None,
    workers: int = 1,
) -> SweepResult:
    """Run the pipeline at every grid point; infeasible points keep their violation."""
    db = db or calibrate_database()
    params = params or BASELINE
    todo = grid.configs(bench.expanded().n_qubits, budget, seg_cap)
    rows: list[RunResult] = []
    if workers > 1 and len(todo) > 1:
        with ProcessPoolExecutor(workers) as pool:
            rows.extend(pool.map(_eval, [(bench, c, db, params) for c in todo]))
    else:
        rows.extend(run_pipeline(bench, c, db, params) for c in todo)
    rows.sort(key=lambda r: r.config.key())
    return SweepResult(bench, rows)


def best_row(rows: list[RunResult]) -> RunResult:
    feasible = [r for r in rows if r.feasible]
    if not feasible:
        raise NoFeasibleConfig("no configuration in the grid fits the budget and segment cap")
    return min(feasible, key=lambda r: (r.t_total, r.qubits, r.config.key()))


def optimize(
    bench: Benchmark,
    budget: int,
    seg_cap: int = LARGE_SEGMENT_CAP,
    grid: Grid | None = None,
    db: TilePerfDatabase | None = None,
    params: DeviceParams | None = None,
    workers: int = 1,
) -> tuple[ArchConfig, RunResult]:
    """Fastest feasible configuration; ties go to fewer qubits, then the smaller config key."""
    grid = grid or default_grid(bench.expanded().n_qubits)
    result = sweep(bench, grid, budget, seg_cap, db, params, workers)
    best = best_row(result.rows)
    return best.config, best


SHOR_ADDER_CALLS = {512: 1_000_000, 1024: 4_000_000, 2048: 16_000_000}
# Five months of 30 days would be 12.96e6 s; the bound here is 16e6 adder
# calls at 0.8 s each, which puts 0.8 s exactly on the boundary.
FIVE_MONTHS_S = 12.8e6
SECONDS_PER_DAY = 86_400.0


def estimate_shor_runtime(n_bits: int, adder_t: float, aqft_t: float) -> tuple[float, bool]:
    """Total seconds for the adder calls plus one AQFT, and whether it beats five months."""
    if n_bits not in SHOR_ADDER_CALLS:
        raise InvalidParameter(f"n_bits must be one of {sorted(SHOR_ADDER_CALLS)}, got {n_bits}")
    if adder_t < 0 or aqft_t < 0 or not (math.isfinite(adder_t) and math.isfinite(aqft_t)):
        raise InvalidParameter("durations must be finite and non-negative")
    total = SHOR_ADDER_CALLS[n_bits] * adder_t + aqft_t
    return total, total < FIVE_MONTHS_S
