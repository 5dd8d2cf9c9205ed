import csv
import io
import json
import math

import pytest

from rpsim.arch import ArchConfig, qubit_count
from rpsim.errors import InvalidParameter, NoFeasibleConfig
from rpsim.explorer import (
    FIVE_MONTHS_S,
    Benchmark,
    Grid,
    best_row,
    estimate_shor_runtime,
    fit_segments,
    optimize,
    run_pipeline,
    sweep,
)
from rpsim.scheduler import COMPONENTS

DAY = 86_400
SMALL_AQFT = dict(k_max=3, seq_len=31, t_count=10)


def test_shor_examples():
    total, ok = estimate_shor_runtime(2048, 0.68, DAY)
    assert total == pytest.approx(0.68 * 16e6 + DAY)
    assert total / DAY == pytest.approx(128 + 1, rel=0.02) and ok
    total, ok = estimate_shor_runtime(2048, 0.8, 0)
    assert total == FIVE_MONTHS_S and not ok
    assert estimate_shor_runtime(512, 0, 0) == (0, True)
    assert estimate_shor_runtime(1024, 1.0, 0)[0] == 4e6
    with pytest.raises(InvalidParameter):
        estimate_shor_runtime(4096, 1, 1)
    with pytest.raises(InvalidParameter):
        estimate_shor_runtime(512, -1, 0)


def test_unknown_benchmark():
    with pytest.raises(InvalidParameter):
        Benchmark("qft", 8)


def test_fit_segments():
    assert fit_segments(10, 2, (3, 1, 1)) == 2 + 1  # 4 left over, storage holds 5
    assert fit_segments(6, 2, (3, 1, 1)) == 2
    assert fit_segments(0, 0, (3, 1, 1)) == 1


def test_empty_grid():
    res = sweep(Benchmark("qrca", 4), Grid((), (1,), (1,)), 10**6)
    assert res.rows == []
    assert res.to_csv().count("\n") == 1


def test_grid_skips_excess_cs():
    cfgs = Grid((2,), (1,), (1,), n_cs=(1, 4), n_seg=3).configs(6, 10**6, 10000)
    assert [c.n_cs for c in cfgs] == [1]


def test_sweep_rows_and_outputs(db):
    bench = Benchmark("qrca", 4)
    grid = Grid((3, 4), (1, 2), (1,))
    res = sweep(bench, grid, 10**6, db=db)
    keys = [r.config.key() for r in res.rows]
    assert keys == sorted(keys) and len(keys) == 4
    for r in res.rows:
        assert r.feasible and r.qubits == qubit_count(r.config) <= 10**6
        assert sum(r.breakdown.components()) == pytest.approx(r.t_total, rel=1e-9)
    rows = list(csv.reader(io.StringIO(res.to_csv())))
    head = rows[0]
    assert head[:8] == ["n_seg", "n_cs", "n_data", "n_anc", "n_comm", "ss_data", "ss_comm", "qubits"]
    assert head[8:10] == ["t_total_us", "p_fail"] and head[10:15] == list(COMPONENTS)
    assert float(rows[1][8]) == res.rows[0].t_total
    data = json.loads(res.to_json())
    assert len(data["rows"]) == 4 and data["benchmark"] == "qrca4"


def test_infeasible_points_are_recorded(db):
    bench = Benchmark("qrca", 4)
    res = sweep(bench, Grid((3,), (1,), (1,)), budget=3000, db=db)
    (row,) = res.rows
    assert not row.feasible and "BudgetExceeded" in row.violation
    assert math.isnan(row.t_total)
    with pytest.raises(NoFeasibleConfig):
        best_row(res.rows)


def test_rows_reproducible(db):
    bench = Benchmark("qcla", 8)
    res = sweep(bench, Grid((4, 6), (1, 2), (1, 2)), 10**6, db=db)
    for r in res.rows[::3]:
        again = run_pipeline(bench, r.config, db)
        assert again.metrics() == r.metrics()


def test_optimize_matches_exhaustive(db):
    bench = Benchmark("qcla", 8)
    grid = Grid((4, 6), (1, 2), (1, 2))
    cfg, best = optimize(bench, 10**6, grid=grid, db=db)
    every = [run_pipeline(bench, c, db) for c in grid.configs(bench.expanded().n_qubits, 10**6, 10000)]
    oracle = min(every, key=lambda r: (r.t_total, r.qubits, r.config.key()))
    assert cfg == oracle.config
    assert best.metrics() == oracle.metrics()


def test_optimize_without_feasible_point(db):
    with pytest.raises(NoFeasibleConfig):
        optimize(Benchmark("qrca", 4), 1000, grid=Grid((3,), (1,), (1,)), db=db)


def test_larger_budget_never_worse(db):
    bench = Benchmark("qcla", 8)
    grid = Grid((3, 6, 12), (1, 2, 4), (1, 2))
    prev = math.inf
    for budget in (60_000, 100_000, 200_000):
        _, best = optimize(bench, budget, grid=grid, db=db)
        assert best.t_total <= prev
        prev = best.t_total


def test_aqft_prefers_many_ancillas(db):
    bench = Benchmark("aqft", 8, **SMALL_AQFT)
    cfg, _ = optimize(bench, 10**6, grid=Grid((1, 2, 4), (1, 2, 4, 8), (1, 2)), db=db)
    d, a, _ = cfg.cs_config
    assert a >= d


def test_aqft_insensitive_to_comm(db):
    bench = Benchmark("aqft", 16, **SMALL_AQFT)
    res = sweep(bench, Grid((2,), (8,), (1, 2, 4)), 10**7, db=db)
    ts = [r.t_total for r in res.rows]
    assert max(ts) <= 1.01 * min(ts)


def test_qcla_improves_with_cs(db):
    bench = Benchmark("qcla", 64)
    ts = [run_pipeline(bench, ArchConfig(16, ncs, (16, 4, 2), ss_config=(16, 2)), db).t_total for ncs in (1, 2, 4, 8, 16)]
    assert all(b <= a for a, b in zip(ts, ts[1:]))
