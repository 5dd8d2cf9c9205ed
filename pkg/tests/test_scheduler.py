import itertools
import math

import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from conftest import fitted, run_schedule
from rpsim.arch import ArchConfig, build_machine
from rpsim.circuits import CircuitBuilder, GateKind, expand_fault_tolerant, gen_aqft, gen_qcla, gen_qrca
from rpsim.device import BASELINE
from rpsim.errors import InfeasibleConfig
from rpsim.mapper import QubitMap, map_circuit
from rpsim.scheduler import (
    Calendar,
    CriticalPathBreakdown,
    Schedule,
    ScheduledOp,
    dependency_critical_path,
    idle_windows,
    insert_error_correction,
    schedule,
    schedule_best,
    update_critical_path,
)
from rpsim.tiles import OpKind

PREP_T = 78100.0
TELEPORT = 11911.0
EC = 48900.0


def one_segment(d, a=1, c=1):
    return ArchConfig(1, 1, (d, a, c))


# ------------------------------------------------------------- examples


def test_empty_circuit(db):
    s, _ = run_schedule(CircuitBuilder(2).build(), one_segment(2), db)
    assert s.t_total == 0 and s.breakdown.components() == (0, 0, 0, 0, 0)


def test_adjacent_cnot(db):
    cb = CircuitBuilder(2)
    cb.add(GateKind.CNOT, 0, 1)
    s, _ = run_schedule(cb.build(), one_segment(2), db)
    (op,) = s.primary()
    assert op.d_shut == 60 and op.latency == 10 and s.t_total == 70


def _two_t(db, n_anc):
    cb = CircuitBuilder(1)
    cb.add(GateKind.T, 0)
    cb.add(GateKind.T, 0)
    s, _ = run_schedule(cb.build(), one_segment(1, n_anc), db)
    return s.primary()


def test_magic_state_pipelining(db):
    first, second = _two_t(db, 1)
    assert first.d_anc == PREP_T - first.d_shut
    # the only factory restarts once the first teleport finishes
    assert second.d_anc == pytest.approx(PREP_T - second.d_shut)
    _, second2 = _two_t(db, 2)
    assert second2.d_anc == 0
    assert second.d_anc - second2.d_anc == pytest.approx(PREP_T - second.d_shut)


def test_critical_path_update_example():
    op = ScheduledOp(0, OpKind.CNOT, 0, 40, 50, d_anc=30, d_tel=10)
    b = update_critical_path(CriticalPathBreakdown(), op)
    assert b.components() == pytest.approx((30, 0, 10, 0, 10))
    assert sum(b.components()) == b.t_total == 50
    assert update_critical_path(b, ScheduledOp(1, OpKind.CNOT, 0, 30, 45)) == b
    nodelay = update_critical_path(b, ScheduledOp(2, OpKind.CNOT, 50, 50, 60))
    assert nodelay.t_gate == b.t_gate + 10 and nodelay.t_total == 60


def test_cross_segment_cnot_uses_epr(db):
    cb = CircuitBuilder(2)
    cb.add(GateKind.CNOT, 0, 1)
    s, _ = run_schedule(cb.build(), ArchConfig(2, 2, (1, 1, 1)), db)
    (op,) = s.primary()
    assert op.d_tel == 55800 and op.op_kind is OpKind.TELEPORT_DATA
    assert s.t_total == 55800 + TELEPORT


def test_toffoli_needs_three_data_tiles(db):
    cb = CircuitBuilder(3)
    cb.add(GateKind.TOFFOLI, 0, 1, 2)
    with pytest.raises(InfeasibleConfig):
        run_schedule(cb.build(), ArchConfig(2, 2, (2, 1, 1)), db)


def test_unexpanded_circuit_rejected(db):
    cb = CircuitBuilder(1)
    cb.add(GateKind.T, 0)
    m = build_machine(one_segment(1), db)
    with pytest.raises(InfeasibleConfig):
        schedule(cb.build(), m, QubitMap({0: (0, 0)}))


def test_no_computational_segment(db):
    cb = CircuitBuilder(1)
    cb.add(GateKind.T, 0)
    c = expand_fault_tolerant(cb.build())
    m = build_machine(ArchConfig(1, 0, (1, 1, 1)), db)
    with pytest.raises(InfeasibleConfig):
        schedule(c, m, map_circuit(c, m))


def test_unconstrained_t_chain_matches_dependency_path(db):
    cb = CircuitBuilder(1)
    for _ in range(40):
        cb.add(GateKind.T, 0)
    c = expand_fault_tolerant(cb.build())
    m = build_machine(one_segment(1, 24), db)
    s = schedule_best(c, m, map_circuit(c, m))
    # Only ballistic transport to the ancilla tiles remains on top of the
    # dependency path; it is a few percent of a 12 ms teleport.
    b = s.breakdown
    assert b.t_anc + b.t_tel + b.t_swp + b.t_gate == pytest.approx(dependency_critical_path(c, m), rel=0.01)
    assert b.t_shut / s.t_total < 0.05


# ------------------------------------------------------------ properties

CIRCUITS = {
    "qrca": lambda n: gen_qrca(n),
    "qcla": lambda n: gen_qcla(n),
    "aqft": lambda n: gen_aqft(n, 3, 9, 3),
}


@st.composite
def runs(draw):
    name = draw(st.sampled_from(sorted(CIRCUITS)))
    n = draw(st.integers(2, 10))
    c = expand_fault_tolerant(CIRCUITS[name](n))
    d = draw(st.integers(3, 8))
    a = draw(st.integers(1, 4))
    comm = draw(st.integers(1, 3))
    n_seg = -(-c.n_qubits // d) + draw(st.integers(0, 2))
    n_cs = draw(st.integers(1, n_seg))
    cap = n_cs * d + (n_seg - n_cs) * (d + 2 * a)
    if cap < c.n_qubits:
        n_cs = n_seg
    return c, ArchConfig(n_seg, n_cs, (d, a, comm), budget_ntq=10**9)


def _checked(c, cfg, db):
    m = build_machine(cfg, db)
    s = schedule_best(c, m, map_circuit(c, m))
    return s, m


@settings(max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(runs())
def test_schedule_invariants(db, run):
    c, cfg = run
    s, m = _checked(c, cfg, db)
    b = s.breakdown
    assert sum(b.components()) == pytest.approx(b.t_total, rel=1e-9, abs=1e-9)
    assert s.t_total >= dependency_critical_path(c, m) * (1 - 1e-12)
    finish = {}
    for op in s.primary():
        assert op.t_start_actual >= op.t_start_ready
        assert op.t_start_actual - op.t_start_ready == pytest.approx(op.delta_d, abs=1e-6)
        assert min(op.delays) >= 0
        finish[op.gate_id] = op.t_finish
    for op in s.primary():
        for p in c.deps[op.gate_id]:
            if p in finish:
                assert op.t_start_ready >= finish[p]
    for key, ivs in s.calendars.items():
        if key[0] == "comm":
            continue  # a channel holds several links; checked per link below
        ivs = sorted(ivs)
        for (s0, f0, _), (s1, f1, _) in zip(ivs, ivs[1:]):
            assert s1 >= f0 - 1e-9


@settings(max_examples=10, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(runs())
def test_deterministic(db, run):
    c, cfg = run
    a, _ = _checked(c, cfg, db)
    b, _ = _checked(c, cfg, db)
    assert a.to_text() == b.to_text()
    assert Schedule.from_text(a.to_text()) == a


def test_communication_links_never_overlap(db):
    c = expand_fault_tolerant(gen_qcla(8))
    s, _ = _checked(c, ArchConfig(10, 10, (3, 2, 2)), db)
    for key, ivs in s.calendars.items():
        if key[0] != "comm":
            continue
        ivs = sorted(ivs)
        for (s0, f0, _), (s1, f1, _) in zip(ivs, ivs[1:]):
            assert s1 >= f0 - 1e-9


def test_monotone_in_resources(db):
    c = expand_fault_tolerant(gen_qcla(8))
    grid = list(itertools.product((1, 2, 4), (1, 2, 4)))
    t = {}
    for a, comm in grid:
        t[a, comm] = _checked(c, ArchConfig(5, 5, (6, a, comm)), db)[0].t_total
    for a, comm in grid:
        for a2, comm2 in grid:
            if a <= a2 and comm <= comm2:
                assert t[a2, comm2] <= t[a, comm]


def test_calendar_first_fit():
    cal = Calendar()
    cal.book(10, 20)
    cal.book(30, 40)
    assert cal.fit(0, 10) == 0
    assert cal.fit(0, 11) == 40
    assert cal.fit(15, 10) == 20
    assert cal.fit(21, 10) == 40


@given(st.lists(st.tuples(st.floats(0, 100), st.floats(0.1, 20)), max_size=30), st.floats(0, 100), st.floats(0.1, 20))
def test_calendar_fit_is_free(bookings, t, dur):
    cal = Calendar()
    for start, d in bookings:
        s = cal.fit(start, d)
        assert s >= start
        cal.book(s, s + d)
    s = cal.fit(t, dur)
    assert s >= t
    for a, b in zip(cal.starts, cal.ends):
        assert s + dur <= a or s >= b


# ------------------------------------------------------ error correction


def _manual(ops, n_qubits, initial, t_total):
    return Schedule(ops, CriticalPathBreakdown(t_gate=t_total, t_total=t_total), initial, n_qubits)


def test_ec_rounds_fill_long_gap(db):
    m = build_machine(one_segment(2), db)
    gap = 10 * EC
    ops = [
        ScheduledOp(0, OpKind.HADAMARD, 0, 0, 4, qubits=(0,), location=((0, 0),)),
        ScheduledOp(1, OpKind.HADAMARD, 4 + gap, 4 + gap, 8 + gap, qubits=(0,), location=((0, 0),)),
    ]
    s = insert_error_correction(_manual(ops, 1, {0: (0, 0)}, 8 + gap), m)
    rounds = [op for op in s.ops if op.gate_kind == "ECRound"]
    assert len(rounds) == 10
    assert s.t_total == 8 + gap and s.ec_inserted


def test_ec_no_gaps_unchanged(db):
    m = build_machine(one_segment(1), db)
    ops = [ScheduledOp(0, OpKind.HADAMARD, 0, 0, 4, qubits=(0,), location=((0, 0),))]
    s = insert_error_correction(_manual(ops, 1, {0: (0, 0)}, 4), m)
    assert s.ops == ops


def test_ec_shared_tile_serializes(db):
    m = build_machine(one_segment(2), db)
    end = 2 * EC
    s = insert_error_correction(_manual([], 2, {0: (0, 0), 1: (0, 1)}, end), m)
    rounds = sorted((op.t_start_actual, op.t_finish, op.qubits) for op in s.ops)
    assert [r[2] for r in rounds] == [(0,), (1,)]
    assert rounds[1][0] >= rounds[0][1]


def test_ec_shortens_idle_windows(db):
    c = expand_fault_tolerant(gen_qrca(4))
    s, m = _checked(c, ArchConfig(2, 2, (6, 2, 1)), db)
    after = insert_error_correction(s, m)
    longest = lambda sch: max((e - b for _, b, e, _ in idle_windows(sch)), default=0)
    assert longest(after) <= longest(s)
    assert after.t_total == s.t_total
