"""Resource-constrained list scheduling of fault-tolerant gate streams.

Gates are taken in order of (ready time, longest remaining path, id).  Each
gate's wait between becoming ready and starting is split into four delay
classes:

* ``d_swp``: waiting for an operand still being swapped out of a full
  segment, or the swap itself (two teleports) when a computational segment
  has no free Data tile for an incoming operand.  The evicted resident is
  the earliest available one, preferring the one whose next use lies
  furthest ahead in gate order;
* ``d_tel``: EPR generation plus data teleportation to bring a remote
  operand in, or the EPR wait of a cross-segment CNOT;
* ``d_shut``: ballistic transport between tiles of one segment;
* ``d_anc``: waiting for the magic state.

Magic-state preparations are not queued as gates.  Each Ancilla tile is a
factory that starts a new state as soon as it is released, and it is
released only when the teleportation consuming its state finishes.
Preparation, EPR, data-move and shuttle steps are emitted as auxiliary
records so the error analyzer and the timeline can see them; only primary
records extend the critical path.
"""

from __future__ import annotations

import heapq
import json
import math
from bisect import bisect_right
from collections import defaultdict
from dataclasses import asdict, dataclass, field, replace
from enum import Enum

from .arch import Machine
from .circuits import PREPS, GateKind, LogicalCircuit
from .errors import InfeasibleConfig, InvalidParameter, ParameterFileError, UnmappedQubit
from .mapper import QubitMap
from .tiles import OpKind, logical_epr_perf


class NoiseSource(str, Enum):
    SHUTTLING = "Shuttling"
    TELEPORTATION = "Teleportation"
    MEMORY = "Memory"
    GATE = "Gate"


GATE_OPS: dict[GateKind, OpKind] = {
    GateKind.X: OpKind.PAULI_XZ,
    GateKind.Z: OpKind.PAULI_XZ,
    GateKind.H: OpKind.HADAMARD,
    GateKind.CNOT: OpKind.CNOT,
    GateKind.MEASURE: OpKind.MEASUREMENT,
    GateKind.EC_ROUND: OpKind.L2_ERROR_CORRECTION,
    # Teleporting operands into a magic state costs one data teleportation.
    GateKind.TELEPORT_INTO_MAGIC: OpKind.TELEPORT_DATA,
    GateKind.PREP_MAGIC_T: OpKind.PREP_T_MAGIC,
    GateKind.PREP_MAGIC_TOFFOLI: OpKind.PREP_TOFFOLI_MAGIC,
}


@dataclass(slots=True)
class ScheduledOp:
    gate_id: int
    op_kind: OpKind
    t_start_ready: float
    t_start_actual: float
    t_finish: float
    d_anc: float = 0.0
    d_shut: float = 0.0
    d_tel: float = 0.0
    d_swp: float = 0.0
    p_fail: float = 0.0
    noise_source: NoiseSource = NoiseSource.GATE
    qubits: tuple[int, ...] = ()
    location: tuple[tuple[int, int], ...] = ()
    gate_kind: str = ""
    aux: bool = False
    units: float = 1.0
    tel_from: tuple[int, int] | None = None
    tel_to: tuple[int, int] | None = None
    hold: float = 0.0

    @property
    def delays(self) -> tuple[float, float, float, float]:
        return (self.d_anc, self.d_shut, self.d_tel, self.d_swp)

    @property
    def delta_d(self) -> float:
        return self.d_anc + self.d_shut + self.d_tel + self.d_swp

    @property
    def latency(self) -> float:
        return self.t_finish - self.t_start_actual

    def to_dict(self) -> dict:
        d = {f: getattr(self, f) for f in self.__slots__}
        d["op_kind"] = self.op_kind.value
        d["noise_source"] = self.noise_source.value
        d["qubits"] = list(self.qubits)
        d["location"] = [list(x) for x in self.location]
        d["tel_from"] = None if self.tel_from is None else list(self.tel_from)
        d["tel_to"] = None if self.tel_to is None else list(self.tel_to)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> ScheduledOp:
        d = dict(d)
        d["op_kind"] = OpKind(d["op_kind"])
        d["noise_source"] = NoiseSource(d["noise_source"])
        d["qubits"] = tuple(d["qubits"])
        d["location"] = tuple(tuple(x) for x in d["location"])
        for k in ("tel_from", "tel_to"):
            d[k] = None if d[k] is None else tuple(d[k])
        return cls(**d)


COMPONENTS = ("t_anc", "t_shut", "t_tel", "t_swp", "t_gate")


@dataclass(frozen=True)
class CriticalPathBreakdown:
    t_anc: float = 0.0
    t_shut: float = 0.0
    t_tel: float = 0.0
    t_swp: float = 0.0
    t_gate: float = 0.0
    t_total: float = 0.0

    def components(self) -> tuple[float, float, float, float, float]:
        return (self.t_anc, self.t_shut, self.t_tel, self.t_swp, self.t_gate)

    def to_dict(self) -> dict[str, float]:
        return asdict(self)


def _shares(delays: tuple[float, float, float, float], exec_t: float, dt: float) -> tuple[float, ...]:
    denom = sum(delays) + exec_t
    if denom <= 0:
        return (0.0, 0.0, 0.0, 0.0, dt)
    return (*(d / denom * dt for d in delays), exec_t / denom * dt)


def update_critical_path(breakdown: CriticalPathBreakdown, op: ScheduledOp) -> CriticalPathBreakdown:
    """Extend the breakdown by ``op`` if it finishes after the current total.

    The extension is shared among the delay classes and the execution time
    in proportion to their durations within the op.
    """
    dt = op.t_finish - breakdown.t_total
    if dt <= 0:
        return breakdown
    inc = _shares(op.delays, op.latency, dt)
    return CriticalPathBreakdown(
        *(c + i for c, i in zip(breakdown.components(), inc)), t_total=op.t_finish
    )


@dataclass
class Schedule:
    ops: list[ScheduledOp]
    breakdown: CriticalPathBreakdown
    initial_map: dict[int, tuple[int, int]]
    n_qubits: int
    # resource -> list of (start, finish, gate id); resources are
    # ("anc", seg, k), ("comm", seg, k) and ("ec", seg)
    calendars: dict[tuple, list[tuple[float, float, int]]] = field(default_factory=dict)
    ec_inserted: bool = False

    @property
    def t_total(self) -> float:
        return self.breakdown.t_total

    def primary(self) -> list[ScheduledOp]:
        return [op for op in self.ops if not op.aux]

    def to_text(self) -> str:
        head = {
            "breakdown": self.breakdown.to_dict(),
            "n_ops": len(self.ops),
            "n_qubits": self.n_qubits,
            "ec_inserted": self.ec_inserted,
            "initial_map": [[q, s, t] for q, (s, t) in sorted(self.initial_map.items())],
            "calendars": [[list(k), [list(iv) for iv in v]] for k, v in sorted(self.calendars.items())],
        }
        lines = [json.dumps(head, sort_keys=True)]
        lines.extend(json.dumps(op.to_dict(), sort_keys=True) for op in self.ops)
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> Schedule:
        try:
            rows = [json.loads(line) for line in text.splitlines() if line.strip()]
            head, recs = rows[0], rows[1:]
            if len(recs) != head["n_ops"]:
                raise ValueError(f"header announces {head['n_ops']} records, found {len(recs)}")
            ops = [ScheduledOp.from_dict(r) for r in recs]
            return cls(
                ops,
                CriticalPathBreakdown(**head["breakdown"]),
                {q: (s, t) for q, s, t in head["initial_map"]},
                head["n_qubits"],
                {tuple(k): [tuple(iv) for iv in v] for k, v in head["calendars"]},
                head["ec_inserted"],
            )
        except (ValueError, KeyError, TypeError, IndexError) as exc:
            raise ParameterFileError(f"malformed schedule: {exc}") from exc


class Calendar:
    """Busy intervals of one resource, kept sorted, with first-fit gap search."""

    __slots__ = ("starts", "ends")

    def __init__(self) -> None:
        self.starts: list[float] = []
        self.ends: list[float] = []

    def fit(self, t: float, dur: float) -> float:
        """Earliest start at or after ``t`` of a free stretch of length ``dur``."""
        i = bisect_right(self.ends, t)
        s = t
        while i < len(self.starts):
            if self.starts[i] >= s + dur:
                return s
            s = max(s, self.ends[i])
            i += 1
        return s

    def book(self, start: float, end: float) -> None:
        i = bisect_right(self.starts, start)
        self.starts.insert(i, start)
        self.ends.insert(i, end)


def remaining_path(circuit: LogicalCircuit, latency: dict[GateKind, float]) -> list[float]:
    """Latency-weighted longest path from each gate to the end of the circuit."""
    succ = circuit.successors()
    rem = [0.0] * len(circuit.gates)
    for g in reversed(circuit.gates):
        rem[g.id] = latency[g.kind] + max((rem[s] for s in succ[g.id]), default=0.0)
    return rem


def dependency_critical_path(circuit: LogicalCircuit, machine: Machine) -> float:
    """Longest latency-weighted path with no resource or movement costs."""
    lat = _gate_latencies(machine)
    return max(remaining_path(circuit, lat), default=0.0)


def _gate_latencies(machine: Machine) -> dict[GateKind, float]:
    db, params = machine.tile_db, machine.params
    lat = {k: db[op].latency(params) for k, op in GATE_OPS.items()}
    # Un-expanded non-Clifford gates only appear in priority estimates.
    lat[GateKind.TOFFOLI] = lat[GateKind.T] = lat[GateKind.TDAG] = lat[GateKind.TELEPORT_INTO_MAGIC]
    return lat


def schedule(
    circuit: LogicalCircuit,
    machine: Machine,
    qmap: QubitMap,
    anc_limit: int | None = None,
    comm_limit: int | None = None,
) -> Schedule:
    """Schedule an expanded circuit.

    ``anc_limit`` and ``comm_limit`` cap how many Ancilla and Communication
    tiles per segment the scheduler may use; the rest stay idle.
    """
    return _Scheduler(circuit, machine, qmap, anc_limit, comm_limit).run()


def _ladder(n: int) -> list[int]:
    out = {n}
    k = 1
    while k < n:
        out.add(k)
        k *= 2
    return sorted(out)


def schedule_best(circuit: LogicalCircuit, machine: Machine, qmap: QubitMap) -> Schedule:
    """Fastest schedule over a ladder of factory and channel usage limits.

    Greedy list scheduling is not monotone in resources: extra magic-state
    factories let off-critical gates start early and grab channels or
    Data tiles the critical path needs.  A schedule that leaves tiles idle
    is still valid on the larger machine, so trying the power-of-two limits
    below the installed counts and keeping the fastest result makes the
    outcome non-increasing along doubling ladders of ``n_anc`` and
    ``n_comm``.  Ties go to the larger limits.
    """
    cs = [s for s in machine.segments if s.is_cs]
    max_anc = max((s.n_anc for s in cs), default=1)
    max_comm = max(s.n_comm for s in machine.segments)
    best = None
    for a in reversed(_ladder(max_anc)):
        for c in reversed(_ladder(max_comm)):
            # A run that reaches the best makespan so far cannot win; stop it early.
            bound = None if best is None else best.t_total
            cand = _Scheduler(circuit, machine, qmap, a, c).run(bound)
            if cand is not None and (best is None or cand.t_total < best.t_total):
                best = cand
    return best


class _Scheduler:
    def __init__(self, circuit, machine, qmap, anc_limit=None, comm_limit=None):
        bad = [g.id for g in circuit.gates if g.kind in (GateKind.TOFFOLI, GateKind.T, GateKind.TDAG)]
        if bad:
            raise InfeasibleConfig(f"circuit is not fault-tolerantly expanded (gate {bad[0]})")
        for q in range(circuit.n_qubits):
            if q not in qmap.assignment:
                raise UnmappedQubit(f"logical qubit {q} has no Data tile")
        self.c = circuit
        self.m = machine
        db, params = machine.tile_db, machine.params
        self.lat = {op: db[op].latency(params) for op in OpKind}
        self.pf = {op: db[op].p_fail(params) for op in OpKind}
        self.epr_lat, _ = logical_epr_perf(db, params, machine.switch_height)
        self.t_tile = params.t_shutt_tile
        self.segs = machine.segments
        self.loc = dict(qmap.assignment)
        self.initial = dict(qmap.assignment)
        self.occ: dict[int, dict[int, int]] = defaultdict(dict)
        for q, (s, t) in self.loc.items():
            seg = self._segment(s)
            if not 0 <= t < seg.n_data:
                raise InfeasibleConfig(f"qubit {q} mapped to missing tile {t} of segment {s}")
            if t in self.occ[s]:
                raise InfeasibleConfig(f"qubits {self.occ[s][t]} and {q} share tile ({s}, {t})")
            self.occ[s][t] = q
        self.free = {s.id: set(range(s.n_data)) - set(self.occ[s.id]) for s in self.segs}
        self.q_avail = [0.0] * circuit.n_qubits
        for name, lim in (("anc_limit", anc_limit), ("comm_limit", comm_limit)):
            if lim is not None and (not isinstance(lim, int) or lim < 1):
                raise InvalidParameter(f"{name} must be a positive integer, got {lim!r}")
        na = lambda s: s.n_anc if anc_limit is None else min(s.n_anc, anc_limit)
        nc = lambda s: s.n_comm if comm_limit is None else min(s.n_comm, comm_limit)
        self.factory = {s.id: [0.0] * na(s) for s in self.segs if s.is_cs}
        self.channel = {s.id: [Calendar() for _ in range(nc(s))] for s in self.segs}
        self.cal: dict[tuple, list] = defaultdict(list)
        self.uses: list[list[int]] = [[] for _ in range(circuit.n_qubits)]
        for g in circuit.gates:
            for q in g.operands:
                self.uses[q].append(g.id)
        self.ops: list[ScheduledOp] = []
        if any(len(g.operands) == 3 for g in circuit.gates) and self.factory:
            smallest = min(self.segs[s].n_data for s in self.factory)
            if smallest < 3:
                raise InfeasibleConfig("computational segments need 3 Data tiles to co-locate Toffoli operands")

    def _segment(self, s: int):
        if not 0 <= s < len(self.segs):
            raise InfeasibleConfig(f"qubit map refers to missing segment {s}")
        return self.segs[s]

    # ------------------------------------------------------------ resources

    def _epr(self, a: int, b: int, t: float, gid: int) -> float:
        dur = self.epr_lat
        start = t
        while True:
            sa, ka = min((cal.fit(start, dur), k) for k, cal in enumerate(self.channel[a]))
            sb, kb = min((cal.fit(sa, dur), k) for k, cal in enumerate(self.channel[b]))
            if sb == sa:
                break
            start = sb
        start = sa
        fin = start + dur
        self.channel[a][ka].book(start, fin)
        self.channel[b][kb].book(start, fin)
        self.cal[("comm", a, ka)].append((start, fin, gid))
        self.cal[("comm", b, kb)].append((start, fin, gid))
        self.ops.append(
            ScheduledOp(
                gid, OpKind.EPR_GENERATION, t, start, fin,
                p_fail=self.pf[OpKind.EPR_GENERATION],
                noise_source=NoiseSource.TELEPORTATION,
                location=((a, -1), (b, -1)), gate_kind="EPR", aux=True,
            )
        )
        return fin

    def _teleport_move(self, q: int, dest: tuple[int, int], t: float, gid: int) -> float:
        src = self.loc[q]
        ef = self._epr(src[0], dest[0], t, gid)
        fin = ef + self.lat[OpKind.TELEPORT_DATA]
        self.ops.append(
            ScheduledOp(
                gid, OpKind.TELEPORT_DATA, t, ef, fin,
                p_fail=self.pf[OpKind.TELEPORT_DATA],
                noise_source=NoiseSource.TELEPORTATION,
                qubits=(q,), location=(dest,), gate_kind="Move", aux=True,
                tel_from=src, tel_to=dest,
            )
        )
        return fin

    def _place(self, q: int, dest: tuple[int, int]) -> None:
        s, t = self.loc[q]
        if self.occ[s].get(t) == q:
            del self.occ[s][t]
            self.free[s].add(t)
        self.loc[q] = dest
        self.occ[dest[0]][dest[1]] = q
        self.free[dest[0]].discard(dest[1])

    def _next_use(self, q: int, gid: int) -> float:
        u = self.uses[q]
        i = bisect_right(u, gid)
        return u[i] if i < len(u) else math.inf

    def _magic_ready(self, s: int, prep: OpKind) -> tuple[float, int]:
        fac = self.factory[s]
        k = min(range(len(fac)), key=lambda i: (fac[i], i))
        return fac[k] + self.lat[prep], k

    # ---------------------------------------------------------------- gates

    def _local(self, g, t0: float, op: OpKind) -> ScheduledOp:
        q = g.operands[0]
        d_swp = max(0.0, self.q_avail[q] - t0)
        start = t0 + d_swp
        return ScheduledOp(
            g.id, op, t0, start, start + self.lat[op], d_swp=d_swp,
            p_fail=self.pf[op], qubits=g.operands, location=(self.loc[q],),
            gate_kind=g.kind.value,
        )

    def _cnot(self, g, t0: float) -> ScheduledOp:
        a, b = g.operands
        d_swp = max(0.0, self.q_avail[a] - t0, self.q_avail[b] - t0)
        t1 = t0 + d_swp
        (sa, ta), (sb, tb) = self.loc[a], self.loc[b]
        if sa == sb:
            dist = abs(ta - tb)
            d_shut = dist * self.t_tile
            if dist:
                self._shuttle(g.id, (a,), (self.loc[a],), t1, d_shut, dist)
            start = t0 + d_shut + d_swp
            return ScheduledOp(
                g.id, OpKind.CNOT, t0, start, start + self.lat[OpKind.CNOT],
                d_shut=d_shut, d_swp=d_swp, p_fail=self.pf[OpKind.CNOT],
                qubits=(a, b), location=(self.loc[a], self.loc[b]), gate_kind=g.kind.value,
            )
        ef = self._epr(sa, sb, t1, g.id)
        d_tel = ef - t1
        start = t0 + d_tel + d_swp
        return ScheduledOp(
            g.id, OpKind.TELEPORT_DATA, t0, start, start + self.lat[OpKind.TELEPORT_DATA],
            d_tel=d_tel, d_swp=d_swp, p_fail=self.pf[OpKind.TELEPORT_DATA],
            noise_source=NoiseSource.TELEPORTATION, qubits=(a, b),
            location=(self.loc[a], self.loc[b]), gate_kind=g.kind.value,
            tel_from=self.loc[a], tel_to=self.loc[b],
        )

    def _shuttle(self, gid: int, qubits, locs, t: float, dur: float, tiles: float) -> None:
        self.ops.append(
            ScheduledOp(
                gid, OpKind.SHUTTLE, t, t, t + dur,
                p_fail=self.pf[OpKind.SHUTTLE] * tiles, noise_source=NoiseSource.SHUTTLING,
                qubits=tuple(qubits), location=tuple(locs), gate_kind="Shuttle", aux=True,
                units=float(tiles),
            )
        )

    def _choose_cs(self, ops: tuple[int, ...], prep: OpKind) -> int:
        if not self.factory:
            raise InfeasibleConfig("machine has no computational segment for non-Clifford gates")
        count = defaultdict(int)
        for q in ops:
            s = self.loc[q][0]
            if s in self.factory:
                count[s] += 1
        return min(self.factory, key=lambda s: (-count[s], self._magic_ready(s, prep)[0], s))

    def _teleport_magic(self, g, t0: float, prep_gid: int, prep: OpKind) -> ScheduledOp:
        ops = g.operands
        d0 = max(0.0, *(self.q_avail[q] - t0 for q in ops))
        t_a = t0 + d0
        target = self._choose_cs(ops, prep)
        seg = self.segs[target]
        t_b, swapped, moved_from, moved_to = t_a, False, None, None
        for q in ops:
            if self.loc[q][0] == target:
                continue
            src = self.loc[q]
            if self.free[target]:
                dest = (target, min(self.free[target]))
                arrival = self._teleport_move(q, dest, t_a, g.id)
                self._place(q, dest)
                is_swap = False
            else:
                residents = [r for r in self.occ[target].values() if r not in ops]
                e = min(
                    residents,
                    key=lambda r: (max(t_a, self.q_avail[r]), -self._next_use(r, g.id), r),
                )
                dest = self.loc[e]
                start = max(t_a, self.q_avail[e])
                arr_q = self._teleport_move(q, dest, start, g.id)
                arr_e = self._teleport_move(e, src, start, g.id)
                self.loc[q], self.loc[e] = dest, src
                self.occ[dest[0]][dest[1]] = q
                self.occ[src[0]][src[1]] = e
                self.q_avail[e] = arr_e
                arrival = max(arr_q, arr_e)
                is_swap = True
            if arrival > t_b or (arrival == t_b and is_swap):
                t_b, swapped, moved_from, moved_to = arrival, is_swap, src, dest
        d_move = t_b - t_a
        d_tel, d_swp = (0.0, d0 + d_move) if swapped else (d_move, d0)

        ready, k = self._magic_ready(target, prep)
        anc_pos = seg.ancilla_position(k)
        dists = [abs(self.loc[q][1] - anc_pos) for q in ops]
        d_shut = max(dists) * self.t_tile
        if d_shut:
            self._shuttle(g.id, ops, [self.loc[q] for q in ops], t_b, d_shut, sum(dists))
        t_c = t_b + d_shut
        d_anc = max(0.0, ready - t_c)
        start = t0 + d_anc + d_shut + d_tel + d_swp
        fin = start + self.lat[OpKind.TELEPORT_DATA]

        fac_start = self.factory[target][k]
        self.factory[target][k] = fin
        self.cal[("anc", target, k)].append((fac_start, fin, g.id))
        self.ops.append(
            ScheduledOp(
                prep_gid, prep, fac_start, fac_start, ready, p_fail=self.pf[prep],
                location=((target, k),), gate_kind=self.c.gates[prep_gid].kind.value,
                aux=True, hold=max(0.0, start - ready),
            )
        )
        return ScheduledOp(
            g.id, OpKind.TELEPORT_DATA, t0, start, fin,
            d_anc=d_anc, d_shut=d_shut, d_tel=d_tel, d_swp=d_swp,
            p_fail=self.pf[OpKind.TELEPORT_DATA], qubits=ops,
            location=tuple(self.loc[q] for q in ops), gate_kind=g.kind.value,
            tel_from=moved_from, tel_to=moved_to,
        )

    # ----------------------------------------------------------------- loop

    def run(self, bound: float | None = None) -> Schedule | None:
        """Schedule every gate; gives up with None once the makespan reaches ``bound``."""
        c = self.c
        gates = c.gates
        lat = _gate_latencies(self.m)
        rem = remaining_path(c, lat)
        is_prep = [g.kind in PREPS for g in gates]
        succ = c.successors()
        npred = [0] * len(gates)
        prep_of = [-1] * len(gates)
        for g in gates:
            for p in c.deps[g.id]:
                if is_prep[p]:
                    prep_of[g.id] = p
                else:
                    npred[g.id] += 1
        ready_at = [0.0] * len(gates)
        heap = [(0.0, -rem[g.id], g.id) for g in gates if not is_prep[g.id] and npred[g.id] == 0]
        heapq.heapify(heap)

        acc = [0.0] * 5
        t_total = 0.0
        done = 0
        while heap:
            t0, _, gid = heapq.heappop(heap)
            g = gates[gid]
            kind = g.kind
            if kind is GateKind.TELEPORT_INTO_MAGIC:
                p = prep_of[gid]
                if p < 0:
                    raise InfeasibleConfig(f"teleport {gid} has no magic-state preparation")
                rec = self._teleport_magic(g, t0, p, GATE_OPS[gates[p].kind])
            elif kind is GateKind.CNOT:
                rec = self._cnot(g, t0)
            elif kind in PREPS:
                continue
            else:
                rec = self._local(g, t0, GATE_OPS[kind])
            self.ops.append(rec)
            done += 1
            fin = rec.t_finish
            for q in g.operands:
                self.q_avail[q] = fin
            if fin > t_total:
                inc = _shares(rec.delays, rec.latency, fin - t_total)
                for i in range(5):
                    acc[i] += inc[i]
                t_total = fin
                if bound is not None and t_total >= bound:
                    return None
            for s in succ[gid]:
                if is_prep[s]:
                    continue
                if fin > ready_at[s]:
                    ready_at[s] = fin
                npred[s] -= 1
                if npred[s] == 0:
                    heapq.heappush(heap, (ready_at[s], -rem[s], s))
        expected = sum(1 for p in is_prep if not p)
        assert done == expected, f"scheduler stalled with {expected - done} gates left"
        return Schedule(
            self.ops,
            CriticalPathBreakdown(*acc, t_total=t_total),
            self.initial,
            c.n_qubits,
            {k: list(v) for k, v in sorted(self.cal.items())},
        )


# --------------------------------------------------------- error correction


def qubit_busy_intervals(sched: Schedule) -> dict[int, list[tuple[float, float, tuple[int, int]]]]:
    """Per-qubit (start, finish, location afterwards) intervals, sorted by start."""
    busy: dict[int, list] = defaultdict(list)
    for op in sched.ops:
        if op.aux and op.gate_kind not in ("Move", "ECRound"):
            continue
        for i, q in enumerate(op.qubits):
            busy[q].append((op.t_start_actual, op.t_finish, op.location[i]))
    for v in busy.values():
        v.sort(key=lambda x: (x[0], x[1]))
    return busy


def idle_windows(sched: Schedule):
    """Yield (qubit, start, end, location) for every idle stretch of every qubit."""
    busy = qubit_busy_intervals(sched)
    t_end = sched.t_total
    for q in range(sched.n_qubits):
        cursor, where = 0.0, sched.initial_map.get(q, (-1, -1))
        for start, fin, loc in busy.get(q, ()):
            if start > cursor:
                yield q, cursor, start, where
            if fin > cursor:
                cursor, where = fin, loc
        if t_end > cursor:
            yield q, cursor, t_end, where


def insert_error_correction(sched: Schedule, machine: Machine, interval: float | None = None) -> Schedule:
    """Add L2 error-correction rounds to Data tiles that sit idle.

    A gap of length ``g`` asks for ``floor(g / interval)`` rounds at
    ``interval`` spacing.  Rounds of one segment share its EC tile in
    request order; a round that cannot finish inside its gap is dropped.
    The total execution time never changes.
    """
    db, params = machine.tile_db, machine.params
    ec_lat = db[OpKind.L2_ERROR_CORRECTION].latency(params)
    ec_p = db[OpKind.L2_ERROR_CORRECTION].p_fail(params)
    theta = ec_lat if interval is None else interval
    if not theta > 0 or math.isinf(theta):
        raise InfeasibleConfig(f"EC interval must be positive and finite, got {interval}")
    requests = defaultdict(list)
    for q, start, end, (seg, tile) in idle_windows(sched):
        for j in range(int((end - start) // theta)):
            requests[seg].append((start + j * theta, q, end, tile))
    new_ops = list(sched.ops)
    calendars = {k: list(v) for k, v in sched.calendars.items()}
    q_last: dict[int, float] = {}
    for seg in sorted(requests):
        ec_free = 0.0
        for req, q, end, tile in sorted(requests[seg]):
            start = max(req, ec_free, q_last.get(q, 0.0))
            fin = start + ec_lat
            if fin > end:
                continue
            ec_free = q_last[q] = fin
            calendars.setdefault(("ec", seg), []).append((start, fin, -1))
            new_ops.append(
                ScheduledOp(
                    -1, OpKind.L2_ERROR_CORRECTION, req, start, fin, p_fail=ec_p,
                    qubits=(q,), location=((seg, tile),), gate_kind="ECRound", aux=True,
                )
            )
    return replace(sched, ops=new_ops, calendars=calendars, ec_inserted=True)
