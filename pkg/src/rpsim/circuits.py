"""Benchmark circuit generation and fault-tolerant expansion.

Circuits are DAGs of logical gates.  A gate's predecessors are the previous
gate on each of its operands plus any explicit extra edges (used to tie a
magic-state preparation to the teleportation that consumes it).

Gate-count constants of the generated adders:

* ripple-carry (CDKM, three-CNOT UMA variant): ``2n`` Toffoli, ``5n + 1``
  CNOT, ``4n`` X gates on ``2n + 2`` qubits.
* carry-lookahead (out-of-place, logarithmic depth): ``5n - 3w(n) -
  3 floor(log2 n) - 1`` Toffoli and ``3n - 1`` CNOT on
  ``3n + 1 + sum_t (floor(n / 2^t) - 1)`` qubits, where ``w`` is the Hamming
  weight of ``n``.
"""

from __future__ import annotations

from collections import Counter
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from .errors import CircuitError, InvalidParameter


class GateKind(str, Enum):
    X = "X"
    Z = "Z"
    H = "H"
    CNOT = "CNOT"
    TOFFOLI = "Toffoli"
    T = "T"
    TDAG = "TDagger"
    MEASURE = "Measure"
    PREP_MAGIC_T = "PrepMagicT"
    PREP_MAGIC_TOFFOLI = "PrepMagicToffoli"
    TELEPORT_INTO_MAGIC = "TeleportIntoMagic"
    EC_ROUND = "ECRound"


# Allowed operand counts per kind.
ARITY: dict[GateKind, tuple[int, ...]] = {
    GateKind.X: (1,),
    GateKind.Z: (1,),
    GateKind.H: (1,),
    GateKind.CNOT: (2,),
    GateKind.TOFFOLI: (3,),
    GateKind.T: (1,),
    GateKind.TDAG: (1,),
    GateKind.MEASURE: (1,),
    GateKind.PREP_MAGIC_T: (0,),
    GateKind.PREP_MAGIC_TOFFOLI: (0,),
    GateKind.TELEPORT_INTO_MAGIC: (1, 3),
    GateKind.EC_ROUND: (1,),
}
CLIFFORD = frozenset({GateKind.X, GateKind.Z, GateKind.H, GateKind.CNOT})
CLASSICAL = frozenset({GateKind.X, GateKind.CNOT, GateKind.TOFFOLI})
PREPS = frozenset({GateKind.PREP_MAGIC_T, GateKind.PREP_MAGIC_TOFFOLI})


@dataclass(frozen=True, slots=True)
class LogicalGate:
    kind: GateKind
    operands: tuple[int, ...]
    id: int


@dataclass(frozen=True)
class LogicalCircuit:
    """Immutable gate DAG.  ``deps[i]`` lists the predecessors of gate ``i``."""

    n_qubits: int
    gates: tuple[LogicalGate, ...]
    deps: tuple[tuple[int, ...], ...]
    registers: dict[str, tuple[int, ...]] = field(default_factory=dict, compare=False)
    name: str = ""

    def __len__(self) -> int:
        return len(self.gates)

    def counts(self) -> Counter:
        return Counter(g.kind for g in self.gates)

    def depth(self, kinds: Iterable[GateKind] | None = None) -> int:
        """Longest chain of gates; only gates of ``kinds`` add a layer when given."""
        keep = None if kinds is None else frozenset(kinds)
        level = [0] * len(self.gates)
        best = 0
        for g in self.gates:
            base = max((level[p] for p in self.deps[g.id]), default=0)
            level[g.id] = base + (1 if keep is None or g.kind in keep else 0)
            best = max(best, level[g.id])
        return best

    def successors(self) -> list[list[int]]:
        succ: list[list[int]] = [[] for _ in self.gates]
        for i, preds in enumerate(self.deps):
            for p in preds:
                succ[p].append(i)
        return succ

    def to_text(self) -> str:
        lines = [f"# circuit {self.name}".rstrip(), f"n_qubits {self.n_qubits}"]
        for reg, qs in self.registers.items():
            lines.append(f"register {reg} " + " ".join(map(str, qs)))
        lines.append("gates")
        for g in self.gates:
            lines.append(" ".join([str(g.id), g.kind.value, *map(str, g.operands)]))
        lines.append("deps")
        for i, preds in enumerate(self.deps):
            if preds:
                lines.append(f"{i}: " + " ".join(map(str, preds)))
        return "\n".join(lines) + "\n"

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_text())

    @classmethod
    def from_text(cls, text: str) -> LogicalCircuit:
        n_qubits = None
        name = ""
        registers: dict[str, tuple[int, ...]] = {}
        gates: list[LogicalGate] = []
        deps: dict[int, tuple[int, ...]] = {}
        section = "header"
        for raw in text.splitlines():
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                if line.startswith("# circuit"):
                    name = line[len("# circuit"):].strip()
                continue
            if line in ("gates", "deps"):
                section = line
                continue
            parts = line.split()
            try:
                if section == "header":
                    if parts[0] == "n_qubits":
                        n_qubits = int(parts[1])
                    elif parts[0] == "register":
                        registers[parts[1]] = tuple(int(q) for q in parts[2:])
                    else:
                        raise CircuitError(f"unexpected header line: {line!r}")
                elif section == "gates":
                    gid, kind = int(parts[0]), GateKind(parts[1])
                    if gid != len(gates):
                        raise CircuitError(f"gate ids must be consecutive, got {gid}")
                    gates.append(LogicalGate(kind, tuple(int(q) for q in parts[2:]), gid))
                else:
                    head, _, tail = line.partition(":")
                    deps[int(head)] = tuple(int(p) for p in tail.split())
            except (IndexError, ValueError) as exc:
                raise CircuitError(f"malformed circuit line {line!r}: {exc}") from exc
        if n_qubits is None:
            raise CircuitError("circuit file lacks an n_qubits line")
        circuit = cls(
            n_qubits,
            tuple(gates),
            tuple(deps.get(i, ()) for i in range(len(gates))),
            registers,
            name,
        )
        validate(circuit)
        return circuit

    @classmethod
    def load(cls, path: str | Path) -> LogicalCircuit:
        return cls.from_text(Path(path).read_text())


class CircuitBuilder:
    """Accumulates gates and derives operand-sharing dependencies on the fly."""

    def __init__(self, n_qubits: int, name: str = ""):
        self.n_qubits = n_qubits
        self.name = name
        self.gates: list[LogicalGate] = []
        self.deps: list[tuple[int, ...]] = []
        self.registers: dict[str, tuple[int, ...]] = {}
        self._last: list[int] = [-1] * n_qubits

    def add(self, kind: GateKind, *operands: int, after: Iterable[int] = ()) -> int:
        gid = len(self.gates)
        preds = set(after)
        for q in operands:
            last = self._last[q]
            if last >= 0:
                preds.add(last)
            self._last[q] = gid
        self.gates.append(LogicalGate(kind, operands, gid))
        self.deps.append(tuple(sorted(preds)))
        return gid

    def build(self) -> LogicalCircuit:
        return LogicalCircuit(
            self.n_qubits, tuple(self.gates), tuple(self.deps), dict(self.registers), self.name
        )


def validate(circuit: LogicalCircuit) -> None:
    """Check arity, operand range/distinctness, id order and DAG orientation."""
    last: dict[int, int] = {}
    for g in circuit.gates:
        if len(g.operands) not in ARITY[g.kind]:
            raise CircuitError(f"gate {g.id} ({g.kind.value}) has {len(g.operands)} operands")
        if len(set(g.operands)) != len(g.operands):
            raise CircuitError(f"gate {g.id} repeats an operand")
        preds = circuit.deps[g.id]
        for p in preds:
            if not 0 <= p < g.id:
                raise CircuitError(f"gate {g.id} depends on {p}, which does not precede it")
        for q in g.operands:
            if not 0 <= q < circuit.n_qubits:
                raise CircuitError(f"gate {g.id} uses qubit {q} outside [0, {circuit.n_qubits})")
            if q in last and last[q] not in preds:
                raise CircuitError(f"gate {g.id} is not ordered after gate {last[q]} on qubit {q}")
            last[q] = g.id


# ---------------------------------------------------------------- adders


def _check_bits(n: int, minimum: int) -> None:
    if not isinstance(n, int) or isinstance(n, bool) or n < minimum:
        raise InvalidParameter(f"bit width must be an integer >= {minimum}, got {n!r}")


def gen_qrca(n: int) -> LogicalCircuit:
    """CDKM ripple-carry adder; the sum lands in ``b`` plus the carry-out qubit.

    Qubits are interleaved ``c0, b0, a0, b1, a1, ...`` so every gate acts on
    neighbouring ids.
    """
    _check_bits(n, 1)
    c0 = 0
    b = [1 + 2 * i for i in range(n)]
    a = [2 + 2 * i for i in range(n)]
    z = 2 * n + 1
    cb = CircuitBuilder(2 * n + 2, f"qrca{n}")

    def maj(x: int, y: int, w: int) -> None:
        cb.add(GateKind.CNOT, w, y)
        cb.add(GateKind.CNOT, w, x)
        cb.add(GateKind.TOFFOLI, x, y, w)

    def uma(x: int, y: int, w: int) -> None:
        cb.add(GateKind.X, y)
        cb.add(GateKind.CNOT, x, y)
        cb.add(GateKind.TOFFOLI, x, y, w)
        cb.add(GateKind.X, y)
        cb.add(GateKind.CNOT, w, x)
        cb.add(GateKind.CNOT, w, y)

    maj(c0, b[0], a[0])
    for i in range(1, n):
        maj(a[i - 1], b[i], a[i])
    cb.add(GateKind.CNOT, a[n - 1], z)
    for i in range(n - 1, 0, -1):
        uma(a[i - 1], b[i], a[i])
    uma(c0, b[0], a[0])
    cb.registers = {"a": tuple(a), "b": tuple(b), "sum": (*b, z), "ancilla": (c0,)}
    return cb.build()


def qcla_ancilla_count(n: int) -> int:
    levels = n.bit_length() - 1
    return sum(n // 2**t - 1 for t in range(1, levels))


def gen_qcla(n: int) -> LogicalCircuit:
    """Out-of-place carry-lookahead adder with logarithmic depth.

    ``z[i]`` collects the carry into bit ``i`` through propagate (P),
    generate (G) and carry (C) rounds, the P rounds are undone, and the sum
    bits are folded into ``z``.  ``a`` and ``b`` are restored.
    """
    _check_bits(n, 2)
    levels = n.bit_length() - 1
    a = list(range(n))
    b = list(range(n, 2 * n))
    z = list(range(2 * n, 3 * n + 1))
    anc: dict[tuple[int, int], int] = {}
    nxt = 3 * n + 1
    for t in range(1, levels):
        for m in range(1, n // 2**t):
            anc[(t, m)] = nxt
            nxt += 1
    cb = CircuitBuilder(nxt, f"qcla{n}")

    def p(t: int, m: int) -> int:
        return b[m] if t == 0 else anc[(t, m)]

    def p_rounds(order: Iterable[int]) -> None:
        for t in order:
            for m in range(1, n // 2**t):
                cb.add(GateKind.TOFFOLI, p(t - 1, 2 * m), p(t - 1, 2 * m + 1), p(t, m))

    for i in range(n):
        cb.add(GateKind.TOFFOLI, a[i], b[i], z[i + 1])
    for i in range(1, n):
        cb.add(GateKind.CNOT, a[i], b[i])
    p_rounds(range(1, levels))
    for t in range(1, levels + 1):
        for m in range(n // 2**t):
            cb.add(GateKind.TOFFOLI, z[2**t * m + 2 ** (t - 1)], p(t - 1, 2 * m + 1), z[2**t * (m + 1)])
    top = 0
    while 3 * 2 ** (top + 1) <= 2 * n:
        top += 1
    for t in range(top, 0, -1):
        for m in range(1, (n - 2 ** (t - 1)) // 2**t + 1):
            cb.add(GateKind.TOFFOLI, z[2**t * m], p(t - 1, 2 * m), z[2**t * m + 2 ** (t - 1)])
    p_rounds(range(levels - 1, 0, -1))
    for i in range(1, n):
        cb.add(GateKind.CNOT, b[i], z[i])
    cb.add(GateKind.CNOT, a[0], z[0])
    cb.add(GateKind.CNOT, b[0], z[0])
    for i in range(1, n):
        cb.add(GateKind.CNOT, a[i], b[i])
    cb.registers = {"a": tuple(a), "b": tuple(b), "sum": tuple(z), "ancilla": tuple(anc.values())}
    return cb.build()


# ------------------------------------------------------------------ AQFT


def aqft_pairs(n: int, k_max: int = 8) -> list[tuple[int, int]]:
    """(target, control) pairs of the truncated QFT ladder, in gate order."""
    return [(i, i + d) for i in range(n) for d in range(1, k_max + 1) if i + d < n]


def gen_aqft(n: int, k_max: int = 8, seq_len: int = 375, t_count: int = 150) -> LogicalCircuit:
    """Approximate QFT with controlled rotations truncated beyond ``k_max``.

    The controlled rotation between qubits ``d`` apart (``d <= k_max``) is
    split into two half-angle single-qubit rotations on the target with a
    CNOT after each.  Every rotation becomes a synthetic approximation
    sequence of ``seq_len`` gates of which ``t_count`` are T/T-dagger, with
    the Cliffords spread evenly into the gaps around the T gates.
    """
    _check_bits(n, 1)
    if not isinstance(k_max, int) or k_max < 1:
        raise InvalidParameter(f"k_max must be a positive integer, got {k_max!r}")
    if not (isinstance(seq_len, int) and isinstance(t_count, int) and 0 < t_count <= seq_len):
        raise InvalidParameter(f"need 0 < t_count <= seq_len, got t_count={t_count}, seq_len={seq_len}")
    pattern = rotation_sequence(seq_len, t_count)
    cb = CircuitBuilder(n, f"aqft{n}")
    for i in range(n):
        cb.add(GateKind.H, i)
        for d in range(1, k_max + 1):
            j = i + d
            if j >= n:
                break
            for _ in range(2):
                for kind in pattern:
                    cb.add(kind, i)
                cb.add(GateKind.CNOT, j, i)
    cb.registers = {"data": tuple(range(n))}
    return cb.build()


def rotation_sequence(seq_len: int, t_count: int) -> list[GateKind]:
    """Placeholder Clifford+T approximation of a small-angle rotation."""
    n_cliff = seq_len - t_count
    gaps = t_count + 1
    out: list[GateKind] = []
    for gap in range(gaps):
        size = (gap + 1) * n_cliff // gaps - gap * n_cliff // gaps
        out.extend(GateKind.H if k % 2 == 0 else GateKind.Z for k in range(size))
        if gap < t_count:
            out.append(GateKind.T if gap % 2 == 0 else GateKind.TDAG)
    return out


def aqft_counts(n: int, k_max: int = 8) -> dict[str, int]:
    """Closed-form counts of controlled rotations and single-qubit rotations."""
    cr = sum(min(j, k_max) for j in range(1, n))
    return {"controlled_rotations": cr, "rotations": 2 * cr, "cnots": 2 * cr}


# ------------------------------------------------------ fault tolerance


def expand_fault_tolerant(circuit: LogicalCircuit) -> LogicalCircuit:
    """Replace Toffoli and T/T-dagger gates by magic-state preparation plus teleportation.

    Preparations carry no operands and no data dependencies; each teleport
    depends on its preparation and on the previous gates of its operands.
    """
    cb = CircuitBuilder(circuit.n_qubits, circuit.name)
    main: list[int] = []
    for g in circuit.gates:
        extra = [main[p] for p in circuit.deps[g.id]]
        if g.kind is GateKind.TOFFOLI:
            prep = cb.add(GateKind.PREP_MAGIC_TOFFOLI)
            main.append(cb.add(GateKind.TELEPORT_INTO_MAGIC, *g.operands, after=[prep, *extra]))
        elif g.kind in (GateKind.T, GateKind.TDAG):
            prep = cb.add(GateKind.PREP_MAGIC_T)
            main.append(cb.add(GateKind.TELEPORT_INTO_MAGIC, *g.operands, after=[prep, *extra]))
        elif g.kind in CLIFFORD or g.kind in (GateKind.MEASURE, GateKind.EC_ROUND):
            main.append(cb.add(g.kind, *g.operands, after=extra))
        else:
            raise CircuitError(f"cannot expand gate kind {g.kind.value}")
    cb.registers = dict(circuit.registers)
    return cb.build()


def is_expanded(circuit: LogicalCircuit) -> bool:
    return not any(g.kind in (GateKind.TOFFOLI, GateKind.T, GateKind.TDAG) for g in circuit.gates)


# ------------------------------------------------------- classical oracle


def simulate_classical(circuit: LogicalCircuit, bits: Sequence[int]) -> list[int]:
    state = list(bits)
    for g in circuit.gates:
        ops = g.operands
        if g.kind is GateKind.X:
            state[ops[0]] ^= 1
        elif g.kind is GateKind.CNOT:
            state[ops[1]] ^= state[ops[0]]
        elif g.kind is GateKind.TOFFOLI:
            state[ops[2]] ^= state[ops[0]] & state[ops[1]]
        else:
            raise CircuitError(f"gate {g.id} ({g.kind.value}) is not a classical reversible gate")
    return state


def _write(state: list[int], reg: Sequence[int], value: int) -> None:
    if value < 0 or value >> len(reg):
        raise InvalidParameter(f"operand {value} does not fit in {len(reg)} bits")
    for k, q in enumerate(reg):
        state[q] = (value >> k) & 1


def _read(state: Sequence[int], reg: Sequence[int]) -> int:
    return sum(state[q] << k for k, q in enumerate(reg))


def verify_adder_semantics(circuit: LogicalCircuit, a: int, b: int) -> int:
    """Run an adder on basis states and decode its sum register."""
    try:
        ra, rb, rs = circuit.registers["a"], circuit.registers["b"], circuit.registers["sum"]
    except KeyError as exc:
        raise CircuitError(f"circuit has no adder register {exc}") from None
    state = [0] * circuit.n_qubits
    _write(state, ra, a)
    _write(state, rb, b)
    return _read(simulate_classical(circuit, state), rs)
