"""Initial placement of logical qubits onto Data tiles.

The placement solves a weighted linear-arrangement problem on the circuit's
interaction graph and then cuts the arrangement into segment-sized runs.
Small components are solved exactly with a subset dynamic program; larger
ones use a Fiedler-vector ordering refined by adjacent-swap hill climbing.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import networkx as nx

from .arch import Machine
from .circuits import LogicalCircuit
from .errors import InsufficientDataTiles, ParameterFileError

EXACT_LIMIT = 10
MAX_SWAP_PASSES = 100


@dataclass(frozen=True)
class InteractionGraph:
    nodes: tuple[int, ...]
    weights: dict[tuple[int, int], int] = field(compare=True)

    def weight(self, u: int, v: int) -> int:
        return self.weights.get((min(u, v), max(u, v)), 0)

    def to_networkx(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(self.nodes)
        g.add_weighted_edges_from((u, v, w) for (u, v), w in self.weights.items())
        return g


def build_interaction_graph(circuit: LogicalCircuit) -> InteractionGraph:
    weights: dict[tuple[int, int], int] = {}
    for g in circuit.gates:
        ops = g.operands
        if len(ops) < 2:
            continue
        for i in range(len(ops)):
            for j in range(i + 1, len(ops)):
                key = (min(ops[i], ops[j]), max(ops[i], ops[j]))
                weights[key] = weights.get(key, 0) + 1
    return InteractionGraph(tuple(range(circuit.n_qubits)), weights)


def arrangement_cost(graph: InteractionGraph, ordering: list[int]) -> int:
    pos = {q: i for i, q in enumerate(ordering)}
    return sum(w * abs(pos[u] - pos[v]) for (u, v), w in graph.weights.items())


def _exact(nodes: list[int], adj: dict[int, dict[int, int]]) -> list[int]:
    # The arrangement cost equals the sum of cut weights over every prefix,
    # so the best ordering of a subset extends the best ordering of a
    # smaller subset.
    k = len(nodes)
    idx = {q: i for i, q in enumerate(nodes)}
    nbr = [[(idx[v], w) for v, w in adj[q].items() if v in idx] for q in nodes]
    full = (1 << k) - 1
    best = [0] + [None] * full
    choice = [0] * (full + 1)
    for s in range(1, full + 1):
        cut = 0
        for i in range(k):
            if s >> i & 1:
                cut += sum(w for j, w in nbr[i] if not s >> j & 1)
        top = None
        for i in range(k):
            if s >> i & 1:
                c = best[s & ~(1 << i)]
                if top is None or c < top:
                    top, choice[s] = c, i
        best[s] = top + cut
    order = []
    s = full
    while s:
        i = choice[s]
        order.append(nodes[i])
        s &= ~(1 << i)
    return order[::-1]


def _cost(order: list[int], adj: dict[int, dict[int, int]]) -> int:
    pos = {q: i for i, q in enumerate(order)}
    return sum(w * abs(pos[u] - pos[v]) for u in order for v, w in adj[u].items() if u < v)


def _hill_climb(order: list[int], adj: dict[int, dict[int, int]]) -> list[int]:
    order = list(order)
    pos = {q: i for i, q in enumerate(order)}
    for _ in range(MAX_SWAP_PASSES):
        improved = False
        for i in range(len(order) - 1):
            u, v = order[i], order[i + 1]
            delta = 0
            for x, w in adj[u].items():
                if x != v:
                    delta += w * (abs(pos[x] - (i + 1)) - abs(pos[x] - i))
            for x, w in adj[v].items():
                if x != u:
                    delta += w * (abs(pos[x] - i) - abs(pos[x] - (i + 1)))
            if delta < 0:
                order[i], order[i + 1] = v, u
                pos[u], pos[v] = i + 1, i
                improved = True
        if not improved:
            break
    return order


def spectral_arrange(g: nx.Graph) -> list[int]:
    """Heuristic ordering of one connected component."""
    nodes = sorted(g.nodes)
    if len(nodes) <= 2:
        return nodes
    adj = {q: {v: d["weight"] for v, d in g[q].items()} for q in nodes}
    vec = nx.fiedler_vector(g, weight="weight", normalized=False, method="tracemin_lu", seed=0)
    value = dict(zip(g.nodes, vec))
    if value[nodes[0]] > 0:
        value = {q: -x for q, x in value.items()}
    spectral = _hill_climb(sorted(nodes, key=lambda q: (round(value[q], 12), q)), adj)
    identity = _hill_climb(nodes, adj)
    return spectral if _cost(spectral, adj) <= _cost(identity, adj) else identity


def linear_arrange(graph: InteractionGraph) -> list[int]:
    """Order qubits so heavily interacting pairs sit close together.

    Components are arranged independently and concatenated largest first
    (ties by lowest qubit id).
    """
    g = graph.to_networkx()
    comps = sorted((sorted(c) for c in nx.connected_components(g)), key=lambda c: (-len(c), c[0]))
    out: list[int] = []
    for comp in comps:
        if len(comp) <= EXACT_LIMIT:
            sub = g.subgraph(comp)
            adj = {q: {v: d["weight"] for v, d in sub[q].items()} for q in comp}
            out.extend(_exact(comp, adj))
        else:
            out.extend(spectral_arrange(g.subgraph(comp).copy()))
    return out


@dataclass
class QubitMap:
    assignment: dict[int, tuple[int, int]]

    def __getitem__(self, q: int) -> tuple[int, int]:
        return self.assignment[q]

    def __len__(self) -> int:
        return len(self.assignment)

    def to_text(self) -> str:
        rows = {str(q): list(loc) for q, loc in sorted(self.assignment.items())}
        return json.dumps({"assignment": rows}, indent=1) + "\n"

    @classmethod
    def from_text(cls, text: str) -> QubitMap:
        try:
            rows = json.loads(text)["assignment"]
            return cls({int(q): (int(s), int(t)) for q, (s, t) in rows.items()})
        except (ValueError, KeyError, TypeError) as exc:
            raise ParameterFileError(f"malformed qubit map: {exc}") from exc

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_text())


def assign_tiles(ordering: list[int], machine: Machine) -> QubitMap:
    """Fill Data tiles in arrangement order, computational segments first."""
    slots = machine.data_slots()
    if len(ordering) > len(slots):
        raise InsufficientDataTiles(len(ordering) - len(slots))
    return QubitMap({q: slots[i] for i, q in enumerate(ordering)})


def map_circuit(circuit: LogicalCircuit, machine: Machine) -> QubitMap:
    return assign_tiles(linear_arrange(build_interaction_graph(circuit)), machine)
