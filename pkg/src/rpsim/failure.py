"""Circuit failure probability and its split by noise source.

Every scheduled record contributes one failure term of its noise source.
Memory terms come from idle windows: each stretch a qubit spends between
operations (or error-correction rounds), and each stretch a prepared magic
state waits in its Ancilla tile before being consumed.  An idle window of
length ``t`` fails with ``A * (1 - exp(-t / t_coh)) ** 2`` where ``A`` is
the malignant-pair count of one transversal single-qubit layer.

Products of ``1 - p`` are accumulated as sums of ``log1p(-p)`` so the
identity ``1 - p_fail = prod(1 - component)`` survives millions of tiny
terms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .device import DeviceParams, memory_error_prob
from .errors import InvalidParameter, NoDominantSource
from .scheduler import NoiseSource, Schedule, ScheduledOp, idle_windows
from .tiles import TilePerfDatabase

SOURCES = (NoiseSource.SHUTTLING, NoiseSource.TELEPORTATION, NoiseSource.MEMORY, NoiseSource.GATE)


@dataclass(frozen=True)
class FailureReport:
    p_fail: float
    components: dict[NoiseSource, float]
    op_counts: dict[NoiseSource, int]
    log_success: dict[NoiseSource, float] = field(default_factory=dict, compare=False)

    def shares(self) -> dict[NoiseSource, float]:
        total = sum(self.components.values())
        if total <= 0:
            return {s: 0.0 for s in SOURCES}
        return {s: self.components[s] / total for s in SOURCES}

    def to_dict(self) -> dict:
        return {
            "p_fail": self.p_fail,
            "components": {s.value: self.components[s] for s in SOURCES},
            "shares": {s.value: v for s, v in self.shares().items()},
            "op_counts": {s.value: self.op_counts[s] for s in SOURCES},
        }


def compose(probabilities) -> float:
    """``1 - prod(1 - p)`` computed in log space."""
    acc = 0.0
    for p in probabilities:
        if not 0.0 <= p < 1.0:
            raise InvalidParameter(f"failure probability {p!r} is outside [0, 1)")
        acc += math.log1p(-p)
    return -math.expm1(acc)


def op_failure(op: ScheduledOp, db: TilePerfDatabase, params: DeviceParams) -> float:
    """Failure probability of one record under ``params``."""
    return db[op.op_kind].p_fail(params) * op.units


def memory_failure(t: float, db: TilePerfDatabase, params: DeviceParams) -> float:
    return db.layer_fail_coeff * memory_error_prob(t, params) ** 2


def failure_terms(sched: Schedule, db: TilePerfDatabase, params: DeviceParams):
    """Yield (noise source, probability) for every failure term of a schedule."""
    for op in sched.ops:
        yield op.noise_source, op_failure(op, db, params)
        if op.hold > 0:
            yield NoiseSource.MEMORY, memory_failure(op.hold, db, params)
    for _, start, end, _ in idle_windows(sched):
        yield NoiseSource.MEMORY, memory_failure(end - start, db, params)


def circuit_failure(sched: Schedule, db: TilePerfDatabase, params: DeviceParams) -> FailureReport:
    logs = {s: 0.0 for s in SOURCES}
    counts = {s: 0 for s in SOURCES}
    for src, p in failure_terms(sched, db, params):
        if not 0.0 <= p < 1.0:
            raise InvalidParameter(f"{src.value} failure term {p!r} is outside [0, 1)")
        logs[src] += math.log1p(-p)
        counts[src] += 1
    components = {s: -math.expm1(logs[s]) for s in SOURCES}
    p_fail = -math.expm1(sum(logs[s] for s in SOURCES))
    return FailureReport(p_fail, components, counts, logs)


def dominant_source(report: FailureReport) -> tuple[NoiseSource, float]:
    """Largest component and its share of the component sum."""
    total = sum(report.components.values())
    if report.p_fail <= 0 or total <= 0:
        raise NoDominantSource("failure probability is zero; no source dominates")
    src = max(SOURCES, key=lambda s: (report.components[s], -SOURCES.index(s)))
    return src, report.components[src] / total
