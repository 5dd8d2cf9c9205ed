"""Machine construction: segments of L2 tiles, the optical switch tree and qubit accounting.

Inside a segment the tiles sit on one shuttling line in the order Data,
Ancilla, Communication, Error-Correction; the index of a tile on that line is
its position for shuttle-distance purposes.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields, replace
from enum import Enum
from pathlib import Path
from typing import Any, Iterable

from .device import DeviceParams
from .errors import (
    BudgetExceeded,
    InsufficientTiles,
    InvalidParameter,
    ParameterFileError,
    ReallocationError,
    SegmentCapExceeded,
    TileBusy,
    TooManySegments,
)
from .tiles import MAX_TREE_HEIGHT, TilePerfDatabase, TileType, build_tile

SWITCH_FANOUT = 20
SMALL_SEGMENT_CAP = 5000
LARGE_SEGMENT_CAP = 10000
DEFAULT_BUDGET = 1_500_000

TILE_QUBITS = {t: build_tile(t).physical_qubits for t in TileType}


def _count(name: str, value: Any, minimum: int) -> None:
    if not isinstance(value, int) or isinstance(value, bool) or value < minimum:
        raise InvalidParameter(f"{name} must be an integer >= {minimum}, got {value!r}")


@dataclass(frozen=True)
class ArchConfig:
    """Segment layout.  ``cs_config`` is (n_data, n_anc, n_comm) and
    ``ss_config`` is (n_data, n_comm); the storage default swaps every
    ancilla tile of a computational segment for two data tiles."""

    n_seg: int
    n_cs: int
    cs_config: tuple[int, int, int]
    ss_config: tuple[int, int] | None = None
    n_ec: int = 1
    seg_qubit_cap: int = LARGE_SEGMENT_CAP
    budget_ntq: int = DEFAULT_BUDGET

    def __post_init__(self) -> None:
        object.__setattr__(self, "cs_config", tuple(self.cs_config))
        if self.ss_config is None:
            d, a, c = self.cs_config
            object.__setattr__(self, "ss_config", (d + 2 * a, c))
        else:
            object.__setattr__(self, "ss_config", tuple(self.ss_config))
        _count("n_seg", self.n_seg, 0)
        _count("n_cs", self.n_cs, 0)
        if self.n_cs > self.n_seg:
            raise InvalidParameter(f"n_cs ({self.n_cs}) cannot exceed n_seg ({self.n_seg})")
        if len(self.cs_config) != 3:
            raise InvalidParameter("cs_config must be (n_data, n_anc, n_comm)")
        if len(self.ss_config) != 2:
            raise InvalidParameter("ss_config must be (n_data, n_comm)")
        for name, v in zip(("n_data", "n_anc", "n_comm"), self.cs_config):
            _count(f"cs_config.{name}", v, 1)
        for name, v in zip(("n_data", "n_comm"), self.ss_config):
            _count(f"ss_config.{name}", v, 1)
        if self.n_ec != 1:
            raise InvalidParameter(f"only one error-correction tile per segment is supported, got n_ec={self.n_ec}")
        _count("seg_qubit_cap", self.seg_qubit_cap, 1)
        _count("budget_ntq", self.budget_ntq, 0)

    @property
    def n_ss(self) -> int:
        return self.n_seg - self.n_cs

    def key(self) -> tuple:
        return (self.n_seg, self.n_cs, *self.cs_config, *self.ss_config)

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["cs_config"] = list(self.cs_config)
        d["ss_config"] = list(self.ss_config)
        return d

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")


def load_arch_config(source: str | Path | dict[str, Any]) -> ArchConfig:
    if isinstance(source, dict):
        data = dict(source)
    else:
        try:
            data = json.loads(Path(source).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ParameterFileError(f"cannot read architecture config {source}: {exc}") from exc
    if not isinstance(data, dict):
        raise ParameterFileError("architecture config must hold a JSON object")
    unknown = sorted(set(data) - {f.name for f in fields(ArchConfig)})
    if unknown:
        raise ParameterFileError(f"unknown architecture field(s): {', '.join(unknown)}")
    try:
        return ArchConfig(**data)
    except TypeError as exc:
        raise ParameterFileError(f"bad architecture config: {exc}") from exc


def segment_qubits(n_data: int, n_anc: int, n_comm: int, n_ec: int = 1) -> int:
    return (
        n_data * TILE_QUBITS[TileType.DATA]
        + n_anc * TILE_QUBITS[TileType.ANCILLA]
        + n_comm * TILE_QUBITS[TileType.COMMUNICATION]
        + n_ec * TILE_QUBITS[TileType.ERROR_CORRECTION]
    )


def qubit_count(cfg: ArchConfig) -> int:
    """Physical qubits of every tile of every segment."""
    cs = segment_qubits(*cfg.cs_config, cfg.n_ec)
    ss = segment_qubits(cfg.ss_config[0], 0, cfg.ss_config[1], cfg.n_ec)
    return cfg.n_cs * cs + cfg.n_ss * ss


def switch_height(n_seg: int) -> int:
    """Smallest switch-tree height whose leaves reach ``n_seg`` segments (at least 1)."""
    if n_seg > SWITCH_FANOUT**MAX_TREE_HEIGHT:
        raise TooManySegments(n_seg, SWITCH_FANOUT**MAX_TREE_HEIGHT)
    h = 1
    while SWITCH_FANOUT**h < n_seg:
        h += 1
    return h


class SegmentKind(str, Enum):
    CS = "CS"
    SS = "SS"


@dataclass
class Segment:
    id: int
    kind: SegmentKind
    n_data: int
    n_anc: int
    n_comm: int
    n_ec: int = 1
    physical_qubits: int = 0

    @property
    def is_cs(self) -> bool:
        return self.kind is SegmentKind.CS

    def data_position(self, tile: int) -> int:
        return tile

    def ancilla_position(self, k: int) -> int:
        return self.n_data + k

    def ec_position(self) -> int:
        return self.n_data + self.n_anc + self.n_comm


@dataclass
class Machine:
    config: ArchConfig
    segments: list[Segment]
    switch_height: int
    tile_db: TilePerfDatabase
    params: DeviceParams = field(default=None)

    def __post_init__(self) -> None:
        if self.params is None:
            self.params = self.tile_db.calibration_params

    @property
    def cs_ids(self) -> list[int]:
        return [s.id for s in self.segments if s.is_cs]

    def data_slots(self) -> list[tuple[int, int]]:
        """(segment, tile) pairs of every Data tile, computational segments first."""
        ordered = [s for s in self.segments if s.is_cs] + [s for s in self.segments if not s.is_cs]
        return [(s.id, t) for s in ordered for t in range(s.n_data)]

    def qubit_count(self) -> int:
        return sum(s.physical_qubits for s in self.segments)

    def copy(self) -> Machine:
        return replace(self, segments=[replace(s) for s in self.segments])


def build_machine(cfg: ArchConfig, db: TilePerfDatabase, params: DeviceParams | None = None) -> Machine:
    if cfg.n_seg < 1:
        raise InvalidParameter("a machine needs at least one segment")
    h = switch_height(cfg.n_seg)
    cs_q = segment_qubits(*cfg.cs_config, cfg.n_ec)
    ss_q = segment_qubits(cfg.ss_config[0], 0, cfg.ss_config[1], cfg.n_ec)
    if cfg.n_cs and cs_q > cfg.seg_qubit_cap:
        raise SegmentCapExceeded("CS", cs_q, cfg.seg_qubit_cap)
    if cfg.n_ss and ss_q > cfg.seg_qubit_cap:
        raise SegmentCapExceeded("SS", ss_q, cfg.seg_qubit_cap)
    total = qubit_count(cfg)
    if total > cfg.budget_ntq:
        raise BudgetExceeded(total, cfg.budget_ntq)
    segments = []
    for i in range(cfg.n_seg):
        if i < cfg.n_cs:
            d, a, c = cfg.cs_config
            segments.append(Segment(i, SegmentKind.CS, d, a, c, cfg.n_ec, cs_q))
        else:
            d, c = cfg.ss_config
            segments.append(Segment(i, SegmentKind.SS, d, 0, c, cfg.n_ec, ss_q))
    return Machine(cfg, segments, h, db, params)


class Realloc(str, Enum):
    ANC_TO_DATA = "AncToData"
    DATA_TO_ANC = "DataToAnc"


def reallocate_tile(
    machine: Machine,
    segment_id: int,
    direction: Realloc | str,
    occupied: Iterable[tuple[str, int]] = (),
) -> Machine:
    """Convert one Ancilla tile into two Data tiles or the reverse.

    ``occupied`` lists (tile type, index) pairs holding live state.  The last
    tiles of a kind are the ones converted.  The physical hardware does not
    change, so the segment keeps its qubit count.  Returns a new machine.
    """
    direction = Realloc(direction)
    if not 0 <= segment_id < len(machine.segments):
        raise ReallocationError(f"no segment {segment_id}")
    busy = {(TileType(k), i) for k, i in occupied}
    out = machine.copy()
    seg = out.segments[segment_id]
    if not seg.is_cs:
        raise ReallocationError(f"segment {segment_id} is a storage segment; it hosts no ancilla tiles")
    if direction is Realloc.ANC_TO_DATA:
        if seg.n_anc < 2:
            raise InsufficientTiles(f"segment {segment_id} must keep at least one ancilla tile")
        if (TileType.ANCILLA, seg.n_anc - 1) in busy:
            raise TileBusy(f"ancilla tile {seg.n_anc - 1} of segment {segment_id} is busy")
        seg.n_anc -= 1
        seg.n_data += 2
    else:
        if seg.n_data < 3:
            raise InsufficientTiles(f"segment {segment_id} must keep at least one data tile")
        for t in (seg.n_data - 2, seg.n_data - 1):
            if (TileType.DATA, t) in busy:
                raise TileBusy(f"data tile {t} of segment {segment_id} holds live data")
        seg.n_data -= 2
        seg.n_anc += 1
    return out
