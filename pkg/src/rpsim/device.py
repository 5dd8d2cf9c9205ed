"""Physical device parameters and the physical-level noise models.

All durations are in microseconds and all probabilities are dimensionless.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Any

from .errors import InvalidParameter, ParameterFileError

DEFAULT_T_COH = 1e10

_DURATIONS = (
    "t_1q",
    "t_2q",
    "t_3q",
    "t_meas",
    "t_epr_gen",
    "t_shutt_cell",
    "t_shutt_tile",
    "t_coh",
)
_PROBABILITIES = ("p_gate", "p_epr", "p_shutt")
_OVERRIDES = ("p_1q", "p_2q", "p_3q", "p_meas")
REQUIRED_FIELDS = ("t_1q", "t_2q", "t_3q", "t_meas", "t_epr_gen", "p_gate", "p_epr")


def _is_number(value: object) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


@dataclass(frozen=True)
class DeviceParams:
    """Trapped-ion device parameters.

    The baseline instance reproduces the reference table of physical gate
    times and failure rates, with a 1 us cell shuttle and a 60 us tile
    shuttle.  ``p_shutt`` is the physical failure probability of moving an
    ion across one L2 tile.  The per-class fields ``p_1q`` .. ``p_meas``
    override ``p_gate`` for a single operation class when set.
    """

    t_1q: float = 1.0
    t_2q: float = 10.0
    t_3q: float = 100.0
    t_meas: float = 100.0
    t_epr_gen: float = 5000.0
    p_gate: float = 1e-7
    p_epr: float = 1e-4
    t_shutt_cell: float = 1.0
    t_shutt_tile: float = 60.0
    t_coh: float = DEFAULT_T_COH
    p_shutt: float = 1e-5
    p_1q: float | None = None
    p_2q: float | None = None
    p_3q: float | None = None
    p_meas: float | None = None

    def __post_init__(self) -> None:
        for name in _DURATIONS:
            value = getattr(self, name)
            if not _is_number(value) or not math.isfinite(value) or value <= 0:
                raise InvalidParameter(f"{name} must be a positive duration, got {value!r}")
        for name in _PROBABILITIES + _OVERRIDES:
            value = getattr(self, name)
            if value is None and name in _OVERRIDES:
                continue
            if not _is_number(value) or not (0.0 <= value < 1.0):
                raise InvalidParameter(f"{name} must be a probability in [0, 1), got {value!r}")

    # Physical-class lookups used by the tile engine's coefficient maps.
    def duration(self, cls: str) -> float:
        return float(getattr(self, cls))

    def error_rate(self, cls: str) -> float:
        if cls in _OVERRIDES:
            value = getattr(self, cls)
            return self.p_gate if value is None else value
        return float(getattr(self, cls))

    def scaled(self, **factors: float) -> DeviceParams:
        """Return a copy with the named fields multiplied by the given factors."""
        return replace(self, **{k: getattr(self, k) * v for k, v in factors.items()})

    def to_dict(self) -> dict[str, Any]:
        return {k: v for k, v in asdict(self).items() if v is not None}

    def digest(self) -> str:
        payload = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(payload).hexdigest()[:16]


BASELINE = DeviceParams()


def memory_fidelity(t: float, params: DeviceParams) -> float:
    """Fidelity of an idle qubit after ``t`` microseconds, ``exp(-t / t_coh)``."""
    if t < 0:
        raise InvalidParameter(f"idle time must be non-negative, got {t}")
    return math.exp(-t / params.t_coh)


def memory_error_prob(t: float, params: DeviceParams) -> float:
    """Depolarizing error probability accumulated while idle for ``t``.

    The error is split evenly between X, Z and Y flips; callers that need a
    single Pauli channel take a third of the returned value.
    """
    if t < 0:
        raise InvalidParameter(f"idle time must be non-negative, got {t}")
    return -math.expm1(-t / params.t_coh)


def load_device_params(source: str | Path | dict[str, Any]) -> DeviceParams:
    """Load device parameters from a JSON file (or an already-parsed mapping).

    The gate, measurement and EPR entries are required.  Shuttle constants,
    ``p_shutt`` and the per-class overrides fall back to baseline values and
    ``t_coh`` defaults to 1e10 us.  Unknown keys are rejected so typos don't
    pass silently.
    """
    if isinstance(source, dict):
        data = dict(source)
    else:
        path = Path(source)
        try:
            data = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ParameterFileError(f"cannot read device parameters from {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ParameterFileError("device parameter file must hold a JSON object")
    known = {f.name for f in fields(DeviceParams)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ParameterFileError(f"unknown device parameter(s): {', '.join(unknown)}")
    missing = [k for k in REQUIRED_FIELDS if k not in data]
    if missing:
        raise ParameterFileError(f"missing device parameter(s): {', '.join(missing)}")
    for key, value in data.items():
        if value is not None and not _is_number(value):
            raise ParameterFileError(f"{key} must be numeric, got {value!r}")
    return DeviceParams(**data)


def save_device_params(params: DeviceParams, path: str | Path) -> None:
    Path(path).write_text(json.dumps(params.to_dict(), indent=2, sort_keys=True) + "\n")
