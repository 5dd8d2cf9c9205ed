"""Exception hierarchy shared by every stage of the pipeline."""


class RPSimError(Exception):
    """Base class for all simulator errors."""

    stage: str | None = None


class InvalidParameter(RPSimError, ValueError):
    """A numeric input is out of range or malformed."""


class ParameterFileError(RPSimError):
    """A device-parameter, architecture or schedule file could not be parsed."""


class CalibrationError(RPSimError):
    """Tile database calibration would need a negative coefficient."""


class UnknownOperation(RPSimError, KeyError):
    """An op kind is missing from the tile database."""


class CircuitError(RPSimError, ValueError):
    """A circuit is malformed or uses an unsupported gate."""


class InfeasibleConfig(RPSimError):
    """The architecture cannot be built under the given constraints."""


class BudgetExceeded(InfeasibleConfig):
    def __init__(self, required: int, budget: int):
        self.required = required
        self.budget = budget
        self.overage = required - budget
        super().__init__(
            f"configuration needs {required} physical qubits, budget is {budget} "
            f"(over by {self.overage})"
        )


class SegmentCapExceeded(InfeasibleConfig):
    def __init__(self, kind: str, qubits: int, cap: int):
        self.kind = kind
        self.qubits = qubits
        self.cap = cap
        super().__init__(f"{kind} segment needs {qubits} physical qubits, cap is {cap}")


class TooManySegments(InfeasibleConfig):
    def __init__(self, n_seg: int, max_seg: int):
        self.n_seg = n_seg
        super().__init__(
            f"{n_seg} segments need an optical switch tree taller than 3 (max {max_seg})"
        )


class NoFeasibleConfig(InfeasibleConfig):
    """No point of the search grid fits the qubit budget."""


class InsufficientDataTiles(InfeasibleConfig):
    def __init__(self, shortfall: int):
        self.shortfall = shortfall
        super().__init__(f"not enough Data tiles: short by {shortfall}")


class ReallocationError(RPSimError):
    """A Data/Ancilla tile conversion was refused."""


class TileBusy(ReallocationError):
    pass


class InsufficientTiles(ReallocationError):
    pass


class UnmappedQubit(RPSimError, KeyError):
    pass


class NoDominantSource(RPSimError):
    """Raised when a failure report has zero total failure probability."""
