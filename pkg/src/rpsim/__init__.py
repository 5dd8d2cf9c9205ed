"""Resource-performance simulator for fault-tolerant trapped-ion quantum architectures."""

from .arch import ArchConfig, Machine, build_machine, load_arch_config, qubit_count
from .circuits import LogicalCircuit, expand_fault_tolerant, gen_aqft, gen_qcla, gen_qrca
from .device import BASELINE, DeviceParams, load_device_params
from .errors import InfeasibleConfig, RPSimError
from .explorer import Benchmark, estimate_shor_runtime, optimize, run_pipeline, sweep
from .failure import FailureReport, circuit_failure, dominant_source
from .mapper import QubitMap, map_circuit
from .scheduler import CriticalPathBreakdown, Schedule, insert_error_correction, schedule, schedule_best
from .tiles import OpKind, TilePerfDatabase, calibrate_database

__version__ = "0.1.0"

__all__ = [
    "ArchConfig",
    "BASELINE",
    "Benchmark",
    "CriticalPathBreakdown",
    "DeviceParams",
    "FailureReport",
    "InfeasibleConfig",
    "LogicalCircuit",
    "Machine",
    "OpKind",
    "QubitMap",
    "RPSimError",
    "Schedule",
    "TilePerfDatabase",
    "build_machine",
    "calibrate_database",
    "circuit_failure",
    "dominant_source",
    "estimate_shor_runtime",
    "expand_fault_tolerant",
    "gen_aqft",
    "gen_qcla",
    "gen_qrca",
    "insert_error_correction",
    "load_arch_config",
    "load_device_params",
    "map_circuit",
    "optimize",
    "qubit_count",
    "run_pipeline",
    "schedule",
    "schedule_best",
    "sweep",
]
