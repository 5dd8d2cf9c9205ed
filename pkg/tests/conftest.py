import pytest

from rpsim.arch import ArchConfig, build_machine
from rpsim.circuits import expand_fault_tolerant
from rpsim.mapper import map_circuit
from rpsim.scheduler import schedule_best
from rpsim.tiles import calibrate_database


@pytest.fixture(scope="session")
def db():
    return calibrate_database()


def fitted(n_qubits, cs_config, budget=10**9):
    """All-computational config with just enough segments for ``n_qubits``."""
    n_seg = -(-n_qubits // cs_config[0])
    return ArchConfig(n_seg, n_seg, cs_config, budget_ntq=budget)


def run_schedule(circuit, cfg, db, expand=True):
    c = expand_fault_tolerant(circuit) if expand else circuit
    m = build_machine(cfg, db)
    return schedule_best(c, m, map_circuit(c, m)), m


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
