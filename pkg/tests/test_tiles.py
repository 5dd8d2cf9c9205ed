import pytest
from hypothesis import given
from hypothesis import strategies as st

from rpsim.device import BASELINE, DeviceParams
from rpsim.errors import CalibrationError, InvalidParameter, ParameterFileError, UnknownOperation
from rpsim.tiles import (
    OpKind,
    TilePerfDatabase,
    TileType,
    build_tile,
    calibrate_database,
    epr_generation_component,
    logical_epr_perf,
    logical_perf,
)

# Published L2 tile performance at baseline: latency (us), failure probability.
REFERENCE = {
    OpKind.PAULI_XZ: (1, 1.15e-18),
    OpKind.HADAMARD: (4, 1.15e-18),
    OpKind.CNOT: (10, 4.74e-18),
    OpKind.TRANSVERSAL_TOFFOLI: (4210, 1.1e-17),
    OpKind.CAT_STATE_PREP7: (6500, 3.75e-18),
    OpKind.MEASUREMENT: (11900, 6.14e-17),
    OpKind.L2_ERROR_CORRECTION: (48900, 4.58e-16),
    OpKind.L1_ERROR_CORRECTION: (687, 1.66e-10),
    OpKind.PREP_ZERO_PLUS: (34500, 1.6e-16),
    OpKind.PREP_T_MAGIC: (78100, 4.23e-16),
    OpKind.EPR_GENERATION: (5000 + 50800, 1.08e-11),
}


@pytest.mark.parametrize("kind", list(REFERENCE))
def test_reference_reproduced(db, kind):
    lat, p = logical_perf(db, kind, BASELINE)
    assert lat == REFERENCE[kind][0]
    assert p == pytest.approx(REFERENCE[kind][1], rel=0.01)


@pytest.mark.parametrize(
    "tile,l1,qubits",
    [(TileType.DATA, 7, 154), (TileType.ANCILLA, 15, 330), (TileType.ERROR_CORRECTION, 15, 330),
     (TileType.COMMUNICATION, 22, 484 + 49)],
)
def test_tile_composition(tile, l1, qubits):
    spec = build_tile(tile)
    assert (spec.l1_tiles, spec.physical_qubits) == (l1, qubits)
    assert spec.cells <= 600


def test_failure_coefficients(db):
    # A * (1e-7)^2 = reference value
    assert db[OpKind.CNOT].fail_coeffs["p_2q"] == pytest.approx(4.74e-18 / 1e-14, rel=1e-12)
    assert db[OpKind.PAULI_XZ].fail_coeffs["p_1q"] == pytest.approx(1.15e-18 / 1e-14, rel=1e-12)


def test_quadratic_scaling_example(db):
    _, p = logical_perf(db, OpKind.CNOT, DeviceParams(p_gate=0.5e-7))
    assert p == pytest.approx(1.185e-18, rel=1e-12)


def test_epr_latency_and_tree(db):
    assert logical_epr_perf(db, BASELINE, 1)[0] == 55800
    assert epr_generation_component(db, BASELINE, 1) == 5000
    assert epr_generation_component(db, BASELINE, 3) == 20000
    assert logical_epr_perf(db, BASELINE, 3)[0] == 20000 + 50800
    assert logical_epr_perf(db, BASELINE, 2)[1] == pytest.approx(1.08e-11, rel=0.01)
    with pytest.raises(InvalidParameter):
        logical_epr_perf(db, BASELINE, 4)


def test_composites(db):
    lat = {k: logical_perf(db, k, BASELINE)[0] for k in OpKind}
    assert lat[OpKind.TELEPORT_DATA] == 10 + 11900 + 1
    assert lat[OpKind.PREP_TOFFOLI_MAGIC] == 34500 + 6500 + 4210 + 11900 + 48900
    assert lat[OpKind.SHUTTLE] == BASELINE.t_shutt_tile


def test_unknown_operation(db):
    with pytest.raises(UnknownOperation):
        db["Teleport"]


def test_calibration_needs_nonzero_rates():
    with pytest.raises(CalibrationError):
        calibrate_database(DeviceParams(p_epr=0.0))


def test_calibration_rejects_negative_residual():
    # a 2 ms CNOT cannot fit inside the 687 us L1 error-correction budget
    with pytest.raises(CalibrationError):
        calibrate_database(DeviceParams(t_2q=2000.0))


def test_save_load(db, tmp_path):
    db.save(tmp_path / "db.json")
    back = TilePerfDatabase.load(tmp_path / "db.json")
    for k in OpKind:
        assert logical_perf(back, k, BASELINE) == logical_perf(db, k, BASELINE)
    (tmp_path / "bad.json").write_text("{}")
    with pytest.raises(ParameterFileError):
        TilePerfDatabase.load(tmp_path / "bad.json")


durations = ("t_1q", "t_2q", "t_3q", "t_meas", "t_epr_gen", "t_shutt_cell", "t_shutt_tile")


@given(st.floats(min_value=0.01, max_value=100))
def test_latency_linear_in_durations(factor):
    db = calibrate_database()
    scaled = BASELINE.scaled(**{k: factor for k in durations})
    for k in OpKind:
        assert db[k].latency(scaled) == pytest.approx(factor * db[k].latency(BASELINE), rel=1e-12)


@given(st.floats(min_value=1e-3, max_value=10))
def test_failure_quadratic_in_rates(factor):
    db = calibrate_database()
    scaled = BASELINE.scaled(p_gate=factor, p_epr=factor, p_shutt=factor)
    for k in OpKind:
        assert db[k].p_fail(scaled) == pytest.approx(factor**2 * db[k].p_fail(BASELINE), rel=1e-12)


@given(st.floats(min_value=1e-9, max_value=1e-3), st.floats(min_value=1e-9, max_value=1e-3))
def test_failure_monotone_in_rates(p1, p2):
    db = calibrate_database()
    lo, hi = sorted((p1, p2))
    for k in OpKind:
        assert db[k].p_fail(DeviceParams(p_gate=lo, p_epr=lo)) <= db[k].p_fail(DeviceParams(p_gate=hi, p_epr=hi))
