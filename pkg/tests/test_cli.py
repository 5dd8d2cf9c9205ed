import csv
import json

import pytest

from rpsim import __version__
from rpsim.arch import ArchConfig
from rpsim.circuits import expand_fault_tolerant, gen_qrca
from rpsim.cli import default_arch, main, parse_duration
from rpsim.device import BASELINE, save_device_params


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_tiles(capsys, tmp_path):
    code, out, _ = run(capsys, "tiles")
    assert code == 0 and "PrepTMagic" in out and "78100" in out
    code, _, _ = run(capsys, "tiles", "--out", str(tmp_path / "db.json"))
    assert code == 0 and "entries" in json.loads((tmp_path / "db.json").read_text())


def test_run_with_files(capsys, tmp_path):
    arch = tmp_path / "a.json"
    ArchConfig(4, 4, (12, 4, 1)).save(arch)
    dp = tmp_path / "dp.json"
    save_device_params(BASELINE, dp)
    out = tmp_path / "r.json"
    code, _, _ = run(capsys, "run", "--circuit", "qrca", "--bits", "16", "--arch", str(arch), "--dp", str(dp),
                     "--out", str(out), "--seed", "3")
    assert code == 0
    rep = json.loads(out.read_text())
    b = rep["breakdown"]
    assert sum(b[k] for k in ("t_anc", "t_shut", "t_tel", "t_swp", "t_gate")) == pytest.approx(b["t_total"], rel=1e-9)
    comps = rep["failure"]["components"]
    prod = 1.0
    for v in comps.values():
        prod *= 1 - v
    assert 1 - rep["failure"]["p_fail"] == pytest.approx(prod, rel=1e-12)
    assert rep["version"] == __version__ and rep["seed"] == 3
    assert rep["device"]["digest"] == BASELINE.digest()
    c = gen_qrca(16)
    assert rep["benchmark"] == {"circuit": "qrca", "bits": 16, "logical_qubits": c.n_qubits,
                                "logical_gates": len(c.gates), "expanded_gates": len(expand_fault_tolerant(c).gates)}
    assert rep["runtime_s"] > 0 and rep["warnings"] == []


def test_run_default_single_segment(capsys):
    code, out, _ = run(capsys, "run", "--circuit", "aqft", "--bits", "8")
    rep = json.loads(out)
    assert code == 0 and rep["arch"]["n_seg"] == 1
    assert rep["breakdown"]["t_tel"] == 0 and rep["breakdown"]["t_swp"] == 0


def test_stage_tagged_errors(capsys, tmp_path):
    code, _, err = run(capsys, "run", "--circuit", "qrca", "--bits", "0")
    e = json.loads(err)["error"]
    assert code == 1 and e["stage"] == "generate" and e["type"] == "InvalidParameter"
    bad = tmp_path / "dp.json"
    bad.write_text("{}")
    code, _, err = run(capsys, "run", "--circuit", "qrca", "--bits", "4", "--dp", str(bad))
    assert code == 1 and json.loads(err)["error"]["stage"] == "config"


def test_infeasible_exit_code(capsys, tmp_path):
    arch = tmp_path / "a.json"
    ArchConfig(1, 1, (3, 1, 1)).save(arch)
    code, _, err = run(capsys, "run", "--circuit", "qrca", "--bits", "4", "--arch", str(arch))
    e = json.loads(err)["error"]
    assert code == 2 and e["stage"] == "map" and e["type"] == "InsufficientDataTiles"
    code, _, err = run(capsys, "run", "--circuit", "qcla", "--bits", "64", "--budget", "1000")
    assert code == 2 and json.loads(err)["error"]["type"] == "BudgetExceeded"


def test_shor_estimate(capsys):
    code, out, _ = run(capsys, "shor-estimate", "2048", "0.68s")
    rep = json.loads(out)
    assert code == 0 and rep["feasible"] and rep["total_days"] == pytest.approx(128, rel=0.02)
    code, out, _ = run(capsys, "shor-estimate", "2048", "0.8s")
    assert json.loads(out)["feasible"] is False


def test_parse_duration():
    assert parse_duration("0.68s") == 0.68
    assert parse_duration("680ms") == pytest.approx(0.68)
    assert parse_duration("1d") == 86400
    assert parse_duration("2") == 2.0


def test_sweep_and_optimize(capsys, tmp_path):
    out, twin = tmp_path / "s.json", tmp_path / "s.csv"
    code, _, _ = run(capsys, "sweep", "--circuit", "qcla", "--bits", "8", "--data", "4,6", "--anc", "1,2",
                     "--comm", "1", "--out", str(out), "--csv", str(twin))
    assert code == 0
    rows = json.loads(out.read_text())["rows"]
    assert len(rows) == 4 and len(list(csv.reader(twin.open()))) == 5
    best = min(r["t_total_us"] for r in rows)
    code, stdout, _ = run(capsys, "optimize", "--circuit", "qcla", "--bits", "8", "--data", "4,6", "--anc", "1,2",
                          "--comm", "1")
    assert code == 0 and json.loads(stdout)["t_total_us"] == best
    code, _, err = run(capsys, "optimize", "--circuit", "qcla", "--bits", "8", "--data", "4", "--anc", "1",
                       "--comm", "1", "--budget", "100")
    assert code == 2 and json.loads(err)["error"]["type"] == "NoFeasibleConfig"


def test_viz_from_schedule(capsys, tmp_path):
    arch = tmp_path / "a.json"
    ArchConfig(4, 4, (8, 2, 1)).save(arch)
    sched, svg1, svg2 = tmp_path / "s.txt", tmp_path / "a.svg", tmp_path / "b.svg"
    code, _, _ = run(capsys, "run", "--circuit", "qcla", "--bits", "8", "--arch", str(arch),
                     "--schedule-out", str(sched), "--viz", str(svg1), "--out", str(tmp_path / "r.json"))
    assert code == 0
    code, _, _ = run(capsys, "viz", "--schedule", str(sched), "--out", str(svg2))
    assert code == 0 and svg1.read_bytes() == svg2.read_bytes()
    code, _, err = run(capsys, "viz", "--schedule", str(sched), "--out", str(tmp_path / "no" / "x.svg"))
    assert code == 1 and json.loads(err)["error"]["stage"] == "viz"


def test_default_arch_respects_cap():
    cfg = default_arch(200, 5000, 10**6)
    from rpsim.arch import segment_qubits

    assert segment_qubits(*cfg.cs_config) <= 5000
    assert cfg.n_seg * cfg.cs_config[0] >= 200
