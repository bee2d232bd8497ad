import json

import pytest

from fkpde import fileio
from fkpde.cli import load_pde_config, main

PDE_CFG = """
pde = convdiff
beta = 0.1
kappa = 0.005
grid = 64
T = 2.0
frames = 10
N = 5
"""

EXP_CFG = """
suite = convdiff
case = E1
solver = propagator
solver_steps = 10
test_count = 2
seeds = 0
"""


@pytest.fixture
def pde_cfg(tmp_path):
    path = tmp_path / "pde.cfg"
    path.write_text(PDE_CFG)
    return str(path)


def test_load_pde_config(pde_cfg):
    pde, N = load_pde_config(pde_cfg)
    assert pde.grid.resolution == (64,)
    assert N == 5
    assert pde.kind.kappa == 0.005


def test_gen_ic_and_solve_ref(tmp_path, pde_cfg):
    ics = tmp_path / "ics.fkf"
    assert main(["gen-ic", "--pde-config", pde_cfg, "--count", "3",
                 "--seed", "1", "--out", str(ics)]) == 0
    fields = fileio.read_fields(ics)
    assert len(fields) == 3

    traj = tmp_path / "ref.fkf"
    assert main(["solve-ref", "--pde-config", pde_cfg, "--ic", str(ics),
                 "--scheme", "exact", "--steps", "10", "--out", str(traj)]) == 0
    frames = fileio.read_fields(traj)
    assert len(frames) == 30  # 10 frames per initial condition

    mc = tmp_path / "mc.fkf"
    assert main(["solve-mc", "--pde-config", pde_cfg, "--ic", str(ics),
                 "--particles", "50", "--steps", "200", "--seed", "0",
                 "--out", str(mc)]) == 0
    assert len(fileio.read_fields(mc)) == 30


def test_export_op(tmp_path, pde_cfg):
    out = tmp_path / "op.fkw"
    assert main(["export-op", "--pde-config", pde_cfg, "--out", str(out)]) == 0
    op = fileio.read_operator(out)
    assert op["header"]["rows"] == 64
    assert op["header"]["dt"] == 0.2


def test_bench_writes_report_and_figures(tmp_path, pde_cfg):
    cfg = tmp_path / "exp.cfg"
    cfg.write_text(EXP_CFG)
    out = tmp_path / "report.json"
    assert main(["bench", "--config", str(cfg), "--out", str(out)]) == 0
    payload = json.loads(out.read_text())
    assert payload["results"]["cases"][0]["e_l2_mean"] < 0.01
    assert (tmp_path / "report_E1.csv").exists()
    assert (tmp_path / "report_E1.png").exists()


def test_bench_no_figures(tmp_path, pde_cfg):
    cfg = tmp_path / "exp.cfg"
    cfg.write_text(EXP_CFG)
    out = tmp_path / "r.json"
    assert main(["bench", "--config", str(cfg), "--out", str(out), "--no-figures"]) == 0
    assert not (tmp_path / "r_E1.png").exists()


def test_bad_config_exit_code(tmp_path):
    cfg = tmp_path / "exp.cfg"
    cfg.write_text("suite = bogus\n")
    assert main(["bench", "--config", str(cfg), "--out", str(tmp_path / "r.json")]) == 3


def test_missing_file_exit_code(tmp_path):
    assert main(["gen-ic", "--pde-config", str(tmp_path / "nope.cfg"),
                 "--out", str(tmp_path / "x.fkf")]) == 3
