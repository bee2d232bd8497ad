import pathlib
import shutil
import subprocess

import pytest

PDE_CFG = """
pde = convdiff
beta = 0.1
kappa = 0.005
grid = 64
T = 2.0
frames = 10
N = 5
"""


def run_fk(*args):
    exe = shutil.which("fk")
    if exe is None:
        pytest.skip("the propagation engine CLI (fk) is not installed")
    subprocess.run([exe, *args], check=True, capture_output=True)


@pytest.fixture(scope="session")
def engine_files(tmp_path_factory):
    """Operator + held-out test data produced through the engine's CLI."""
    root = tmp_path_factory.mktemp("engine")
    pde_cfg = root / "pde.cfg"
    pde_cfg.write_text(PDE_CFG)
    op = root / "op.fkw"
    ics = root / "test_ics.fkf"
    ref = root / "test_ref.fkf"
    run_fk("export-op", "--pde-config", str(pde_cfg), "--out", str(op))
    run_fk("gen-ic", "--pde-config", str(pde_cfg), "--count", "50",
           "--seed", "1", "--out", str(ics))
    run_fk("solve-ref", "--pde-config", str(pde_cfg), "--ic", str(ics),
           "--scheme", "exact", "--steps", "10", "--out", str(ref))
    return {"pde_cfg": pde_cfg, "operator": op, "ics": ics, "ref": ref}


FIXTURES = pathlib.Path(__file__).parent / "fixtures"
