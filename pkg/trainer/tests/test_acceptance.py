"""Secondary acceptance: S1 (toy training reaches 1%) and S2 (service and
operator file agree byte-for-byte). One PASS/FAIL line each."""

import shutil

import numpy as np
import pytest

from fktrainer.client import ServiceClient
from fktrainer.formats import read_fields, read_operator
from fktrainer.model import ModelConfig
from fktrainer.training import TrainConfig, evaluate, train_mcnp


def report(name, ok, detail):
    print(f"\n{name} {'PASS' if ok else 'FAIL'}: {detail}")
    assert ok, f"{name}: {detail}"


def test_s1_toy_training_reaches_one_percent(engine_files):
    op = read_operator(engine_files["operator"])
    # desk schedule: single-CPU budget keeps the batch at 64 for 2000 epochs
    cfg = TrainConfig(epochs=2000, batch=64, lr=0.01, n_freq=5, seed=0)
    model, losses = train_mcnp(op, ModelConfig(resolution=64), cfg)
    ics = read_fields(engine_files["ics"]).frames
    refs = read_fields(engine_files["ref"]).frames.reshape(50, 10, 64)
    metrics = evaluate(model, ics, refs)
    report("S1", metrics["e_l2"] <= 0.01,
           f"held-out E_l2 = {100 * metrics['e_l2']:.3f}% (<= 1%) after "
           f"{cfg.epochs} epochs (loss {losses[0]:.3f} -> {losses[-1]:.4f}), "
           f"E_linf = {100 * metrics['e_linf']:.3f}%")


def test_s2_service_matches_operator_file(engine_files):
    if shutil.which("fk") is None:
        pytest.skip("the propagation engine CLI (fk) is not installed")
    op = read_operator(engine_files["operator"])
    client, proc = ServiceClient.spawn_stdio(
        ["fk", "serve", "--pde-config", str(engine_files["pde_cfg"]),
         "--transport", "stdio"])
    try:
        rng = np.random.default_rng(99)
        identical = 0
        for _ in range(10):
            u = rng.standard_normal(op.rows)
            if client.propagate(u, t=0.0).tobytes() == op.apply(u).tobytes():
                identical += 1
    finally:
        proc.stdin.close()
        proc.wait(timeout=10)
    report("S2", identical == 10,
           f"service responses byte-identical to operator-file application "
           f"on {identical}/10 random fields")
