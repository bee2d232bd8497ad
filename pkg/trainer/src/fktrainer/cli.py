"""The ``fkt`` command line tool: train and evaluate the operator model."""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np
import torch

from .client import ServiceClient
from .formats import read_fields, read_operator
from .model import ModelConfig, OperatorModel
from .training import TrainConfig, evaluate, train_mcnp


def _cmd_train(args) -> int:
    op = read_operator(args.operator)
    tcfg = TrainConfig(epochs=args.epochs, batch=args.batch, lr=args.lr,
                       n_freq=args.n_freq, frames=args.frames,
                       horizon=args.horizon, seed=args.seed)
    mcfg = ModelConfig(modes=args.modes, width=args.width, resolution=op.rows)
    model, losses = train_mcnp(op, mcfg, tcfg)
    torch.save({"model": model.state_dict(), "model_config": mcfg.__dict__,
                "train_config": tcfg.__dict__}, args.out)
    if args.loss_csv:
        with open(args.loss_csv, "w") as fh:
            fh.write("epoch,loss\n")
            for i, v in enumerate(losses, 1):
                fh.write(f"{i},{v:.10g}\n")
    print(f"trained {args.epochs} epochs; final loss {losses[-1]:.5g}; saved {args.out}")

    if args.service:
        host, port = args.service.split(":")[-2:]
        client, sock = ServiceClient.connect_tcp(host, int(port))
        rng = np.random.default_rng(0)
        worst = 0.0
        for _ in range(3):
            u = rng.standard_normal(op.rows)
            via_wire = client.propagate(u, t=0.0)
            via_file = op.apply(u)
            worst = max(worst, float(np.max(np.abs(via_wire - via_file))))
        sock.close()
        print(f"service spot check: max |service - operator| = {worst:.3g}")
    return 0


def load_model(path) -> OperatorModel:
    blob = torch.load(path, weights_only=False)
    model = OperatorModel(ModelConfig(**blob["model_config"]))
    model.load_state_dict(blob["model"])
    model.eval()
    return model


def _cmd_eval(args) -> int:
    model = load_model(args.model)
    ics = read_fields(args.ics).frames
    ref_file = read_fields(args.ref)
    frames = args.frames
    n = ics.shape[0]
    refs = ref_file.frames.reshape(n, frames, -1)
    metrics = evaluate(model, ics, refs, frames=frames, horizon=args.horizon)
    report = {"results": {"config": vars(args) | {"model": str(args.model)},
                          "cases": [{"case": "eval", "e_l2_mean": metrics["e_l2"],
                                     "e_linf_mean": metrics["e_linf"],
                                     "count": metrics["count"]}]}}
    with open(args.out, "w") as fh:
        json.dump(report, fh, indent=2, default=str)
    print(f"E_l2 = {100 * metrics['e_l2']:.3f}%  E_linf = {100 * metrics['e_linf']:.3f}%")
    return 0


def main(argv=None) -> int:
    p = argparse.ArgumentParser(prog="fkt", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="fit the operator model with the consistency loss")
    t.add_argument("--operator", required=True, help="FKW1 file from `fk export-op`")
    t.add_argument("--epochs", type=int, default=2000)
    t.add_argument("--batch", type=int, default=200)
    t.add_argument("--lr", type=float, default=0.01)
    t.add_argument("--n-freq", type=int, default=5)
    t.add_argument("--frames", type=int, default=10)
    t.add_argument("--horizon", type=float, default=2.0)
    t.add_argument("--modes", type=int, default=12)
    t.add_argument("--width", type=int, default=32)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--out", required=True)
    t.add_argument("--loss-csv", default=None)
    t.add_argument("--service", default=None,
                   help="tcp:HOST:PORT — spot-check targets against the live service")
    t.set_defaults(func=_cmd_train)

    e = sub.add_parser("eval", help="score a trained model against reference trajectories")
    e.add_argument("--model", required=True)
    e.add_argument("--ics", required=True, help="FKF1 test initial conditions")
    e.add_argument("--ref", required=True, help="FKF1 reference trajectories")
    e.add_argument("--frames", type=int, default=10)
    e.add_argument("--horizon", type=float, default=2.0)
    e.add_argument("--out", required=True)
    e.set_defaults(func=_cmd_eval)

    args = p.parse_args(argv)
    try:
        return args.func(args)
    except (FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
