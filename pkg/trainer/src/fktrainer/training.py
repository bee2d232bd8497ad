"""Unsupervised training against the exported propagation operator.

The loss ties consecutive frames together: for every frame index k the
network output at t_{k+1} must match the one-step propagation W G(u0,t_k)
+ g of its own output at t_k (with G(u0, 0) fixed to u0). Fresh initial
conditions are drawn every epoch, so no solution data is ever consumed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch

from .formats import Operator, check_operator
from .model import ModelConfig, OperatorModel


@dataclass
class TrainConfig:
    epochs: int = 2000
    batch: int = 200
    lr: float = 0.01           # paper sweep {0.02, 0.01, 0.005, 0.001}
    n_freq: int = 5            # sine-series frequency cap of the IC family
    frames: int = 10
    horizon: float = 2.0
    decay_every_frac: float = 0.1
    seed: int = 0


def sample_sine_batch(rng: np.random.Generator, batch: int, n_freq: int,
                      resolution: int) -> np.ndarray:
    x = np.arange(resolution) / resolution
    basis = np.sin(2.0 * np.pi * np.outer(x, np.arange(1, n_freq + 1)))
    coeffs = rng.uniform(0.0, 1.0, (batch, n_freq))
    return coeffs @ basis.T


def mcnp_loss(model: OperatorModel, u0: torch.Tensor, W: torch.Tensor,
              g: torch.Tensor, cfg: TrainConfig) -> torch.Tensor:
    """Sum over frame transitions of the per-sample field-consistency norm.

    All frame queries go through one stacked forward pass; the k-th output
    appears both as the left side of transition k and (propagated by W) as
    the target of transition k+1, with gradients flowing through both.
    """
    b, P = u0.shape
    dt = cfg.horizon / cfg.frames
    times = torch.arange(1, cfg.frames + 1, dtype=u0.dtype) * dt
    preds = model(u0.repeat(cfg.frames, 1),
                  times.repeat_interleave(b)).reshape(cfg.frames, b, P)
    sources = torch.cat([u0[None], preds[:-1]], dim=0)
    targets = sources @ W.T + g
    return torch.linalg.vector_norm(preds - targets, dim=2).mean(dim=1).sum()


def train_mcnp(operator: Operator, model_cfg: ModelConfig = None,
               train_cfg: TrainConfig = None, seed: int = None):
    """Fit the operator model; returns (model, per-epoch loss list)."""
    train_cfg = train_cfg or TrainConfig()
    if seed is not None:
        train_cfg = TrainConfig(**{**train_cfg.__dict__, "seed": seed})
    model_cfg = model_cfg or ModelConfig(resolution=operator.rows)
    check_operator(operator, model_cfg.resolution, train_cfg.horizon / train_cfg.frames)

    torch.manual_seed(train_cfg.seed)
    rng = np.random.default_rng((train_cfg.seed, 0xFC))
    model = OperatorModel(model_cfg)
    W = torch.from_numpy(operator.dense()).to(torch.float32)
    g = torch.from_numpy(operator.forcing).to(torch.float32)

    opt = torch.optim.Adam(model.parameters(), lr=train_cfg.lr)
    decay_every = max(1, int(train_cfg.epochs * train_cfg.decay_every_frac))
    sched = torch.optim.lr_scheduler.StepLR(opt, step_size=decay_every, gamma=0.5)
    losses = []
    for _ in range(train_cfg.epochs):
        u0 = torch.from_numpy(
            sample_sine_batch(rng, train_cfg.batch, train_cfg.n_freq,
                              model_cfg.resolution)).to(torch.float32)
        opt.zero_grad()
        loss = mcnp_loss(model, u0, W, g, train_cfg)
        loss.backward()
        opt.step()
        sched.step()
        losses.append(float(loss.detach()))
    model.eval()
    return model, losses


def initial_loss(operator: Operator, model_cfg: ModelConfig = None,
                 train_cfg: TrainConfig = None) -> float:
    """Loss of a freshly initialized model on one seeded batch (no updates)."""
    train_cfg = train_cfg or TrainConfig()
    model_cfg = model_cfg or ModelConfig(resolution=operator.rows)
    torch.manual_seed(train_cfg.seed)
    rng = np.random.default_rng((train_cfg.seed, 0xFC))
    model = OperatorModel(model_cfg)
    W = torch.from_numpy(operator.dense()).to(torch.float32)
    g = torch.from_numpy(operator.forcing).to(torch.float32)
    u0 = torch.from_numpy(
        sample_sine_batch(rng, train_cfg.batch, train_cfg.n_freq,
                          model_cfg.resolution)).to(torch.float32)
    with torch.no_grad():
        return float(mcnp_loss(model, u0, W, g, train_cfg))


# ---------------------------------------------------------------------------
# evaluation


def trajectory_errors(pred: np.ndarray, ref: np.ndarray) -> tuple[float, float]:
    """Frame-averaged relative l2/linf errors, the benchmark definition:
    per frame, |pred - ref|_2 / |ref|_2 and max|pred - ref| / max|ref|."""
    pred = np.asarray(pred, dtype=np.float64)
    ref = np.asarray(ref, dtype=np.float64)
    if pred.shape != ref.shape:
        raise ValueError(f"shape mismatch: {pred.shape} vs {ref.shape}")
    e2, einf = [], []
    for p, r in zip(pred, ref):
        n2 = np.linalg.norm(r)
        ninf = np.max(np.abs(r))
        if n2 == 0.0 or ninf == 0.0:
            raise ValueError("reference frame has zero norm")
        e2.append(np.linalg.norm(p - r) / n2)
        einf.append(np.max(np.abs(p - r)) / ninf)
    return float(np.mean(e2)), float(np.mean(einf))


def evaluate(model: OperatorModel, ics: np.ndarray, references: np.ndarray,
             frames: int = 10, horizon: float = 2.0) -> dict:
    """Score the model on stored test data.

    ``ics`` is (n, P); ``references`` is (n, frames, P), the solver frames
    at times horizon*k/frames, k = 1..frames.
    """
    times = [horizon * k / frames for k in range(1, frames + 1)]
    u0 = torch.from_numpy(np.asarray(ics)).to(torch.float32)
    pred = model.predict_frames(u0, times).numpy()  # (frames, n, P)
    per_ic = [trajectory_errors(pred[:, i, :], references[i]) for i in range(len(ics))]
    e2 = float(np.mean([a for a, _ in per_ic]))
    einf = float(np.mean([b for _, b in per_ic]))
    return {"e_l2": e2, "e_linf": einf, "count": len(ics)}
