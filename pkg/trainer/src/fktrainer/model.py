"""A small 1D spectral neural operator mapping (u0, t) -> u_t.

Four Fourier layers of width 32 keeping the lowest 12 modes, with the
query time fed as a broadcast channel next to the initial state and the
grid coordinate. The t = 0 output is the identity by convention and is
never queried from the network.

Tensors run in (batch, point, channel) layout with plain Linear maps for
the pointwise paths; on a single CPU core this is several times faster
than 1x1 convolutions.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
import torch.nn as nn


@dataclass
class ModelConfig:
    modes: int = 12
    width: int = 32
    layers: int = 4
    resolution: int = 64
    head_width: int = 64

    def __post_init__(self):
        if self.modes > self.resolution // 2:
            raise ValueError("modes must not exceed resolution/2")


def _gelu(x):
    return nn.functional.gelu(x, approximate="tanh")


class SpectralConv1d(nn.Module):
    def __init__(self, width: int, modes: int):
        super().__init__()
        self.modes = modes
        scale = 1.0 / (width * width)
        self.weight = nn.Parameter(
            scale * torch.randn(width, width, modes, dtype=torch.cfloat))

    def forward(self, x):
        # x: (batch, P, width); transform along the point axis
        xh = torch.fft.rfft(x, dim=1)
        low = torch.einsum("bmi,iom->bmo", xh[:, :self.modes], self.weight)
        # irfft zero-pads the dropped modes implicitly
        return torch.fft.irfft(low, n=x.shape[1], dim=1)


class OperatorModel(nn.Module):
    def __init__(self, config: ModelConfig):
        super().__init__()
        self.config = config
        P = config.resolution
        self.register_buffer("xgrid", torch.arange(P, dtype=torch.float32) / P)
        self.lift = nn.Linear(3, config.width)
        self.spectral = nn.ModuleList(
            SpectralConv1d(config.width, config.modes) for _ in range(config.layers))
        self.pointwise = nn.ModuleList(
            nn.Linear(config.width, config.width) for _ in range(config.layers))
        self.head1 = nn.Linear(config.width, config.head_width)
        self.head2 = nn.Linear(config.head_width, 1)

    def forward(self, u0: torch.Tensor, t: torch.Tensor) -> torch.Tensor:
        # u0: (batch, P); t: (batch,) query times
        b, P = u0.shape
        feats = torch.stack([
            u0,
            t[:, None].expand(b, P),
            self.xgrid[None, :].expand(b, P),
        ], dim=-1)
        h = self.lift(feats)
        for spec, pw in zip(self.spectral, self.pointwise):
            h = _gelu(spec(h) + pw(h))
        return self.head2(_gelu(self.head1(h)))[..., 0]

    def predict_frames(self, u0: torch.Tensor, times) -> torch.Tensor:
        """Evaluate at several query times -> (len(times), batch, P)."""
        with torch.no_grad():
            out = []
            for t in times:
                tt = torch.full((u0.shape[0],), float(t), dtype=u0.dtype)
                out.append(self.forward(u0, tt))
        return torch.stack(out)


def parameter_count(model: nn.Module) -> int:
    return sum(p.numel() for p in model.parameters())
