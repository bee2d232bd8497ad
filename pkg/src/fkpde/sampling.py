"""Initial-condition samplers: random sine series (1D) and a periodic
Gaussian random field (2D).

Both are deterministic functions of (spec, seed): pass a seeded
``numpy.random.Generator`` and you get the same field back every time.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import Field, Grid


def fourier_series_field(coefficients, grid: Grid) -> Field:
    """Evaluate sum_n a_n sin(2*pi*n*x) on a 1D grid (n = 1..len(a))."""
    if grid.dim != 1:
        raise ValueError("sine-series fields are 1D")
    a = np.asarray(coefficients, dtype=np.float64)
    x = grid.axis_coords(0)
    n = np.arange(1, a.size + 1)
    vals = np.sin(2.0 * np.pi * np.outer(x, n)) @ a
    return Field(grid, vals)


def sample_fourier_ic(N: int, grid: Grid, rng: np.random.Generator, coefficients=None) -> Field:
    """Draw a_n ~ U(0,1), n = 1..N, and synthesize the sine series.

    ``coefficients`` overrides the draw (test hook for pinning a_n).
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    if grid.dim != 1:
        raise ValueError("sine-series initial conditions are 1D only")
    a = rng.uniform(0.0, 1.0, size=N) if coefficients is None else np.asarray(coefficients, float)
    return fourier_series_field(a, grid)


@dataclass(frozen=True)
class GrfSpec:
    """Periodic Gaussian random field with per-mode variance
    amplitude * (4*pi^2*|k|^2 + tau^2)^(-alpha), |k| in integer wavevectors.

    The k = 0 mode is zeroed, so samples have exact zero spatial mean, and
    the variance of any retained mode is resolution independent.
    """

    tau: float = 7.0
    alpha: float = 2.5
    amplitude: float = 7.0 ** 1.5

    def mode_variance(self, ksq) -> np.ndarray:
        ksq = np.asarray(ksq, dtype=np.float64)
        w = self.amplitude * (4.0 * np.pi ** 2 * ksq + self.tau ** 2) ** (-self.alpha)
        return np.where(ksq == 0, 0.0, w)


def sample_grf(spec: GrfSpec, grid: Grid, rng: np.random.Generator) -> Field:
    """One real sample of the field on a 2D periodic grid."""
    if grid.dim != 2 or not grid.boundary.is_periodic:
        raise ValueError("the Gaussian random field sampler needs a 2D periodic grid")
    P1, P2 = grid.resolution
    k1 = np.fft.fftfreq(P1, d=1.0 / P1)
    k2 = np.fft.fftfreq(P2, d=1.0 / P2)
    ksq = k1[:, None] ** 2 + k2[None, :] ** 2
    std = np.sqrt(spec.mode_variance(ksq))

    z = rng.standard_normal((P1, P2)) + 1j * rng.standard_normal((P1, P2))
    coef = std * z / np.sqrt(2.0)
    # Hermitianize so the synthesis is real while keeping E|c_k|^2 = variance.
    flipped = np.conj(coef[(-np.arange(P1)) % P1][:, (-np.arange(P2)) % P2])
    coef = (coef + flipped) / np.sqrt(2.0)

    u = np.fft.ifft2(coef) * (P1 * P2)
    if np.max(np.abs(u.imag)) > 1e-10 * max(1.0, np.max(np.abs(u.real))):
        raise FloatingPointError("Hermitian symmetry failed to produce a real field")
    return Field(grid, u.real).check_finite()
