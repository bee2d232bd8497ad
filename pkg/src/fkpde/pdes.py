"""Benchmark PDE definitions on the common template

    du/dt = beta[u] . grad(u) + kappa * Lap(u) + f(x, t)

Three variants are provided: linear convection-diffusion (constant drift),
Allen-Cahn (no drift, the reaction u - u^3 folded into the forcing), and
2D incompressible Navier-Stokes in vorticity form, where the drift is
minus the velocity recovered from the vorticity through a streamfunction
Poisson solve.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .grid import BoundaryKind, Field, Grid, make_grid

LI = "li"
KOLMOGOROV = "kolmogorov"


@dataclass(frozen=True)
class ConvectionDiffusion:
    beta: float
    kappa: float


@dataclass(frozen=True)
class AllenCahn:
    boundary: BoundaryKind
    kappa: float = 0.01


@dataclass(frozen=True)
class NavierStokesVorticity:
    nu: float
    forcing: str  # LI or KOLMOGOROV


Variant = Union[ConvectionDiffusion, AllenCahn, NavierStokesVorticity]


@dataclass(frozen=True)
class PdeSpec:
    kind: Variant
    grid: Grid
    horizon: float
    frames: int = 10

    def __post_init__(self):
        k = self.kind
        if isinstance(k, ConvectionDiffusion):
            if k.kappa < 0:
                # kappa == 0 is legal: the propagator degenerates to a pure
                # semi-Lagrangian step (and the MC estimator to one sample)
                raise ValueError("kappa must be nonnegative")
            if not self.grid.boundary.is_periodic or self.grid.dim != 1:
                raise ValueError("convection-diffusion runs on a 1D periodic grid")
        elif isinstance(k, AllenCahn):
            if k.kappa <= 0:
                raise ValueError("kappa must be positive")
            if k.boundary not in (BoundaryKind.DIRICHLET_ZERO, BoundaryKind.NEUMANN_ZERO):
                raise ValueError("Allen-Cahn needs a Dirichlet or Neumann boundary")
            if self.grid.boundary != k.boundary or self.grid.dim != 1:
                raise ValueError("Allen-Cahn grid must be 1D with the matching bounded boundary")
        elif isinstance(k, NavierStokesVorticity):
            if k.nu <= 0:
                raise ValueError("nu must be positive")
            if k.forcing not in (LI, KOLMOGOROV):
                raise ValueError(f"unknown forcing {k.forcing!r}")
            if not self.grid.boundary.is_periodic or self.grid.dim != 2:
                raise ValueError("Navier-Stokes runs on a 2D periodic grid")
        else:
            raise TypeError(f"unknown PDE variant {type(k).__name__}")
        if self.horizon <= 0 or self.frames < 1:
            raise ValueError("horizon must be positive and frames >= 1")

    @property
    def diffusivity(self) -> float:
        k = self.kind
        return k.nu if isinstance(k, NavierStokesVorticity) else k.kappa

    @property
    def drift_is_state_dependent(self) -> bool:
        return isinstance(self.kind, NavierStokesVorticity)

    @property
    def forcing_is_state_dependent(self) -> bool:
        return isinstance(self.kind, AllenCahn)

    def header(self) -> dict:
        k = self.kind
        if isinstance(k, ConvectionDiffusion):
            body = {"pde": "convdiff", "beta": k.beta, "kappa": k.kappa}
        elif isinstance(k, AllenCahn):
            body = {"pde": "allencahn", "kappa": k.kappa, "boundary": k.boundary.value}
        else:
            body = {"pde": "navierstokes", "nu": k.nu, "forcing": k.forcing}
        body.update({"T": self.horizon, "frames": self.frames})
        return body


def pde_from_header(h: dict, grid: Grid) -> PdeSpec:
    name = h["pde"]
    if name == "convdiff":
        kind = ConvectionDiffusion(beta=float(h["beta"]), kappa=float(h["kappa"]))
    elif name == "allencahn":
        kind = AllenCahn(boundary=BoundaryKind(h["boundary"]), kappa=float(h["kappa"]))
    elif name == "navierstokes":
        kind = NavierStokesVorticity(nu=float(h["nu"]), forcing=h["forcing"])
    else:
        raise ValueError(f"unknown pde {name!r}")
    return PdeSpec(kind, grid, float(h["T"]), int(h.get("frames", 10)))


def _wavenumbers(grid: Grid):
    """Integer wavevectors per axis, plus derivative multipliers with the
    unpaired Nyquist frequency zeroed (its spectral derivative has no real
    representation; zeroing it is the standard convention)."""
    P1, P2 = grid.resolution
    L1, L2 = grid.extent
    k1 = np.fft.fftfreq(P1, d=1.0 / P1) / L1
    k2 = np.fft.fftfreq(P2, d=1.0 / P2) / L2
    d1, d2 = k1.copy(), k2.copy()
    if P1 % 2 == 0:
        d1[P1 // 2] = 0.0
    if P2 % 2 == 0:
        d2[P2 // 2] = 0.0
    return k1[:, None], k2[None, :], d1[:, None], d2[None, :]


def velocity_from_vorticity(omega: Field) -> Field:
    """Recover the divergence-free velocity with curl(u) = omega - mean(omega).

    Solves Lap(psi) = -omega spectrally (zeroing the k = 0 streamfunction
    mode, i.e. zero mean flow) and takes u = (dpsi/dx2, -dpsi/dx1).
    """
    grid = omega.grid
    if grid.dim != 2 or not grid.boundary.is_periodic:
        raise ValueError("vorticity inversion needs a 2D periodic grid")
    k1, k2, d1, d2 = _wavenumbers(grid)
    ksq = k1 ** 2 + k2 ** 2
    w_hat = np.fft.fft2(omega.values)
    inv = np.zeros_like(ksq)
    np.divide(1.0, 4.0 * np.pi ** 2 * ksq, out=inv, where=ksq > 0)
    psi_hat = w_hat * inv
    u1 = np.fft.ifft2(2j * np.pi * d2 * psi_hat).real
    u2 = np.fft.ifft2(-2j * np.pi * d1 * psi_hat).real
    return Field(grid, np.stack([u1, u2])).check_finite()


def vorticity_from_velocity(vel: Field) -> Field:
    """Spectral curl d(u2)/dx1 - d(u1)/dx2 (test oracle for the inversion)."""
    grid = vel.grid
    _, _, d1, d2 = _wavenumbers(grid)
    u1_hat = np.fft.fft2(vel.values[0])
    u2_hat = np.fft.fft2(vel.values[1])
    w = np.fft.ifft2(2j * np.pi * d1 * u2_hat - 2j * np.pi * d2 * u1_hat).real
    return Field(grid, w)


def drift(pde: PdeSpec, state: Field) -> Field:
    """Drift field beta[u] on the pde's grid for the given state."""
    k = pde.kind
    if isinstance(k, ConvectionDiffusion):
        return Field(pde.grid, np.full(pde.grid.resolution, k.beta))
    if isinstance(k, AllenCahn):
        return Field(pde.grid, np.zeros(pde.grid.resolution))
    vel = velocity_from_vorticity(state)
    return Field(pde.grid, -vel.values)


def stationary_forcing(name: Optional[str], points: np.ndarray) -> np.ndarray:
    """The two time-independent 2D forcings at points (N, 2) -> (N,)."""
    points = np.atleast_2d(points)
    if name is None:
        return np.zeros(points.shape[0])
    if name == LI:
        s = 2.0 * np.pi * (points[:, 0] + points[:, 1])
        return 0.1 * (np.sin(s) + np.cos(s))
    if name == KOLMOGOROV:
        return 0.1 * np.cos(8.0 * np.pi * points[:, 0])
    raise ValueError(f"unknown forcing {name!r}")


def forcing_values(pde: PdeSpec, points: np.ndarray, t: float,
                   state_values: Optional[np.ndarray] = None) -> np.ndarray:
    """Forcing f at arbitrary points (N, dim) -> (N,).

    The Allen-Cahn reaction u - u^3 needs the state evaluated at those
    points; pass it via ``state_values``.
    """
    k = pde.kind
    points = np.atleast_2d(points)
    if isinstance(k, ConvectionDiffusion):
        return np.zeros(points.shape[0])
    if isinstance(k, AllenCahn):
        if state_values is None:
            raise ValueError("the reaction forcing needs the state at the query points")
        u = np.asarray(state_values, dtype=np.float64)
        return u - u ** 3
    return stationary_forcing(k.forcing, points)


def forcing_value(pde: PdeSpec, x, t: float, state_value=None) -> float:
    """Scalar convenience wrapper around :func:`forcing_values`."""
    sv = None if state_value is None else np.asarray([state_value], float)
    return float(forcing_values(pde, np.atleast_2d(x), t, sv)[0])


def convdiff_case(case: str, resolution: int = 64, horizon: float = 2.0, frames: int = 10) -> tuple[PdeSpec, int]:
    """(PdeSpec, N) for the four 1D convection-diffusion settings E1..E4."""
    table = {"E1": (0.005, 5), "E2": (0.01, 5), "E3": (0.005, 10), "E4": (0.01, 10)}
    kappa, N = table[case]
    grid = make_grid(1, resolution, 1.0, BoundaryKind.PERIODIC)
    return PdeSpec(ConvectionDiffusion(beta=0.1, kappa=kappa), grid, horizon, frames), N


def allencahn_case(case: str, resolution: int = 65, horizon: float = 1.0, frames: int = 10) -> tuple[PdeSpec, int]:
    """(PdeSpec, N) for the four 1D Allen-Cahn settings E1..E4."""
    table = {
        "E1": (5, BoundaryKind.DIRICHLET_ZERO), "E2": (10, BoundaryKind.DIRICHLET_ZERO),
        "E3": (5, BoundaryKind.NEUMANN_ZERO), "E4": (10, BoundaryKind.NEUMANN_ZERO),
    }
    N, boundary = table[case]
    grid = make_grid(1, resolution, 1.0, boundary)
    return PdeSpec(AllenCahn(boundary=boundary), grid, horizon, frames), N


def navierstokes_case(case: str, resolution: int = 64, horizon: float = 10.0, frames: int = 10) -> PdeSpec:
    """PdeSpec for the four 2D Navier-Stokes settings E1..E4."""
    table = {"E1": (1e-4, LI), "E2": (1e-5, LI), "E3": (1e-4, KOLMOGOROV), "E4": (1e-5, KOLMOGOROV)}
    nu, forcing = table[case]
    grid = make_grid(2, resolution, 1.0, BoundaryKind.PERIODIC)
    return PdeSpec(NavierStokesVorticity(nu=nu, forcing=forcing), grid, horizon, frames)
